// errors.hpp - exception types shared across the solver stack
//
// This software is licensed under the terms of the Apache Licence Version 2.0
// which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.

#pragma once

#include <stdexcept>
#include <string>

namespace qdd {

/// Malformed configuration file or inconsistent run parameters.
class config_error : public std::runtime_error {
public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// The flux-conservation condition of the coupled layer problem is violated
/// beyond tolerance (no bounded solution exists).
class solvability_error : public std::runtime_error {
public:
  explicit solvability_error(const std::string& what) : std::runtime_error(what) {}
};

/// An iterative solve failed to reach its tolerance within the sweep budget.
class convergence_error : public std::runtime_error {
public:
  explicit convergence_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qdd
