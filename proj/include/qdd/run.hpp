// run.hpp - produce the file artifacts of one configured run
//
// This software is licensed under the terms of the Apache Licence Version 2.0
// which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.

#pragma once

#include <string>

#include "qdd/config.hpp"
#include "qdd/device.hpp"
#include "qdd/milne.hpp"
#include "qdd/scattering.hpp"

namespace qdd {

/// Scattering table dump + property report.  Writes scatter.csv and
/// scatter_report.json into `dir`.  Returns the property report.
ScatteringReport run_scatter(const RunConfig& cfg, const std::string& dir);

/// Layer-problem run.  For the single-side cases writes theta_profile.csv
/// (xi, phi, theta) and milne.json (n_inf, decay fit); for milne.case =
/// currents solves the coupled problem and writes milne.json with the four
/// gauge-fixed asymptotic densities and the gauge declaration.
void run_milne(const RunConfig& cfg, const std::string& dir);

/// Full device solve.  Writes fields.csv, interface.csv, convergence.csv
/// and observables.json.  Returns the observables.
DeviceObservables run_solve(const RunConfig& cfg, const std::string& dir);

/// Create `dir` (and parents) if needed.
void ensure_dir(const std::string& dir);

}  // namespace qdd
