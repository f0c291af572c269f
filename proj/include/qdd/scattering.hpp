// scattering.hpp - Dirac scattering data for steep potential profiles
//
// This software is licensed under the terms of the Apache Licence Version 2.0
// which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.

#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace qdd {

/// Point z = (|p|, phi, s) in pseudomomentum-chirality space (scaled c = 1,
/// so the signed energy is E = s |p|).
struct PhaseState {
  double p_mod = 0.0;   // |p| >= 0
  double phi = 0.0;     // angle of p in [0, 2 pi)
  int s = +1;           // chirality

  double energy() const { return s * p_mod; }
  double mu() const { return std::cos(phi); }       // scaled v_x
  double p_y() const { return p_mod * std::sin(phi); }
  double p_x() const { return p_mod * std::cos(phi); }
};

/// Piecewise-constant quantum potential: asymptotic value 0 on the left,
/// delta_V on the right, with optional interior segments (width, value).
struct PotentialProfile {
  struct Segment {
    double width = 0.0;
    double value = 0.0;
  };
  std::vector<Segment> segments;
  double delta_V = 0.0;

  void validate() const;
  bool is_pure_step() const { return segments.empty(); }
};

struct StepCoefficients {
  double T = 0.0;
  double R = 1.0;
  std::optional<double> theta;  // transmission angle, when propagating
};

/// Transmission through a sharp potential step for a Dirac electron with
/// energy E incident at angle phi.  The transmission angle solves the signed
/// Snell law E sin(phi) = (E - delta_V) sin(theta); beyond the critical angle
/// T = 0 (total reflection).  E = 0 and E = delta_V are cone apices where the
/// chirality is undefined.
StepCoefficients step_coefficients(double E, double phi, double delta_V);

/// Transmission/reflection through a piecewise-constant profile by matching
/// two-component plane waves at every jump (evanescent segments carry real
/// exponentials).  Returns (T, R) with T + R = 1; a non-propagating exterior
/// state gives T = 0, R = 1.
std::pair<double, double> transfer_matrix_coefficients(const PotentialProfile& profile,
                                                       double E, double p_y);

/// Partner state across the interface: same p_y, energy shifted by the
/// conservation law E(z) = E(z') + (-1)^j delta_V, x-direction in the
/// complementary half-range.  Empty when the partner is evanescent or sits
/// at the cone apex.
std::optional<PhaseState> partner_state(const PhaseState& z, int from_side, double delta_V);

/// Scattering data evaluator for both sides of the interface.
class ScatteringTable {
public:
  ScatteringTable() = default;
  explicit ScatteringTable(PotentialProfile profile);

  /// Transmission at (E, p_y) incident from side i in {1,2}.  E is the local
  /// signed energy on side i.
  double transmission(int side, double E, double p_y) const;
  double reflection(int side, double E, double p_y) const { return 1.0 - transmission(side, E, p_y); }

  /// Transmission for the energy pair identified by its side-1 energy.
  /// Evaluating every discrete coupling through this single function makes
  /// the reciprocity property exact at the operator level.
  double pair_transmission(double E_side1, double p_y) const {
    return transmission(1, E_side1, p_y);
  }

  double delta_V() const { return profile_.delta_V; }
  bool closed_form() const { return profile_.is_pure_step(); }
  const PotentialProfile& profile() const { return profile_; }

private:
  PotentialProfile profile_;
};

/// Grid report of the scattering properties: unitarity (P1), p_y symmetry
/// (P2) and reciprocity under the partner map (P3).
struct ScatteringReport {
  double max_unitarity = 0.0;
  double max_bounds = 0.0;      // excess of T or R outside [0,1]
  double max_symmetry = 0.0;
  double max_reciprocity = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::string summary() const;
};

/// Validate P1-P3 on a sample grid of n_E x n_py points.  The pass threshold
/// is 1e-10 for the closed-form step and 1e-8 for transfer-matrix tables.
ScatteringReport validate_scattering(const ScatteringTable& table, int n_E = 100,
                                     int n_py = 50, double E_max = 8.0);

}  // namespace qdd
