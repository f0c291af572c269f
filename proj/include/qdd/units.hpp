// units.hpp - physical parameters and the scaled-unit convention
//
// This software is licensed under the terms of the Apache Licence Version 2.0
// which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.

#pragma once

#include <cmath>
#include <stdexcept>

namespace qdd {

/// Physical parameters of a run.  The potential jump delta_V and the
/// relaxation time tau are already dimensionless (beta*deltaV and the scaled
/// collision time); everything downstream works in scaled units.
struct PhysicalConfig {
  double temperature = 300.0;        // K
  double fermi_velocity = 1.0e6;     // m/s
  double hbar = 1.054571817e-34;     // J s
  double delta_V = 0.0;              // beta * deltaV (dimensionless)
  double tau = 0.0;                  // scaled relaxation time
  double half_length_L = 1.0;        // scaled device half-length
  double half_width_l = 0.5;         // scaled device half-width

  void validate() const {
    if (!(temperature > 0.0)) throw std::domain_error("temperature must be > 0");
    if (!(fermi_velocity > 0.0)) throw std::domain_error("fermi_velocity must be > 0");
    if (!(hbar > 0.0)) throw std::domain_error("hbar must be > 0");
    if (tau < 0.0) throw std::domain_error("tau must be >= 0");
    if (!(half_length_L > 0.0) || !(half_width_l > 0.0))
      throw std::domain_error("device dimensions must be positive");
  }
};

/// Conversion factors between physical and scaled quantities.  Internally
/// beta = 1, c = 1 and n_0 = 1; scaled energies are in units of k_B T, scaled
/// momenta are beta*c*|p| and scaled densities are n/n_0 with
///   n_0 = (k_B T)^2 / (2 pi hbar^2 c^2).
class ScaledUnits {
public:
  explicit ScaledUnits(const PhysicalConfig& cfg) {
    cfg.validate();
    constexpr double k_B = 1.380649e-23;  // J/K
    energy_scale_ = k_B * cfg.temperature;                      // J per scaled energy
    momentum_scale_ = energy_scale_ / cfg.fermi_velocity;       // kg m/s
    const double denom = 2.0 * M_PI * cfg.hbar * cfg.hbar * cfg.fermi_velocity * cfg.fermi_velocity;
    n0_ = energy_scale_ * energy_scale_ / denom;                // 1/m^2
  }

  double reference_density() const { return n0_; }  // n_0 in 1/m^2
  double energy_scale() const { return energy_scale_; }
  double momentum_scale() const { return momentum_scale_; }

  double to_scaled_energy(double joule) const { return joule / energy_scale_; }
  double to_physical_energy(double scaled) const { return scaled * energy_scale_; }
  double to_scaled_density(double per_m2) const { return per_m2 / n0_; }
  double to_physical_density(double scaled) const { return scaled * n0_; }
  double to_scaled_momentum(double si) const { return si / momentum_scale_; }
  double to_physical_momentum(double scaled) const { return scaled * momentum_scale_; }

private:
  double energy_scale_ = 0.0;
  double momentum_scale_ = 0.0;
  double n0_ = 0.0;
};

}  // namespace qdd
