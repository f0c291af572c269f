// fermi.hpp - Fermi integrals, their inversion, and equilibrium distributions
//
// This software is licensed under the terms of the Apache Licence Version 2.0
// which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.

#pragma once

#include <cmath>

namespace qdd {

// Everything in this header works in scaled units: energies in k_B*T
// (beta = 1), velocities in units of the Fermi speed (c = 1) and densities
// in units of the reference density n_0.

/// Chemical potentials are capped at |A| <= A_CAP; outside this range the
/// occupation numbers are indistinguishable from their limits in double
/// precision and the inversion reports saturation instead of extrapolating.
inline constexpr double kChemicalPotentialCap = 40.0;

/// Fermi integral phi_k(z) = (1/Gamma(k)) \int_0^inf t^{k-1}/(e^{t-z}+1) dt.
/// Strictly increasing in z, positive. Requires k > 0 and finite arguments.
double fermi_integral(double k, double z);

/// phi_1(z) = ln(1 + e^z), evaluated without overflow.
double fermi_phi1(double z);

/// Inverse of phi_2: returns A with phi_2(A) = x (relative residual <= 1e-12).
/// Throws std::domain_error for x <= 0 or when |A| would exceed the cap.
double inverse_fermi2(double x);

/// Fermi-Dirac occupation 1/(e^{eps-A}+1) for scaled radial energy eps >= 0.
double fd_occupation(double eps, double A);

/// Density derivative of the Fermi-Dirac distribution with density n:
/// F_n(eps)^2 e^{eps-A(n)} / phi_1(A(n)).  Positive; <F'_n> = 1.
double fd_density_derivative(double eps, double n);

/// Same quantity when the chemical potential is already known.
double fd_density_derivative_at(double eps, double A);

/// Normalised Maxwellian e^{-eps}; <M> = 1.
double maxwellian(double eps);

}  // namespace qdd
