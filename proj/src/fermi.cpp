// fermi.cpp - Fermi integrals, their inversion, and equilibrium distributions
//
// This software is licensed under the terms of the Apache Licence Version 2.0
// which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.

#include "qdd/fermi.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qdd/gauss.hpp"

namespace qdd {

namespace {

// Logistic sigma(x) = 1/(1+e^{-x}) evaluated without overflow.
double logistic(double x) {
  if (x > 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Nondegenerate expansion phi_k(z) = sum_{j>=1} (-1)^{j+1} e^{jz} / j^k,
// convergent for z < 0 (geometrically in e^z).
double fermi_series(double k, double z) {
  double sum = 0.0;
  for (int j = 1; j <= 2000; ++j) {
    const double term = std::exp(j * z) / std::pow(static_cast<double>(j), k);
    sum += (j % 2 == 1) ? term : -term;
    if (term < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

// phi_2 via the dilogarithm inversion phi_2(z) + phi_2(-z) = z^2/2 + pi^2/6
// and the Maclaurin expansion of \int_0^z ln(1 + e^u) du near zero.  Exact
// to machine precision everywhere; phi_2 sits in the hot path of the
// chemical-potential inversion.
double phi2_exact(double z) {
  if (z <= -0.25) return fermi_series(2.0, z);
  if (z >= 0.25) return 0.5 * z * z + M_PI * M_PI / 6.0 - phi2_exact(-z);
  const double z2 = z * z;
  return M_PI * M_PI / 12.0 + std::log(2.0) * z + 0.25 * z2 +
         z * z2 * (1.0 / 24.0 + z2 * (-1.0 / 960.0 + z2 * (1.0 / 20160.0 -
         z2 * (17.0 / 5806080.0))));
}

// General-order evaluation of \int_0^inf t^{k-1}/(e^{t-z}+1) dt for z > -2.
// The endpoint singularity of t^{k-1} on [0,1] is absorbed by a tanh-sinh
// rule; the tail is smooth and handled by Gauss panels.  Beyond
// t = max(0,z) + 45 the integrand is below e^{-45} relative.
double fermi_quadrature(double k, double z) {
  double sum = 0.0;
  const double h = 0.08;
  for (int j = -60; j <= 60; ++j) {
    const double u = j * h;
    const double s = std::sinh(u);
    const double t = 1.0 / (1.0 + std::exp(-M_PI * s));
    if (t <= 0.0 || t >= 1.0) continue;
    const double sech = 1.0 / std::cosh(0.5 * M_PI * s);
    const double w = h * 0.25 * M_PI * std::cosh(u) * sech * sech;
    if (w < 1e-300) continue;
    sum += w * std::pow(t, k - 1.0) * logistic(z - t);
  }

  const double t_max = std::max(0.0, z) + 45.0;
  const double panel = 3.0;
  double a = 1.0;
  while (a < t_max) {
    const double b = std::min(a + panel, t_max);
    const GaussRule g = gauss_legendre(24, a, b);
    for (int i = 0; i < 24; ++i) {
      sum += g.w[i] * std::pow(g.x[i], k - 1.0) * logistic(z - g.x[i]);
    }
    a = b;
  }
  return sum;
}

}  // namespace

double fermi_integral(double k, double z) {
  if (!(k > 0.0) || !std::isfinite(k)) {
    throw std::domain_error("fermi_integral: order k must be positive and finite");
  }
  if (!std::isfinite(z)) {
    throw std::domain_error("fermi_integral: argument z must be finite");
  }
  if (k == 2.0) return phi2_exact(z);
  if (k == 1.0) return fermi_phi1(z);
  if (z <= -2.0) {
    return fermi_series(k, z);
  }
  return fermi_quadrature(k, z) / std::tgamma(k);
}

double fermi_phi1(double z) {
  // ln(1 + e^z), exact closed form of phi_1
  if (z > 36.0) return z + std::exp(-z);
  if (z < -36.0) return std::exp(z);
  return std::log1p(std::exp(z));
}

double inverse_fermi2(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw std::domain_error("inverse_fermi2: argument must be positive and finite");
  }
  const double cap = kChemicalPotentialCap;
  const double x_lo = fermi_integral(2.0, -cap);
  const double x_hi = fermi_integral(2.0, cap);
  if (x < x_lo || x > x_hi) {
    throw std::domain_error(
        "inverse_fermi2: chemical potential saturates (|A| > 40 in scaled units)");
  }

  // Initial guess: nondegenerate ln(x) for small x, degenerate sqrt asymptote
  // phi_2(A) ~ A^2/2 + pi^2/6 for large x.
  double A;
  if (x < 0.7) {
    A = std::log(x);
  } else {
    A = std::sqrt(std::max(2.0 * (x - M_PI * M_PI / 6.0), 1e-12));
  }
  A = std::clamp(A, -cap, cap);

  // Safeguarded Newton: phi_2' = phi_1 exactly.
  double lo = -cap, hi = cap;
  for (int it = 0; it < 100; ++it) {
    const double f = fermi_integral(2.0, A) - x;
    if (f > 0.0) hi = A; else lo = A;
    if (std::abs(f) <= 1e-13 * std::max(1.0, x)) return A;
    const double step = f / fermi_phi1(A);
    double next = A - step;
    if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
    if (next == A) return A;
    A = next;
  }
  return A;
}

double fd_occupation(double eps, double A) {
  if (eps < 0.0 || !std::isfinite(eps)) {
    throw std::domain_error("fd_occupation: radial energy must be >= 0");
  }
  return logistic(A - eps);
}

double fd_density_derivative_at(double eps, double A) {
  if (eps < 0.0 || !std::isfinite(eps)) {
    throw std::domain_error("fd_density_derivative: radial energy must be >= 0");
  }
  // F^2 e^{eps-A} = sigma(A-eps) sigma(eps-A), stable in both tails.
  const double h = eps - A;
  const double w = std::exp(-std::abs(h));
  const double core = w / ((1.0 + w) * (1.0 + w));
  return core / fermi_phi1(A);
}

double fd_density_derivative(double eps, double n) {
  if (!(n > 0.0)) {
    throw std::domain_error("fd_density_derivative: density must be positive");
  }
  return fd_density_derivative_at(eps, inverse_fermi2(n));
}

double maxwellian(double eps) {
  if (eps < 0.0 || !std::isfinite(eps)) {
    throw std::domain_error("maxwellian: radial energy must be >= 0");
  }
  return std::exp(-eps);
}

}  // namespace qdd
