// fermi_test.cpp - Fermi-integral algebra against independent oracles
//
// This software is licensed under the terms of the Apache Licence Version 2.0
// which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.

#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "qdd/fermi.hpp"
#include "qdd/gauss.hpp"
#include "qdd/units.hpp"

using namespace qdd;

namespace {

// Test-side oracle: adaptive Simpson of the defining integrand, independent
// of the library's series/Gauss evaluation path.
double simpson(double (*f)(double, double, double), double k, double z, double a, double b) {
  const double c = 0.5 * (a + b);
  auto s = [&](double lo, double mid, double hi) {
    return (hi - lo) / 6.0 * (f(k, z, lo) + 4.0 * f(k, z, mid) + f(k, z, hi));
  };
  struct Rec {
    double (*g)(double, double, double);
    double k, z;
    double run(double lo, double mid, double hi, double whole, int depth) {
      const double lmid = 0.5 * (lo + mid), rmid = 0.5 * (mid + hi);
      auto seg = [&](double p, double q, double r) {
        return (r - p) / 6.0 * (g(k, z, p) + 4.0 * g(k, z, q) + g(k, z, r));
      };
      const double left = seg(lo, lmid, mid), right = seg(mid, rmid, hi);
      if (depth > 40 || std::abs(left + right - whole) < 1e-15 * (1.0 + std::abs(whole))) {
        return left + right + (left + right - whole) / 15.0;
      }
      return run(lo, lmid, mid, left, depth + 1) + run(mid, rmid, hi, right, depth + 1);
    }
  } rec{f, k, z};
  return rec.run(a, c, b, s(a, c, b), 0);
}

double fermi_integrand(double k, double z, double t) {
  if (t <= 0.0) return 0.0;
  const double x = t - z;
  const double occ = (x > 0.0) ? std::exp(-x) / (1.0 + std::exp(-x)) : 1.0 / (1.0 + std::exp(x));
  return std::pow(t, k - 1.0) * occ;
}

double phi_oracle(double k, double z) {
  const double t_max = std::max(0.0, z) + 50.0;
  double sum = 0.0;
  double a = 0.0;
  while (a < t_max) {
    const double b = std::min(a + 5.0, t_max);
    sum += simpson(fermi_integrand, k, z, a, b);
    a = b;
  }
  return sum / std::tgamma(k);
}

// Test-side oracle: truncated nondegenerate series.
double phi_series_oracle(double k, double z) {
  double sum = 0.0;
  for (int j = 1; j <= 60; ++j) {
    sum += ((j % 2 == 1) ? 1.0 : -1.0) * std::exp(j * z) / std::pow(j, k);
  }
  return sum;
}

}  // namespace

TEST_CASE("fermi integral special values") {
  // phi_2(0) = pi^2/12, phi_1(0) = ln 2
  CHECK(fermi_integral(2.0, 0.0) == doctest::Approx(M_PI * M_PI / 12.0).epsilon(1e-12));
  CHECK(fermi_integral(1.0, 0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  // quadrature oracle across the regime seam
  for (double z : {-6.0, -2.5, -2.0, -1.9, -0.5, 0.0, 1.0, 4.0, 15.0}) {
    for (double k : {1.0, 1.5, 2.0, 3.0}) {
      CHECK(fermi_integral(k, z) == doctest::Approx(phi_oracle(k, z)).epsilon(5e-12));
    }
  }
  // nondegenerate tail against the series oracle
  CHECK(fermi_integral(2.0, -20.0) ==
        doctest::Approx(phi_series_oracle(2.0, -20.0)).epsilon(1e-10));
  CHECK(std::abs(fermi_integral(2.0, -20.0) / std::exp(-20.0) - 1.0) < 1e-8);
}

TEST_CASE("fermi integral domain errors") {
  CHECK_THROWS_AS(fermi_integral(0.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(fermi_integral(-1.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(fermi_integral(2.0, std::nan("")), std::domain_error);
}

TEST_CASE("fermi integral monotone and phi_k' = phi_{k-1}") {
  double prev = 0.0;
  for (int i = 0; i <= 40; ++i) {
    const double z = -10.0 + 0.5 * i;
    const double v = fermi_integral(2.0, z);
    if (i > 0) CHECK(v > prev);
    prev = v;
    const double h = 1e-5;
    const double der = (fermi_integral(2.0, z + h) - fermi_integral(2.0, z - h)) / (2.0 * h);
    CHECK(der == doctest::Approx(fermi_integral(1.0, z)).epsilon(1e-6));
    CHECK(fermi_phi1(z) == doctest::Approx(fermi_integral(1.0, z)).epsilon(1e-11));
  }
}

TEST_CASE("inverse fermi2") {
  CHECK(inverse_fermi2(M_PI * M_PI / 12.0) == doctest::Approx(0.0).epsilon(1e-11));
  CHECK(std::abs(inverse_fermi2(1e-6) - std::log(1e-6)) < 1e-3);
  for (double x : {0.01, 1.0, 100.0}) {
    CHECK(fermi_integral(2.0, inverse_fermi2(x)) == doctest::Approx(x).epsilon(1e-12));
  }
  // monotone on a sample grid
  double prev = inverse_fermi2(1e-4);
  for (double x = 1e-3; x < 500.0; x *= 2.7) {
    const double a = inverse_fermi2(x);
    CHECK(a > prev);
    prev = a;
  }
  CHECK_THROWS_AS(inverse_fermi2(0.0), std::domain_error);
  CHECK_THROWS_AS(inverse_fermi2(-1.0), std::domain_error);
  // saturation outside the |A| <= 40 cap is reported, not extrapolated
  CHECK_THROWS_AS(inverse_fermi2(1e6), std::domain_error);
}

TEST_CASE("occupation and maxwellian basics") {
  CHECK(fd_occupation(1.3, 1.3) == doctest::Approx(0.5));
  CHECK(fd_occupation(0.0, 0.0) == doctest::Approx(0.5));
  double prev = 1.0;
  for (double e = 0.0; e < 50.0; e += 1.0) {
    const double v = fd_occupation(e, 2.0);
    CHECK(v <= prev);
    CHECK(v > 0.0);
    CHECK(v < 1.0);
    prev = v;
  }
  CHECK_THROWS_AS(fd_occupation(-0.1, 0.0), std::domain_error);
  CHECK(maxwellian(0.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(maxwellian(-1.0), std::domain_error);
}

TEST_CASE("bracket identities under Gauss-Legendre quadrature") {
  // <g> = \int_0^inf g eps deps for radial g (angular factor is exact)
  const GaussRule rad = gauss_legendre(160, 0.0, 40.0);
  auto bracket = [&](auto g) {
    double s = 0.0;
    for (size_t i = 0; i < rad.x.size(); ++i) s += rad.w[i] * rad.x[i] * g(rad.x[i]);
    return s;
  };

  CHECK(bracket([](double e) { return maxwellian(e); }) == doctest::Approx(1.0).epsilon(1e-10));

  for (double n : {0.1, 1.0, 10.0}) {
    CHECK(bracket([&](double e) { return fd_density_derivative(e, n); }) ==
          doctest::Approx(1.0).epsilon(1e-9));
    // <F_n> = n reproduces the density
    const double A = inverse_fermi2(n);
    CHECK(bracket([&](double e) { return fd_occupation(e, A); }) ==
          doctest::Approx(n).epsilon(1e-9));
    // <F''_n> = 0 via central differencing in n
    const double h = 1e-5 * n;
    const double d2 = (bracket([&](double e) { return fd_density_derivative(e, n + h); }) -
                       bracket([&](double e) { return fd_density_derivative(e, n - h); })) /
                      (2.0 * h);
    CHECK(std::abs(d2) < 1e-6);
  }

  // nondegenerate limit: F'_n -> Maxwellian pointwise
  for (double e : {0.0, 0.7, 2.0, 6.0}) {
    CHECK(fd_density_derivative(e, 1e-4) ==
          doctest::Approx(maxwellian(e)).epsilon(1e-3));
  }

  // <v (x) v M> = I/2 in scaled units: radial part 1, angular \int cos^2 = 1/2
  const int K = 64;
  double vxx = 0.0, vxy = 0.0;
  for (int k = 0; k < K; ++k) {
    const double phi = 2.0 * M_PI * (k + 0.5) / K;
    vxx += std::cos(phi) * std::cos(phi) / K;
    vxy += std::cos(phi) * std::sin(phi) / K;
  }
  const double radial = bracket([](double e) { return maxwellian(e); });
  CHECK(radial * vxx == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(std::abs(radial * vxy) < 1e-15);
}

TEST_CASE("scaled unit round trips") {
  PhysicalConfig cfg;
  cfg.temperature = 305.0;
  ScaledUnits u(cfg);
  CHECK(u.reference_density() > 0.0);
  for (double v : {1e-3, 1.0, 4.2e8}) {
    CHECK(u.to_scaled_density(u.to_physical_density(v)) == doctest::Approx(v).epsilon(1e-14));
    CHECK(u.to_physical_energy(u.to_scaled_energy(v)) == doctest::Approx(v).epsilon(1e-14));
    CHECK(u.to_scaled_momentum(u.to_physical_momentum(v)) == doctest::Approx(v).epsilon(1e-14));
  }
  PhysicalConfig bad = cfg;
  bad.temperature = -1.0;
  CHECK_THROWS_AS(ScaledUnits{bad}, std::domain_error);
}
