// scattering_test.cpp - step formula, transfer matrix and partner map
//
// This software is licensed under the terms of the Apache Licence Version 2.0
// which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.

#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "qdd/scattering.hpp"

using namespace qdd;

TEST_CASE("step coefficients reference points") {
  // normal incidence Klein tunneling
  auto c = step_coefficients(2.0, 0.0, 1.0);
  CHECK(c.T == doctest::Approx(1.0).epsilon(1e-14));
  REQUIRE(c.theta.has_value());
  CHECK(*c.theta == doctest::Approx(0.0));

  // total reflection branch: |sin(pi/4)| = 0.707 >= |E - dV|/|E| = 0.5
  auto r = step_coefficients(1.0, M_PI / 4.0, 1.5);
  CHECK(r.T == 0.0);
  CHECK(r.R == 1.0);
  CHECK_FALSE(r.theta.has_value());

  // oblique transmission: theta = asin(2 sin 20deg), direct evaluation
  const double phi = 20.0 * M_PI / 180.0;
  auto t = step_coefficients(2.0, phi, 1.0);
  const double theta = std::asin(2.0 * std::sin(phi));
  CHECK(theta * 180.0 / M_PI == doctest::Approx(43.160).epsilon(1e-4));
  REQUIRE(t.theta.has_value());
  CHECK(*t.theta == doctest::Approx(theta).epsilon(1e-14));
  const double T_ref = 2.0 * std::cos(phi) * std::cos(theta) / (1.0 + std::cos(phi + theta));
  CHECK(t.T == doctest::Approx(T_ref).epsilon(1e-14));
  CHECK(t.T == doctest::Approx(0.944).epsilon(1e-3));
  CHECK(t.T + t.R == doctest::Approx(1.0).epsilon(1e-15));

  // Veselago regime: 0 < E < dV gives opposite-sign angles
  auto v = step_coefficients(0.5, 0.3, 1.0);
  REQUIRE(v.theta.has_value());
  CHECK(*v.theta < 0.0);

  CHECK_THROWS_AS(step_coefficients(0.0, 0.1, 1.0), std::domain_error);
  CHECK_THROWS_AS(step_coefficients(1.0, 0.1, 1.0), std::domain_error);
}

TEST_CASE("transfer matrix: free propagation and single step") {
  PotentialProfile free_prof;
  free_prof.delta_V = 0.0;
  for (double E : {0.7, -1.3, 2.5}) {
    for (double py : {0.0, 0.2, -0.5}) {
      if (std::abs(E) <= std::abs(py)) continue;
      auto [T, R] = transfer_matrix_coefficients(free_prof, E, py);
      CHECK(T == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(R == doctest::Approx(0.0).epsilon(1e-12));
    }
  }

  // single sharp step must reproduce the closed form
  PotentialProfile step;
  step.delta_V = 1.0;
  const double E = 2.0, py = 2.0 * std::sin(20.0 * M_PI / 180.0);
  auto [T, R] = transfer_matrix_coefficients(step, E, py);
  const double phi = std::asin(py / E);
  const double T_ref = step_coefficients(E, phi, 1.0).T;
  CHECK(T == doctest::Approx(T_ref).epsilon(1e-12));
  CHECK(T + R == doctest::Approx(1.0).epsilon(1e-12));

  // grid of cross-checks against the closed form, including the hole branch
  for (double e : {-2.7, -0.9, 0.4, 0.8, 1.7, 3.1}) {
    for (double p : {0.0, 0.15, 0.45}) {
      if (std::abs(e) <= p || std::abs(e - 1.0) <= p) continue;
      auto [Tt, Rr] = transfer_matrix_coefficients(step, e, p);
      const double Tc = step_coefficients(e, std::asin(p / e), 1.0).T;
      CHECK(Tt == doctest::Approx(Tc).epsilon(1e-11));
      CHECK(Tt + Rr == doctest::Approx(1.0).epsilon(1e-11));
    }
  }
}

TEST_CASE("transfer matrix: barriers") {
  // square barrier: Klein tunneling at normal incidence for any height/width
  for (double height : {0.8, 2.0, 5.0}) {
    for (double width : {0.3, 1.0, 2.5}) {
      PotentialProfile barrier;
      barrier.delta_V = 0.0;
      barrier.segments.push_back({width, height});
      for (double E : {0.5, 1.3, -0.7}) {
        auto [T, R] = transfer_matrix_coefficients(barrier, E, 0.0);
        CHECK(T == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(R == doctest::Approx(0.0).epsilon(1e-8));
      }
      // oblique: unitarity must hold including evanescent interior
      for (double py : {0.2, 0.4}) {
        for (double E : {0.5, 1.1}) {
          if (std::abs(E) <= py) continue;
          auto [T, R] = transfer_matrix_coefficients(barrier, E, py);
          CHECK(T + R == doctest::Approx(1.0).epsilon(1e-10));
          CHECK(T >= -1e-12);
          CHECK(T <= 1.0 + 1e-12);
        }
      }
    }
  }

  // evanescent exterior: no propagating channel
  PotentialProfile step;
  step.delta_V = 1.0;
  auto [T0, R0] = transfer_matrix_coefficients(step, 0.4, 0.8);
  CHECK(T0 == 0.0);
  CHECK(R0 == 1.0);

  PotentialProfile apex;
  apex.delta_V = 0.0;
  apex.segments.push_back({1.0, 0.5});
  CHECK_THROWS_AS(transfer_matrix_coefficients(apex, 0.5, 0.1), std::domain_error);
}

TEST_CASE("partner map") {
  // delta_V = 0: the partner is the state itself up to side relabel
  PhaseState z{1.2, 0.4, +1};
  auto p0 = partner_state(z, 1, 0.0);
  REQUIRE(p0.has_value());
  CHECK(p0->p_mod == doctest::Approx(z.p_mod));
  CHECK(p0->phi == doctest::Approx(z.phi));
  CHECK(p0->s == z.s);

  // electron at 0 < E < dV pairs with the hole branch on the other side
  PhaseState e{0.5, 0.0, +1};
  auto ph = partner_state(e, 1, 1.0);
  REQUIRE(ph.has_value());
  CHECK(ph->s == -1);
  CHECK(ph->energy() == doctest::Approx(-0.5));
  CHECK(ph->p_y() == doctest::Approx(0.0));

  // evanescent partner: |E'| <= |p_y| gives total reflection (no partner)
  PhaseState h{1.2, 0.3, +1};  // E' = 0.2 but p_y = 1.2 sin(0.3) ~ 0.355
  auto hp = partner_state(h, 1, 1.0);
  CHECK_FALSE(hp.has_value());
  // cone apex E' = 0 has no defined chirality either
  PhaseState a{1.0, 0.0, +1};
  CHECK_FALSE(partner_state(a, 1, 1.0).has_value());

  // energy conservation across the map, both sides
  PhaseState w{2.0, 0.2, +1};  // E' = 0.5, p_y ~ 0.397: propagating partner
  auto wp = partner_state(w, 1, 1.5);
  REQUIRE(wp.has_value());
  CHECK(w.energy() == doctest::Approx(wp->energy() + 1.5));
  CHECK(w.p_y() == doctest::Approx(wp->p_y()));
  auto back = partner_state(*wp, 2, 1.5);
  REQUIRE(back.has_value());
  CHECK(back->energy() == doctest::Approx(w.energy()));
}

TEST_CASE("scattering table and validation") {
  PotentialProfile step;
  step.delta_V = 1.0;
  ScatteringTable table(step);
  CHECK(table.closed_form());

  auto rep = validate_scattering(table);
  CHECK(rep.passed);
  CHECK(rep.max_unitarity < 1e-12);
  CHECK(rep.max_symmetry < 1e-12);
  CHECK(rep.max_reciprocity < 1e-12);

  // reciprocity, explicitly: T^1(E, py) = T^2(E - dV, py) on propagating pairs
  int pairs = 0;
  for (int i = 0; i < 100 && pairs < 100; ++i) {
    const double E = -4.0 + 8.0 * (i + 0.371) / 100.0;
    const double py = 0.3 * std::abs(E);
    if (std::abs(E) < 1e-3 || std::abs(E - 1.0) <= std::abs(py)) continue;
    CHECK(std::abs(table.transmission(1, E, py) - table.transmission(2, E - 1.0, py)) < 1e-12);
    ++pairs;
  }

  PotentialProfile barrier;
  barrier.delta_V = 1.0;
  barrier.segments.push_back({0.8, 2.5});
  ScatteringTable tmm(barrier);
  CHECK_FALSE(tmm.closed_form());
  auto rep2 = validate_scattering(tmm);
  CHECK(rep2.passed);
  CHECK(rep2.max_unitarity < 1e-8);
  CHECK(rep2.max_reciprocity < 1e-8);
}

TEST_CASE("signed Snell law: angle signs flip exactly in the Veselago window") {
  for (double dV : {1.0, 2.5}) {
    for (double E : {-1.5, 0.2, 0.4 * dV, 0.9 * dV, 1.3 * dV, 3.0 * dV}) {
      if (std::abs(E) < 1e-6 || std::abs(E - dV) < 1e-6) continue;
      for (double phi : {0.15, 0.4, -0.3}) {
        auto c = step_coefficients(E, phi, dV);
        if (!c.theta.has_value()) continue;
        const bool veselago = (E > 0.0 && E < dV);
        if (veselago) {
          CHECK(*c.theta * phi < 0.0);
        } else {
          CHECK(*c.theta * phi > 0.0);
        }
      }
    }
  }
}

TEST_CASE("deep tunneling reports an opaque interface") {
  // evanescent segment (|E - V| < |p_y|) thick enough that the matching
  // exponentials would overflow: the guard reports total reflection
  PotentialProfile thick;
  thick.delta_V = 0.0;
  thick.segments.push_back({2000.0, 0.6});
  auto [T, R] = transfer_matrix_coefficients(thick, 0.5, 0.4);
  CHECK(T == 0.0);
  CHECK(R == 1.0);
}
