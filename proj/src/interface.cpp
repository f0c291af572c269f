// interface.cpp - discrete kinetic transmission conditions
//
// This software is licensed under the terms of the Apache Licence Version 2.0
// which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.

#include "qdd/interface.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qdd/fermi.hpp"

namespace qdd {

InterfaceOperator::InterfaceOperator(const OrdinateGrid& grid, const ScatteringTable& table)
    : grid_(&grid), delta_V_(table.delta_V()) {
  if (grid.delta_V != table.delta_V()) {
    throw std::invalid_argument("InterfaceOperator: grid and table disagree on delta_V");
  }
  const int M = grid.n_radial();
  const int K = grid.K;
  BoundaryDistribution layout(grid);  // for flat index arithmetic only

  for (int side = 1; side <= 2; ++side) {
    const int dir = (side == 1) ? +1 : -1;  // (-1)^j with j the other side
    auto& rows = rows_[side - 1];
    auto& targets = inflow_index_[side - 1];
    for (int sp = 0; sp < 2; ++sp) {
      const int s = species_sign(sp);
      for (int m = 0; m < M; ++m) {
        int s_p = 0, m_p = 0;
        const bool has_radial = grid.radial_partner(s, m, dir, s_p, m_p);
        for (int k = 0; k < K; ++k) {
          if (!grid.is_inflow(side, k)) continue;
          Row row;
          row.refl_src = static_cast<int>(layout.index(side, sp, m, grid.reflect(k)));
          row.affine = 0.0;
          row.first = static_cast<int>(entries_.size());
          double t_bar = 0.0;
          if (has_radial) {
            const int other = (side == 1) ? 2 : 1;
            const double ez = grid.eps[m];
            const double ep = grid.eps[m_p];
            const double p_c = std::min(ez, ep);
            double lo_t = ez * grid.sin_lo[k], hi_t = ez * grid.sin_hi[k];
            if (lo_t > hi_t) std::swap(lo_t, hi_t);
            lo_t = std::max(lo_t, -p_c);
            hi_t = std::min(hi_t, p_c);
            if (hi_t > lo_t) {
              const double cell = grid.eps[m] * grid.cell_len(k);
              const double E1 = (side == 1) ? s * ez : s_p * ep;  // side-1 energy of the pair
              const int sp_p = species_index(s_p);
              const double ss = static_cast<double>(s * s_p);
              for (int kq = 0; kq < K; ++kq) {
                if (grid.is_inflow(other, kq)) continue;  // sources are outflow of the other side
                double lo_s = ep * grid.sin_lo[kq], hi_s = ep * grid.sin_hi[kq];
                if (lo_s > hi_s) std::swap(lo_s, hi_s);
                const double lo = std::max(lo_t, lo_s);
                const double hi = std::min(hi_t, hi_s);
                if (hi - lo < 1e-15 * p_c) continue;
                const double t = table.pair_transmission(E1, 0.5 * (lo + hi));
                if (t == 0.0) continue;
                const double w = (hi - lo) * t / cell;
                t_bar += w;
                entries_.push_back({static_cast<int>(layout.index(other, sp_p, m_p, kq)),
                                    ss * w});
                if (s != s_p) row.affine += w;
              }
            }
          }
          row.count = static_cast<int>(entries_.size()) - row.first;
          row.refl_w = 1.0 - t_bar;
          rows.push_back(row);
          targets.push_back(layout.index(side, sp, m, k));
        }
      }
    }
  }
}

namespace {

void check_shape(const OrdinateGrid& g, const BoundaryDistribution& a,
                 const BoundaryDistribution& b) {
  if (a.n_radial() != g.n_radial() || a.n_angular() != g.K ||
      b.n_radial() != g.n_radial() || b.n_angular() != g.K) {
    throw std::invalid_argument(
        "interface operator: boundary distribution does not match the ordinate grid");
  }
}

}  // namespace

void InterfaceOperator::apply_B(int side, const BoundaryDistribution& out,
                                BoundaryDistribution& result) const {
  check_shape(*grid_, out, result);
  const auto& rows = rows_[side - 1];
  const auto& targets = inflow_index_[side - 1];
  const auto& src = out.raw();
  auto& dst = result.raw();
  for (size_t r = 0; r < rows.size(); ++r) {
    const Row& row = rows[r];
    double v = row.refl_w * src[row.refl_src] + row.affine;
    for (int e = row.first; e < row.first + row.count; ++e) {
      v += entries_[e].w * src[entries_[e].src];
    }
    dst[targets[r]] = v;
  }
}

void InterfaceOperator::apply_K(int side, const BoundaryDistribution& out,
                                BoundaryDistribution& result) const {
  check_shape(*grid_, out, result);
  const auto& rows = rows_[side - 1];
  const auto& targets = inflow_index_[side - 1];
  const auto& src = out.raw();
  auto& dst = result.raw();
  for (size_t r = 0; r < rows.size(); ++r) {
    const Row& row = rows[r];
    double v = row.refl_w * src[row.refl_src];
    for (int e = row.first; e < row.first + row.count; ++e) {
      v += entries_[e].w * src[entries_[e].src];
    }
    dst[targets[r]] = v;
  }
}

std::pair<double, double> InterfaceOperator::charge_flux(const BoundaryDistribution& f,
                                                         int side) const {
  const OrdinateGrid& g = *grid_;
  double J[2] = {0.0, 0.0};
  for (int sp = 0; sp < 2; ++sp) {
    for (int m = 0; m < g.n_radial(); ++m) {
      const double wr = g.wrad[m] * g.eps[m];
      for (int k = 0; k < g.K; ++k) {
        const double sgn = (g.mu[k] > 0.0) ? 1.0 : -1.0;
        J[sp] += wr * g.cell_len(k) * sgn * f.at(side, sp, m, k);
      }
    }
  }
  const double norm = 1.0 / (2.0 * M_PI);
  return {J[0] * norm, J[1] * norm};
}

double InterfaceOperator::occupation_violation(const BoundaryDistribution& f) const {
  double worst = 0.0;
  for (double v : f.raw()) {
    worst = std::max({worst, -v, v - 1.0});
  }
  return std::max(worst, 0.0);
}

std::vector<std::pair<int, int>> admissible_couples(double delta_V) {
  if (delta_V > 0.0) return {{+1, +1}, {+1, -1}, {-1, -1}};
  if (delta_V < 0.0) return {{+1, +1}, {-1, +1}, {-1, -1}};
  return {{+1, +1}, {-1, -1}};
}

std::vector<double> dtc_leading_residual(double n1p, double n1m, double n2p, double n2m,
                                         double delta_V) {
  for (double n : {n1p, n1m, n2p, n2m}) {
    if (!(n > 0.0)) throw std::domain_error("dtc_leading_residual: densities must be positive");
  }
  const double A[2][2] = {{inverse_fermi2(n1p), inverse_fermi2(n1m)},
                          {inverse_fermi2(n2p), inverse_fermi2(n2m)}};
  std::vector<double> res;
  for (auto [s, sp] : admissible_couples(delta_V)) {
    res.push_back(s * A[0][species_index(s)] - sp * A[1][species_index(sp)] - delta_V);
  }
  return res;
}

std::vector<double> dtc_first_order_residual(const std::array<double, 4>& n,
                                             const std::array<double, 4>& nu, double tau,
                                             double delta_V, StatisticsMode mode) {
  std::array<double, 4> nc;
  for (int i = 0; i < 4; ++i) {
    nc[i] = n[i] + tau * nu[i];
    if (!(nc[i] > 0.0)) {
      throw std::domain_error(
          "dtc_first_order_residual: corrected density nonpositive (tau too large)");
    }
  }
  std::vector<double> res;
  if (mode == StatisticsMode::FD) {
    std::array<double, 4> A;
    for (int i = 0; i < 4; ++i) A[i] = inverse_fermi2(nc[i]);
    for (auto [s, sp] : admissible_couples(delta_V)) {
      res.push_back(s * A[pack_is(1, species_index(s))] -
                    sp * A[pack_is(2, species_index(sp))] - delta_V);
    }
    return res;
  }
  // MB: continuity rows for equal chiralities, mass-action product for the
  // crossed couple (n_0 = 1 in scaled units).
  for (auto [s, sp] : admissible_couples(delta_V)) {
    const double a = nc[pack_is(1, species_index(s))];
    const double b = nc[pack_is(2, species_index(sp))];
    if (s == sp) {
      const double e = std::exp(s * delta_V);
      res.push_back(n[pack_is(1, species_index(s))] - e * n[pack_is(2, species_index(sp))] -
                    tau * (e * nu[pack_is(2, species_index(sp))] -
                           nu[pack_is(1, species_index(s))]));
    } else {
      // (+,-): (n1+ + tau nu)(n2- + tau nu) = e^{dV}; (-,+): product = e^{-dV}
      res.push_back(a * b - std::exp(s * delta_V));
    }
  }
  return res;
}

}  // namespace qdd
