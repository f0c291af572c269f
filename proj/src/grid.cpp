// grid.cpp - phase-space ordinate grid construction
//
// This software is licensed under the terms of the Apache Licence Version 2.0
// which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.

#include "qdd/grid.hpp"

#include <cmath>
#include <stdexcept>

#include "qdd/gauss.hpp"

namespace qdd {

bool OrdinateGrid::radial_partner(int s, int m, int dir, int& s_out, int& m_out) const {
  const int P = gl_per_cell;
  if (shift_cells == 0) {  // delta_V == 0: partner is the node itself
    s_out = s;
    m_out = m;
    return true;
  }
  const int q = m / P;
  const int p = m % P;
  // signed shift in cell units: E' = E - dir * delta_V, delta_V = sgn * k * W
  const int k_shift = dir * ((delta_V > 0.0) ? shift_cells : -shift_cells);
  int q_new;
  int s_new;
  int p_new;
  if (s > 0) {
    q_new = q - k_shift;
    if (q_new >= 0) {
      s_new = 1;
      p_new = p;
    } else {  // fold through zero: |E'| = (-q_new-1)*W + (W - g_p)
      s_new = -1;
      q_new = -q_new - 1;
      p_new = P - 1 - p;
    }
  } else {
    q_new = q + k_shift;
    if (q_new >= 0) {
      s_new = -1;
      p_new = p;
    } else {
      s_new = 1;
      q_new = -q_new - 1;
      p_new = P - 1 - p;
    }
  }
  if (q_new >= n_cells) return false;  // beyond the truncated lattice
  s_out = s_new;
  m_out = q_new * P + p_new;
  return true;
}

double OrdinateGrid::radial_moment(const std::vector<double>& f) const {
  double sum = 0.0;
  for (int m = 0; m < n_radial(); ++m) sum += wrad[m] * eps[m] * f[m];
  return sum;
}

OrdinateGrid make_ordinate_grid(double delta_V, double eps_max, int radial_target,
                                int K, int gl_per_cell) {
  if (K < 8 || K % 4 != 0) {
    throw std::invalid_argument(
        "ordinate grid: K must be a multiple of 4 and >= 8 (half-range edges at ±pi/2)");
  }
  if (gl_per_cell < 2) throw std::invalid_argument("ordinate grid: gl_per_cell >= 2");
  if (!(eps_max > 0.0)) throw std::invalid_argument("ordinate grid: eps_max > 0");
  if (delta_V != 0.0 && std::abs(delta_V) < 0.2) {
    throw std::invalid_argument(
        "ordinate grid: |delta_V| below 0.2 would need an impractically fine "
        "shift-closed radial lattice");
  }
  if (std::abs(delta_V) > eps_max) {
    throw std::invalid_argument("ordinate grid: |delta_V| must not exceed eps_max");
  }

  OrdinateGrid g;
  g.delta_V = delta_V;
  g.gl_per_cell = gl_per_cell;

  const double w_cap = 1.5;  // keeps composite Gauss error ~1e-13 on width-W cells
  if (delta_V == 0.0) {
    g.shift_cells = 0;
    g.n_cells = std::max(2, (radial_target + gl_per_cell - 1) / gl_per_cell);
    g.cell_width = eps_max / g.n_cells;
    if (g.cell_width > w_cap) {
      g.n_cells = static_cast<int>(std::ceil(eps_max / w_cap));
      g.cell_width = eps_max / g.n_cells;
    }
  } else {
    const double adv = std::abs(delta_V);
    const int cells_target = std::max(2, radial_target / gl_per_cell);
    int k = std::max<int>(1, static_cast<int>(std::lround(adv * cells_target / eps_max)));
    k = std::max(k, static_cast<int>(std::ceil(adv / w_cap)));
    g.shift_cells = k;
    g.cell_width = adv / k;
    g.n_cells = static_cast<int>(std::ceil(eps_max / g.cell_width - 1e-12));
  }

  const GaussRule cell = gauss_legendre(gl_per_cell, 0.0, g.cell_width);
  const int M = g.n_cells * gl_per_cell;
  g.eps.resize(M);
  g.wrad.resize(M);
  for (int q = 0; q < g.n_cells; ++q) {
    for (int p = 0; p < gl_per_cell; ++p) {
      g.eps[q * gl_per_cell + p] = q * g.cell_width + cell.x[p];
      g.wrad[q * gl_per_cell + p] = cell.w[p];
    }
  }

  g.K = K;
  g.phi.resize(K);
  g.mu.resize(K);
  g.sy.resize(K);
  g.sin_lo.resize(K);
  g.sin_hi.resize(K);
  for (int k = 0; k < K; ++k) {
    const double lo = 2.0 * M_PI * k / K;
    const double hi = 2.0 * M_PI * (k + 1) / K;
    g.phi[k] = 0.5 * (lo + hi);
    g.mu[k] = std::cos(g.phi[k]);
    g.sy[k] = std::sin(g.phi[k]);
    g.sin_lo[k] = std::sin(lo);
    g.sin_hi[k] = std::sin(hi);
  }
  return g;
}

}  // namespace qdd
