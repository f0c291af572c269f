// grid.hpp - phase-space ordinate grid shared by the interface and layer solvers
//
// This software is licensed under the terms of the Apache Licence Version 2.0
// which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.

#pragma once

#include <vector>

namespace qdd {

/// Tensor ordinate grid (eps_m, phi_k) for boundary distributions at the
/// quantum interface.
///
/// Radial structure: composite Gauss-Legendre cells of width `cell_width`
/// chosen such that |delta_V| = shift_cells * cell_width exactly.  The signed
/// energy lattice {± (q*W + g_p)} is then closed under the partner shift
/// E -> E ± delta_V followed by |.| folding (Gauss nodes are symmetric within
/// a cell), so the radial partner of every node is again a node.
///
/// Angular structure: midpoint grid phi_k = 2 pi (k+1/2) / K with K a
/// multiple of 4.  Cell edges include ±pi/2, so the inflow/outflow
/// half-ranges are unions of whole cells, no node sits at mu = 0, and the
/// grid is closed under both phi -> pi - phi and phi -> -phi.
struct OrdinateGrid {
  // radial
  double delta_V = 0.0;
  double cell_width = 0.0;
  int shift_cells = 0;      // |delta_V| = shift_cells * cell_width (0 if delta_V == 0)
  int gl_per_cell = 0;
  int n_cells = 0;
  std::vector<double> eps;   // node radii, ascending, size M = n_cells * gl_per_cell
  std::vector<double> wrad;  // Gauss weights for \int deps

  // angular
  int K = 0;
  std::vector<double> phi;       // node angles
  std::vector<double> mu;        // cos(phi_k)
  std::vector<double> sy;        // sin(phi_k)
  std::vector<double> sin_lo;    // signed sin at the lower cell edge
  std::vector<double> sin_hi;    // signed sin at the upper cell edge

  int n_radial() const { return static_cast<int>(eps.size()); }
  double eps_max() const { return n_cells * cell_width; }

  /// index of the phi -> pi - phi image (mu flips, p_y preserved)
  int reflect(int k) const { return ((K / 2 - 1 - k) % K + K) % K; }
  /// index of the phi -> -phi image (p_y flips, mu preserved)
  int flip_py(int k) const { return (K - 1 - k) % K; }

  /// side 1 is the region x < 0: its inflow at the interface moves in -x.
  bool is_inflow(int side, int k) const {
    return side == 1 ? (mu[k] < 0.0) : (mu[k] > 0.0);
  }

  /// p_y cell length per unit radius
  double cell_len(int k) const { return std::abs(sin_hi[k] - sin_lo[k]); }

  /// Radial partner under E -> E - dir*delta_V with |.| folding.
  /// Input/output states are (s, m) pairs; returns false when the partner
  /// falls outside the truncated lattice (treated as no transmission) or
  /// when delta_V == 0 trivially maps to itself.
  bool radial_partner(int s, int m, int dir, int& s_out, int& m_out) const;

  /// discrete bracket of a radial function: sum_m wrad_m eps_m f(eps_m)
  double radial_moment(const std::vector<double>& f) const;
};

/// Build the shared ordinate grid.
///
///   delta_V       scaled potential jump (grid is shift-closed against it)
///   eps_max       target radial truncation (default 30 k_B T)
///   radial_target target number of radial nodes (actual count may differ
///                 to honour shift closure; it is reported in the result)
///   K             angular node count, multiple of 4, >= 8
///   gl_per_cell   Gauss nodes per radial cell
OrdinateGrid make_ordinate_grid(double delta_V, double eps_max = 30.0,
                                int radial_target = 96, int K = 32,
                                int gl_per_cell = 8);

}  // namespace qdd
