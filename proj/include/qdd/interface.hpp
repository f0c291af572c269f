// interface.hpp - discrete kinetic transmission conditions at the quantum interface
//
// This software is licensed under the terms of the Apache Licence Version 2.0
// which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.

#pragma once

#include <array>
#include <utility>
#include <vector>

#include "qdd/grid.hpp"
#include "qdd/scattering.hpp"

namespace qdd {

/// Phase-space values at the interface on the tensor ordinate grid, for both
/// sides (1,2) and species (+,-).  Entry order: [side][species][m][k].
class BoundaryDistribution {
public:
  BoundaryDistribution() = default;
  explicit BoundaryDistribution(const OrdinateGrid& g)
      : M_(g.n_radial()), K_(g.K), data_(static_cast<size_t>(4) * M_ * K_, 0.0) {}

  double& at(int side, int sp, int m, int k) { return data_[index(side, sp, m, k)]; }
  double at(int side, int sp, int m, int k) const { return data_[index(side, sp, m, k)]; }

  size_t index(int side, int sp, int m, int k) const {
    return (((static_cast<size_t>(side - 1) * 2 + sp) * M_) + m) * K_ + k;
  }

  int n_radial() const { return M_; }
  int n_angular() const { return K_; }
  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

private:
  int M_ = 0, K_ = 0;
  std::vector<double> data_;
};

inline int species_index(int s) { return s > 0 ? 0 : 1; }
inline int species_sign(int sp) { return sp == 0 ? +1 : -1; }

/// epsilon_{ss'}: 0 on the diagonal, 1 off it.
inline double epsilon_ss(int s, int sp) { return s == sp ? 0.0 : 1.0; }

/// Discrete boundary operator B^i (affine) and its linear part K^i.
///
/// The transfer part is built per admissible energy pair on shared p_y
/// panels: the target cell of every inflow node is intersected with the
/// source cells of the partner radius, and the transmission coefficient is
/// sampled once per panel (always through the side-1 energy of the pair).
/// Rows then satisfy the Fermi-Dirac fixed point of the transmission
/// conditions exactly, and the cell-quadrature charge flux is conserved to
/// round-off for arbitrary outflow data.
class InterfaceOperator {
public:
  InterfaceOperator(const OrdinateGrid& grid, const ScatteringTable& table);

  const OrdinateGrid& grid() const { return *grid_; }
  double delta_V() const { return delta_V_; }

  /// Inflow of side i from the outflow parts of both sides (affine form,
  /// with the electron-hole inhomogeneity).  Only outflow entries of `out`
  /// are read; only inflow entries of side i in `result` are written.
  void apply_B(int side, const BoundaryDistribution& out, BoundaryDistribution& result) const;

  /// Linear part K^i (carries the ss' chirality factor, no inhomogeneity).
  void apply_K(int side, const BoundaryDistribution& out, BoundaryDistribution& result) const;

  /// Cell-quadrature x-flux per species on one side: (J_+, J_-).
  std::pair<double, double> charge_flux(const BoundaryDistribution& f, int side) const;

  /// Largest |occupation - clamp(occupation,0,1)| over the inflow produced
  /// by the last apply_B is the caller's business; this helper just scans a
  /// distribution for out-of-[0,1] values (diagnostic, never clamps).
  double occupation_violation(const BoundaryDistribution& f) const;

private:
  struct Entry {
    int src;     // flat index into BoundaryDistribution
    double w;    // transfer weight including the ss' sign
  };
  struct Row {
    int refl_src;       // flat index of the reflected outflow node
    double refl_w;      // 1 - t_bar
    double affine;      // epsilon_{ss'} * t_bar contribution
    int first, count;   // span into entries_
  };

  // rows grouped per side: row order matches inflow_nodes_[side]
  std::array<std::vector<Row>, 2> rows_;
  std::array<std::vector<size_t>, 2> inflow_index_;  // flat target indices
  std::vector<Entry> entries_;

  const OrdinateGrid* grid_ = nullptr;
  double delta_V_ = 0.0;
};

/// Chirality couples (s, s') admitted by energy conservation across the jump.
std::vector<std::pair<int, int>> admissible_couples(double delta_V);

/// Residuals of the leading-order diffusive transmission conditions
/// s A(n^1_s) = s' A(n^2_{s'}) + delta_V, one entry per admissible couple.
std::vector<double> dtc_leading_residual(double n1p, double n1m, double n2p, double n2m,
                                         double delta_V);

enum class StatisticsMode { FD, MB };

/// Residuals of the first-order diffusive transmission conditions with the
/// layer corrections nu = n^{i,infty}.  FD mode evaluates
/// s A(n^1_s + tau nu^1_s) - s' A(n^2_{s'} + tau nu^2_{s'}) - delta_V per
/// admissible couple; MB mode evaluates the explicit continuity/mass-action
/// system (product form).  Throws std::domain_error when a corrected density
/// is nonpositive (tau too large for the linearisation).
std::vector<double> dtc_first_order_residual(const std::array<double, 4>& n,
                                             const std::array<double, 4>& nu, double tau,
                                             double delta_V, StatisticsMode mode);

// index helpers for the (n1+, n1-, n2+, n2-) arrays used above
inline int pack_is(int side, int sp) { return (side - 1) * 2 + sp; }

}  // namespace qdd
