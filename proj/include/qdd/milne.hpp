// milne.hpp - half-space kinetic layer problems and their coupling at the interface
//
// This software is licensed under the terms of the Apache Licence Version 2.0
// which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.

#pragma once

#include <array>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "qdd/grid.hpp"
#include "qdd/interface.hpp"
#include "qdd/scattering.hpp"

namespace qdd {

/// Layer coordinate grid: edges 0 = xi_0 < ... < xi_Q = Xi, geometrically
/// refined near xi = 0 and capped so that every cell is thinner than the
/// smallest ordinate cosine (keeps the diamond-difference sweep positive).
struct MilneGrid {
  const OrdinateGrid* ord = nullptr;
  double Xi = 30.0;
  std::vector<double> xi;
  int n_cells() const { return static_cast<int>(xi.size()) - 1; }
};

MilneGrid make_milne_grid(const OrdinateGrid& ord, double Xi = 30.0, int q_target = 48,
                          double h0 = 0.02, double growth = 1.12);

struct DecayFit {
  double rate = 0.0;        // fitted alpha in |<theta>-n_inf| ~ C e^{-alpha xi}
  double r2 = 0.0;          // regression R^2 on the log residuals
  double resid_at_Xi = 0.0; // fitted residual extrapolated to xi = Xi
  int points = 0;
};

/// Solution of one averaged half-space problem.
struct MilneSolution {
  Eigen::VectorXd rho;      // angular average at the xi edges
  Eigen::MatrixXd theta;    // (Q+1) x K ordinate values
  Eigen::VectorXd outflow;  // trace at xi = 0 on outflow ordinates (K-vector)
  std::vector<double> xi;   // edge coordinates the profile lives on
  double n_inf = 0.0;
  DecayFit fit;
  int side = 1;
};

/// Discrete |p|-averaged Milne problem
///   mu d(theta)/dxi = (1/2pi) \int theta dphi - theta
/// on the truncated domain [0, Xi] with prescribed inflow at xi = 0 and a
/// specular far closure standing in for "nothing returns from infinity"
/// (the bounded solution has zero net flux, which specular reflection
/// reproduces exactly; a vacuum closure would inject an O(1/Xi) leakage).
///
/// Sweeps are diamond-difference; the scattering closure is solved directly
/// through the (Q+1)-dimensional scalar-flux system, i.e. the fully
/// converged limit of source iteration on the same discretisation.
class HalfSpaceSolver {
public:
  HalfSpaceSolver(const MilneGrid& grid, int side);

  MilneSolution solve(const Eigen::VectorXd& inflow) const;

  /// Albedo matrix: inflow ordinate values -> outflow trace at xi = 0
  /// (columns/rows of non-participating ordinates are zero).
  const Eigen::MatrixXd& albedo() const { return albedo_; }
  /// n_inf as a linear functional of the inflow.
  const Eigen::VectorXd& ninf_row() const { return ninf_row_; }

  const MilneGrid& grid() const { return *grid_; }
  int side() const { return side_; }

private:
  // one transport sweep for all ordinates given edge scalar fluxes
  void sweep(const Eigen::VectorXd& rho, const Eigen::VectorXd& inflow,
             Eigen::MatrixXd& theta) const;

  const MilneGrid* grid_;
  int side_;
  std::vector<double> mu_hat_;           // ordinate cosines mapped to [0,Xi]
  Eigen::PartialPivLU<Eigen::MatrixXd> closure_;  // LU of (I - M)
  Eigen::MatrixXd albedo_;
  Eigen::VectorXd ninf_row_;
};

/// Adaptive wrapper: doubles Xi (up to xi_cap) until the fitted decay
/// predicts a residual below `decay_tol` at the truncation edge.
MilneSolution solve_halfspace(const OrdinateGrid& ord, int side,
                              const Eigen::VectorXd& inflow, double Xi = 30.0,
                              int q_target = 48, double decay_tol = 1e-8,
                              double xi_cap = 120.0);

/// First-order source term G = l_s . j of the layer problem, evaluated on
/// all interface nodes.  FD mode: G = (2/c^2) F'_{n_s} v.j (c = 1 scaled);
/// MB mode: G = M v.j with the current in the convention of the hybrid
/// model (drift-diffusion current divided by c^2/2).
BoundaryDistribution build_G(const OrdinateGrid& grid,
                             const std::array<double, 4>& jx,
                             const std::array<double, 4>& jy,
                             const std::array<double, 4>& n_traces, StatisticsMode mode);

/// |p|-average of one (side, species) block against the radial measure,
/// normalised so that the average of the local equilibrium shape is exactly
/// one.  Returns a K-vector (all ordinates).
Eigen::VectorXd average_over_modulus(const OrdinateGrid& grid, const BoundaryDistribution& g,
                                     int side, int sp, const std::vector<double>& L_shape);

/// Albedo extension at xi = 0: outflow(z) = L(eps) * theta_out(phi).
void extend_outflow(const OrdinateGrid& grid, int side, int sp,
                    const std::vector<double>& L_shape, const Eigen::VectorXd& theta_out,
                    BoundaryDistribution& out);

struct CoupledMilneResult {
  std::array<double, 4> n_inf{};        // gauge-fixed asymptotic densities
  std::array<double, 4> n_inf_raw{};    // before gauge fixing
  BoundaryDistribution boundary;        // converged inflow + albedo outflow at xi = 0
  double fixedpoint_update = 0.0;       // max-norm update at the last iteration
  int iterations = 0;
  double solvability_mismatch = 0.0;    // before projection
  std::array<double, 4> layer_flux{};   // <mu theta> at xi=0 per (i,s), should be ~0
  std::array<double, 4> kernel_basis{}; // gauge direction that was removed
};

/// Kernel direction(s) of the homogeneous coupled problem, c_s^i-weighted:
/// for delta_V != 0 the single direction gamma^i_s = s c^i_s; for
/// delta_V = 0 one direction per species.
std::vector<std::array<double, 4>> homogeneous_kernel_basis(double delta_V,
                                                            const std::array<double, 4>& c);

/// c^i_s weights entering the kernel relation: phi_1(A(n^i_s)) for FD
/// statistics, n^i_s in the MB approximation.
std::array<double, 4> kernel_weights(StatisticsMode mode, const std::array<double, 4>& n);

/// Project currents onto the Theorem-1 conservation manifold (evenly across
/// species for delta_V != 0, pairwise for delta_V = 0).
std::array<double, 4> project_conserving(std::array<double, 4> jx, double delta_V);

/// Solve the four coupled half-space problems driven by interface currents.
/// Currents are packed (1+, 1-, 2+, 2-) in the build_G convention of the
/// selected mode.  Inputs violating the flux-conservation condition beyond
/// 1e-6 (relative to the current scale) are rejected; smaller mismatches are
/// projected onto the conservation manifold.
///
/// The transfer operator and the half-space closures depend only on the
/// grids and the scattering table, so one instance serves any sequence of
/// trace profiles (the equilibrium shapes are rebuilt per call).
class CoupledMilneSolver {
public:
  CoupledMilneSolver(const OrdinateGrid& grid, const MilneGrid& mgrid,
                     const ScatteringTable& table);

  CoupledMilneResult solve(std::array<double, 4> jx, std::array<double, 4> jy,
                           StatisticsMode mode, const std::array<double, 4>& n_traces) const;

  CoupledMilneResult solve(const std::array<double, 4>& jx, StatisticsMode mode,
                           const std::array<double, 4>& n_traces) const {
    return solve(jx, {0, 0, 0, 0}, mode, n_traces);
  }

private:
  const OrdinateGrid* grid_;
  const ScatteringTable* table_;
  InterfaceOperator op_;
  std::unique_ptr<HalfSpaceSolver> half_[2];
};

}  // namespace qdd
