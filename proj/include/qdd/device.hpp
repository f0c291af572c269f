// device.hpp - hybrid drift-diffusion device solver with quantum transmission conditions
//
// This software is licensed under the terms of the Apache Licence Version 2.0
// which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.

#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qdd/grid.hpp"
#include "qdd/interface.hpp"
#include "qdd/milne.hpp"
#include "qdd/scattering.hpp"

namespace qdd {

/// Smooth potential U(x,y) = c0 + ax x + ay y + axy x y (bilinear analytic
/// form; the quantum jump delta_V is not part of U).
struct PotentialField {
  double c0 = 0.0, ax = 0.0, ay = 0.0, axy = 0.0;
  double operator()(double x, double y) const { return c0 + ax * x + ay * y + axy * x * y; }
};

/// Dirichlet densities at the ohmic contacts x = -L and x = +L, per species.
struct BoundaryData {
  std::array<double, 2> n_left = {1.0, 1.0};
  std::array<double, 2> n_right = {1.0, 1.0};
  void validate() const;
};

struct DeviceParams {
  double L = 1.0;   // scaled half-length per region
  double l = 0.5;   // scaled half-width
  int nx = 64;      // cells per region in x
  int ny = 32;      // cells in y
  double delta_V = 0.0;
  double tau = 0.0;
  StatisticsMode mode = StatisticsMode::MB;
  PotentialField U;
  BoundaryData boundary;

  // interface/layer discretisation
  double eps_max = 30.0;
  int radial_target = 96;
  int K = 32;
  int gl_per_cell = 8;
  double Xi = 30.0;
  int q_target = 48;

  // outer iteration
  double outer_tol = 1e-9;
  double damping = 0.5;
  int max_outer = 200;
  bool freeze_ninf = false;  // stop refreshing n_inf once the outer loop has
                             // tightened below sqrt(outer_tol)

  void validate() const;
};

struct DeviceState {
  int nx = 0, ny = 0;
  double hx = 0.0, hy = 0.0, L = 0.0, l = 0.0;

  // cell-centred densities, index pack_rs(region, species) -> (nx x ny)
  std::array<Eigen::MatrixXd, 4> n;
  // interface traces, layer corrections and face currents per y node,
  // packed (1+, 1-, 2+, 2-)
  std::array<Eigen::VectorXd, 4> trace;
  std::array<Eigen::VectorXd, 4> nu;
  std::array<Eigen::VectorXd, 4> j_if;

  std::vector<double> residual_history;
  int outer_iterations = 0;
  double final_update = 0.0;

  double x_center(int region, int i) const {
    return region == 0 ? -L + (i + 0.5) * hx : (i + 0.5) * hx;
  }
  double y_center(int j) const { return -l + (j + 0.5) * hy; }
};

inline int pack_rs(int region, int sp) { return region * 2 + sp; }

struct DeviceObservables {
  double terminal_current_left = 0.0;    // total charge current through x=-L
  double terminal_current_right = 0.0;
  std::array<double, 2> terminal_left_species{};
  std::array<double, 2> terminal_right_species{};
  double interface_flux_left = 0.0;      // charge flux j1+ - j1- integrated in y
  double interface_flux_right = 0.0;
  double dtc_residual_max = 0.0;
  std::vector<double> dtc_residual_per_couple;  // max |residual| over y, per couple
  double mass_action_residual_max = 0.0; // crossed-couple residual (MB) if present
  std::array<double, 2> jump_mean{};     // mean |n1_s - n2_s| across the interface
  double div_j_max = 0.0;                // worst cellwise flux imbalance
  double min_density = 0.0;
  int outer_iterations = 0;
  double final_update = 0.0;
};

/// Stationary solver for the two-region drift-diffusion system closed by the
/// first-order diffusive transmission conditions at x = 0.
///
/// One linear system couples the four (region, species) density blocks with
/// the four interface traces per y node; the mass-action (or Fermi-Dirac)
/// transmission rows are Newton-linearised around the previous iterate.  The
/// outer loop alternates these solves with the coupled layer problems that
/// supply the asymptotic densities n_inf per y node.
class DeviceSolver {
public:
  DeviceSolver(const DeviceParams& params, const ScatteringTable& table);
  ~DeviceSolver();

  DeviceState solve() const;
  DeviceObservables observables(const DeviceState& s) const;

  const DeviceParams& params() const { return params_; }
  const OrdinateGrid& ordinate_grid() const { return grid_; }

  /// Interface currents (SG face fluxes in the hybrid-model convention) of
  /// a given state, recomputed per y node; packed like the trace arrays.
  std::array<Eigen::VectorXd, 4> interface_currents(const DeviceState& s) const;

  /// Cell-centred current components (x then y) per (region, species),
  /// averaged from the face fluxes; index pack_rs(region, sp).
  std::array<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>, 4> cell_currents(
      const DeviceState& s) const;

private:
  std::array<double, 4> milne_ninf(const std::array<double, 4>& j_sg,
                                   const std::array<double, 4>& traces) const;

  DeviceParams params_;
  ScatteringTable table_;
  OrdinateGrid grid_;
  MilneGrid mgrid_;
  std::unique_ptr<CoupledMilneSolver> milne_;
  // current -> raw n_inf map on the projected basis: exact in MB (the layer
  // shapes are trace independent), reference-trace approximation in FD
  Eigen::Matrix4d ninf_map_raw_;
  // gauge-fixed d(nu)/d(current) entering the implicit interface rows
  Eigen::Matrix4d nu_jac_;
  bool have_mb_map_ = false;
};

}  // namespace qdd
