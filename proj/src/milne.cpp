// milne.cpp - half-space layer solver and the coupled interface problem
//
// This software is licensed under the terms of the Apache Licence Version 2.0
// which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.

#include "qdd/milne.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "qdd/errors.hpp"
#include "qdd/fermi.hpp"

namespace qdd {

MilneGrid make_milne_grid(const OrdinateGrid& ord, double Xi, int q_target, double h0,
                          double growth) {
  if (!(Xi >= 20.0)) throw std::invalid_argument("milne grid: Xi must be >= 20");
  MilneGrid g;
  g.ord = &ord;
  g.Xi = Xi;

  // positivity bound for diamond difference: h < 2*min|mu| (the last cell
  // may be stretched by up to 1.5x when snapping to Xi, hence the margin)
  double mu_min = 1.0;
  for (double m : ord.mu) mu_min = std::min(mu_min, std::abs(m));
  double h_cap = 1.3 * mu_min;
  // honour the requested resolution when it is finer than the cap
  h_cap = std::min(h_cap, Xi / std::max(1, q_target) * 4.0);

  g.xi.push_back(0.0);
  double h = std::min(h0, h_cap);
  while (g.xi.back() < Xi) {
    double next = g.xi.back() + h;
    if (next > Xi - 0.5 * h) next = Xi;
    g.xi.push_back(next);
    h = std::min(h * growth, h_cap);
  }
  return g;
}

HalfSpaceSolver::HalfSpaceSolver(const MilneGrid& grid, int side)
    : grid_(&grid), side_(side) {
  const OrdinateGrid& ord = *grid.ord;
  mu_hat_.resize(ord.K);
  for (int k = 0; k < ord.K; ++k) {
    mu_hat_[k] = (side == 1) ? -ord.mu[k] : ord.mu[k];
  }

  const int Q = grid.n_cells();
  const int n = Q + 1;
  Eigen::MatrixXd theta(n, ord.K);
  Eigen::VectorXd zero_in = Eigen::VectorXd::Zero(ord.K);

  // closure matrix: rho_new = M rho + B g; factor (I - M) once
  Eigen::MatrixXd M(n, n);
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd rho = Eigen::VectorXd::Zero(n);
    rho[j] = 1.0;
    sweep(rho, zero_in, theta);
    M.col(j) = theta.rowwise().mean();
  }
  closure_.compute(Eigen::MatrixXd::Identity(n, n) - M);

  // albedo matrix and the n_inf functional, one unit-inflow solve per
  // inflow ordinate
  albedo_ = Eigen::MatrixXd::Zero(ord.K, ord.K);
  ninf_row_ = Eigen::VectorXd::Zero(ord.K);
  for (int k = 0; k < ord.K; ++k) {
    if (mu_hat_[k] <= 0.0) continue;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(ord.K);
    g[k] = 1.0;
    MilneSolution sol = solve(g);
    albedo_.col(k) = sol.outflow;
    ninf_row_[k] = sol.n_inf;
  }
}

void HalfSpaceSolver::sweep(const Eigen::VectorXd& rho, const Eigen::VectorXd& inflow,
                            Eigen::MatrixXd& theta) const {
  const OrdinateGrid& ord = *grid_->ord;
  const int Q = grid_->n_cells();
  theta.resize(Q + 1, ord.K);

  // ascending sweep for ordinates moving away from the interface
  for (int k = 0; k < ord.K; ++k) {
    const double mu = mu_hat_[k];
    if (mu <= 0.0) continue;
    theta(0, k) = inflow[k];
    for (int q = 0; q < Q; ++q) {
      const double h = grid_->xi[q + 1] - grid_->xi[q];
      const double s = 0.5 * (rho[q] + rho[q + 1]);
      theta(q + 1, k) = ((mu - 0.5 * h) * theta(q, k) + h * s) / (mu + 0.5 * h);
    }
  }
  // specular closure at Xi, then descending sweep toward the interface
  for (int k = 0; k < ord.K; ++k) {
    const double mu = mu_hat_[k];
    if (mu >= 0.0) continue;
    const double amu = -mu;
    theta(Q, k) = theta(Q, ord.reflect(k));
    for (int q = Q; q-- > 0;) {
      const double h = grid_->xi[q + 1] - grid_->xi[q];
      const double s = 0.5 * (rho[q] + rho[q + 1]);
      theta(q, k) = ((amu - 0.5 * h) * theta(q + 1, k) + h * s) / (amu + 0.5 * h);
    }
  }
}

namespace {

DecayFit fit_decay(const std::vector<double>& xi, const Eigen::VectorXd& rho, double n_inf) {
  DecayFit fit;
  const int n = static_cast<int>(xi.size());
  const double scale = std::max(1e-300, std::abs(n_inf));
  std::vector<double> xs, ys;
  for (int q = 0; q < n; ++q) {
    if (xi[q] < 0.5 || xi[q] > 0.8 * xi.back()) continue;
    const double d = std::abs(rho[q] - n_inf);
    if (d < 1e-14 * std::max(1.0, scale) || d <= 0.0) continue;
    xs.push_back(xi[q]);
    ys.push_back(std::log(d));
  }
  fit.points = static_cast<int>(xs.size());
  if (fit.points < 4) return fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (int i = 0; i < fit.points; ++i) {
    sx += xs[i]; sy += ys[i]; sxx += xs[i] * xs[i]; sxy += xs[i] * ys[i]; syy += ys[i] * ys[i];
  }
  const double nn = fit.points;
  const double det = nn * sxx - sx * sx;
  const double slope = (nn * sxy - sx * sy) / det;
  const double icpt = (sy * sxx - sx * sxy) / det;
  fit.rate = -slope;
  const double sst = syy - sy * sy / nn;
  double sse = 0.0;
  for (int i = 0; i < fit.points; ++i) {
    const double e = ys[i] - (icpt + slope * xs[i]);
    sse += e * e;
  }
  fit.r2 = (sst > 0.0) ? 1.0 - sse / sst : 1.0;
  fit.resid_at_Xi = std::exp(icpt + slope * xi.back());
  return fit;
}

}  // namespace

MilneSolution HalfSpaceSolver::solve(const Eigen::VectorXd& inflow) const {
  const OrdinateGrid& ord = *grid_->ord;
  const int Q = grid_->n_cells();
  const int n = Q + 1;

  Eigen::MatrixXd theta(n, ord.K);
  Eigen::VectorXd in = inflow;
  for (int k = 0; k < ord.K; ++k) {
    if (mu_hat_[k] <= 0.0) in[k] = 0.0;
  }

  // inhomogeneous term of the closure, then the direct solve
  sweep(Eigen::VectorXd::Zero(n), in, theta);
  Eigen::VectorXd b = theta.rowwise().mean();
  Eigen::VectorXd rho = closure_.solve(b);
  sweep(rho, in, theta);

  MilneSolution sol;
  sol.side = side_;
  sol.xi = grid_->xi;
  sol.rho = theta.rowwise().mean();
  sol.theta = theta;
  sol.outflow = Eigen::VectorXd::Zero(ord.K);
  for (int k = 0; k < ord.K; ++k) {
    if (mu_hat_[k] < 0.0) sol.outflow[k] = theta(0, k);
  }
  sol.n_inf = sol.rho[Q];
  sol.fit = fit_decay(grid_->xi, sol.rho, sol.n_inf);
  return sol;
}

MilneSolution solve_halfspace(const OrdinateGrid& ord, int side, const Eigen::VectorXd& inflow,
                              double Xi, int q_target, double decay_tol, double xi_cap) {
  double xi_now = Xi;
  for (;;) {
    MilneGrid grid = make_milne_grid(ord, xi_now, q_target);
    HalfSpaceSolver solver(grid, side);
    MilneSolution sol = solver.solve(inflow);
    const bool trivial = sol.fit.points < 4;  // flat solution, nothing to fit
    if (trivial || sol.fit.resid_at_Xi < decay_tol || xi_now >= xi_cap) {
      if (!trivial && sol.fit.resid_at_Xi >= decay_tol) {
        throw convergence_error("solve_halfspace: decay residual above tolerance at Xi cap");
      }
      return sol;
    }
    xi_now = std::min(2.0 * xi_now, xi_cap);
  }
}

BoundaryDistribution build_G(const OrdinateGrid& grid, const std::array<double, 4>& jx,
                             const std::array<double, 4>& jy,
                             const std::array<double, 4>& n_traces, StatisticsMode mode) {
  BoundaryDistribution G(grid);
  for (int side = 1; side <= 2; ++side) {
    for (int sp = 0; sp < 2; ++sp) {
      const int q = pack_is(side, sp);
      double A = 0.0;
      if (mode == StatisticsMode::FD) {
        if (!(n_traces[q] > 0.0)) {
          throw std::domain_error("build_G: FD mode needs positive trace densities");
        }
        A = inverse_fermi2(n_traces[q]);
      }
      for (int m = 0; m < grid.n_radial(); ++m) {
        const double shape = (mode == StatisticsMode::FD)
                                 ? 2.0 * fd_density_derivative_at(grid.eps[m], A)
                                 : maxwellian(grid.eps[m]);
        for (int k = 0; k < grid.K; ++k) {
          G.at(side, sp, m, k) = shape * (grid.mu[k] * jx[q] + grid.sy[k] * jy[q]);
        }
      }
    }
  }
  return G;
}

Eigen::VectorXd average_over_modulus(const OrdinateGrid& grid, const BoundaryDistribution& g,
                                     int side, int sp, const std::vector<double>& L_shape) {
  double mass = 0.0;
  for (int m = 0; m < grid.n_radial(); ++m) mass += grid.wrad[m] * grid.eps[m] * L_shape[m];
  Eigen::VectorXd out = Eigen::VectorXd::Zero(grid.K);
  for (int k = 0; k < grid.K; ++k) {
    double acc = 0.0;
    for (int m = 0; m < grid.n_radial(); ++m) {
      acc += grid.wrad[m] * grid.eps[m] * g.at(side, sp, m, k);
    }
    out[k] = acc / mass;
  }
  return out;
}

void extend_outflow(const OrdinateGrid& grid, int side, int sp,
                    const std::vector<double>& L_shape, const Eigen::VectorXd& theta_out,
                    BoundaryDistribution& out) {
  for (int k = 0; k < grid.K; ++k) {
    if (grid.is_inflow(side, k)) continue;
    for (int m = 0; m < grid.n_radial(); ++m) {
      out.at(side, sp, m, k) = L_shape[m] * theta_out[k];
    }
  }
}

std::vector<std::array<double, 4>> homogeneous_kernel_basis(double delta_V,
                                                            const std::array<double, 4>& c) {
  if (delta_V != 0.0) {
    // gamma^i_s = s c^i_s; the crossed couple carries the ss' sign
    return {{c[0], -c[1], c[2], -c[3]}};
  }
  return {{c[0], 0.0, c[2], 0.0}, {0.0, c[1], 0.0, c[3]}};
}

std::array<double, 4> kernel_weights(StatisticsMode mode, const std::array<double, 4>& n) {
  std::array<double, 4> c;
  for (int q = 0; q < 4; ++q) {
    if (!(n[q] > 0.0)) {
      throw std::domain_error("kernel_weights: trace densities must be positive");
    }
    c[q] = (mode == StatisticsMode::FD) ? fermi_phi1(inverse_fermi2(n[q])) : n[q];
  }
  return c;
}

std::array<double, 4> project_conserving(std::array<double, 4> jx, double delta_V) {
  if (delta_V != 0.0) {
    const double mis = (jx[0] - jx[1]) - (jx[2] - jx[3]);
    jx[0] -= mis / 4.0;
    jx[1] += mis / 4.0;
    jx[2] += mis / 4.0;
    jx[3] -= mis / 4.0;
  } else {
    for (int sp = 0; sp < 2; ++sp) {
      const double mis = jx[sp] - jx[2 + sp];
      jx[sp] -= mis / 2.0;
      jx[2 + sp] += mis / 2.0;
    }
  }
  return jx;
}

CoupledMilneSolver::CoupledMilneSolver(const OrdinateGrid& grid, const MilneGrid& mgrid,
                                       const ScatteringTable& table)
    : grid_(&grid), table_(&table), op_(grid, table) {
  half_[0] = std::make_unique<HalfSpaceSolver>(mgrid, 1);
  half_[1] = std::make_unique<HalfSpaceSolver>(mgrid, 2);
}

CoupledMilneResult CoupledMilneSolver::solve(std::array<double, 4> jx,
                                             std::array<double, 4> jy, StatisticsMode mode,
                                             const std::array<double, 4>& n_traces) const {
  const OrdinateGrid& grid = *grid_;
  CoupledMilneResult out;

  // equilibrium shapes and kernel weights for the given traces
  const std::array<double, 4> c_ = kernel_weights(mode, n_traces);
  std::array<std::vector<double>, 4> L_;
  for (int side = 1; side <= 2; ++side) {
    for (int sp = 0; sp < 2; ++sp) {
      const int q = pack_is(side, sp);
      auto& L = L_[q];
      L.resize(grid.n_radial());
      if (mode == StatisticsMode::FD) {
        const double A = inverse_fermi2(n_traces[q]);
        for (int m = 0; m < grid.n_radial(); ++m) {
          L[m] = fd_density_derivative_at(grid.eps[m], A);
        }
      } else {
        for (int m = 0; m < grid.n_radial(); ++m) L[m] = maxwellian(grid.eps[m]);
      }
    }
  }

  // Theorem-1 solvability: project the generating currents onto the
  // conservation manifold, rejecting gross violations.
  double jmax = 1.0;
  for (double j : jx) jmax = std::max(jmax, std::abs(j));
  const double tol = 1e-6 * jmax;
  if (grid.delta_V != 0.0) {
    const double mis = (jx[0] - jx[1]) - (jx[2] - jx[3]);
    out.solvability_mismatch = std::abs(mis);
    if (std::abs(mis) > tol) {
      std::ostringstream os;
      os << "coupled Milne problem: flux conservation (Theorem 1) violated: "
         << "j1+ - j1- - j2+ + j2- = " << mis;
      throw solvability_error(os.str());
    }
    jx[0] -= mis / 4.0;
    jx[1] += mis / 4.0;
    jx[2] += mis / 4.0;
    jx[3] -= mis / 4.0;
  } else {
    double worst = 0.0;
    for (int sp = 0; sp < 2; ++sp) {
      const double mis = jx[sp] - jx[2 + sp];
      worst = std::max(worst, std::abs(mis));
      if (std::abs(mis) > tol) {
        std::ostringstream os;
        os << "coupled Milne problem: per-species flux conservation (Theorem 1, delta_V = 0) "
           << "violated for species " << (sp == 0 ? "+" : "-") << ": " << mis;
        throw solvability_error(os.str());
      }
      jx[sp] -= mis / 2.0;
      jx[2 + sp] += mis / 2.0;
    }
    out.solvability_mismatch = worst;
  }

  const BoundaryDistribution G = build_G(grid, jx, jy, n_traces, mode);

  // Gamma^i = G_in - K^i(G_out)
  BoundaryDistribution gamma(grid);
  op_.apply_K(1, G, gamma);
  op_.apply_K(2, G, gamma);
  for (int side = 1; side <= 2; ++side) {
    for (int sp = 0; sp < 2; ++sp) {
      for (int m = 0; m < grid.n_radial(); ++m) {
        for (int k = 0; k < grid.K; ++k) {
          if (!grid.is_inflow(side, k)) continue;
          gamma.at(side, sp, m, k) = G.at(side, sp, m, k) - gamma.at(side, sp, m, k);
        }
      }
    }
  }

  // damped fixed point  x <- (1-w) x + w (Gamma + K(Albedo x))
  BoundaryDistribution x = gamma;
  BoundaryDistribution outflow(grid), x_new(grid);
  std::array<Eigen::VectorXd, 4> gtilde;
  double omega = 1.0;
  double last_update = std::numeric_limits<double>::infinity();
  const int max_iter = 20000;
  const double tol_fp = 1e-11;
  int it = 0;
  for (; it < max_iter; ++it) {
    for (int side = 1; side <= 2; ++side) {
      for (int sp = 0; sp < 2; ++sp) {
        const int q = pack_is(side, sp);
        gtilde[q] = average_over_modulus(grid, x, side, sp, L_[q]);
        const Eigen::VectorXd theta_out = half_[side - 1]->albedo() * gtilde[q];
        extend_outflow(grid, side, sp, L_[q], theta_out, outflow);
      }
    }
    op_.apply_K(1, outflow, x_new);
    op_.apply_K(2, outflow, x_new);
    // undamped residual |Gamma + K(A x) - x| decides convergence; the step
    // itself is damped by omega
    double update = 0.0;
    for (size_t i = 0; i < x.raw().size(); ++i) {
      const double target = gamma.raw()[i] + x_new.raw()[i];
      update = std::max(update, std::abs(target - x.raw()[i]));
      x.raw()[i] += omega * (target - x.raw()[i]);
    }
    if (update < tol_fp) {
      out.fixedpoint_update = update;
      break;
    }
    if (update > last_update * 1.2 && omega > 0.1) omega *= 0.5;
    last_update = update;
    out.fixedpoint_update = update;
  }
  if (out.fixedpoint_update >= tol_fp) {
    std::ostringstream os;
    os << "coupled Milne fixed point did not converge: last update " << out.fixedpoint_update
       << ", spectral-radius estimate " << (last_update > 0 ? out.fixedpoint_update / last_update : 0.0);
    throw convergence_error(os.str());
  }
  out.iterations = it + 1;

  // asymptotic densities, boundary trace and layer-flux diagnostics
  out.boundary = x;
  for (int side = 1; side <= 2; ++side) {
    for (int sp = 0; sp < 2; ++sp) {
      const int q = pack_is(side, sp);
      gtilde[q] = average_over_modulus(grid, x, side, sp, L_[q]);
      out.n_inf_raw[q] = half_[side - 1]->ninf_row().dot(gtilde[q]);
      const Eigen::VectorXd theta_out = half_[side - 1]->albedo() * gtilde[q];
      extend_outflow(grid, side, sp, L_[q], theta_out, out.boundary);
      double flux = 0.0;  // (1/K) sum_k mu_k theta_tilde(0, k)
      for (int k = 0; k < grid.K; ++k) {
        const double v = grid.is_inflow(side, k) ? gtilde[q][k] : theta_out[k];
        flux += grid.mu[k] * v;
      }
      out.layer_flux[q] = flux / grid.K;
    }
  }

  // gauge fixing: remove the homogeneous-kernel component
  out.n_inf = out.n_inf_raw;
  const auto basis = homogeneous_kernel_basis(grid.delta_V, c_);
  for (const auto& kb : basis) {
    double num = 0.0, den = 0.0;
    for (int q = 0; q < 4; ++q) {
      num += out.n_inf[q] * kb[q];
      den += kb[q] * kb[q];
    }
    for (int q = 0; q < 4; ++q) out.n_inf[q] -= num / den * kb[q];
  }
  out.kernel_basis = basis[0];
  return out;
}

}  // namespace qdd
