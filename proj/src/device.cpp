// device.cpp - hybrid drift-diffusion solver with diffusive transmission conditions
//
// This software is licensed under the terms of the Apache Licence Version 2.0
// which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.

#include "qdd/device.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "qdd/errors.hpp"
#include "qdd/fermi.hpp"

namespace qdd {

namespace {

// Bernoulli function x/(e^x - 1) of the exponentially fitted flux.
double bern(double x) {
  if (std::abs(x) < 1e-10) return 1.0 - 0.5 * x + x * x / 12.0;
  if (x > 500.0) return 0.0;
  if (x < -500.0) return -x;
  return x / std::expm1(x);
}

// FD drift factor phi_1(A(n))/n; equals 1 in the MB approximation.
double drift_factor(StatisticsMode mode, double n) {
  if (mode == StatisticsMode::MB) return 1.0;
  const double nn = std::max(n, 1e-12);
  return fermi_phi1(inverse_fermi2(nn)) / nn;
}

}  // namespace

void BoundaryData::validate() const {
  for (double v : n_left) {
    if (!(v > 0.0)) throw std::domain_error("boundary densities must be positive");
  }
  for (double v : n_right) {
    if (!(v > 0.0)) throw std::domain_error("boundary densities must be positive");
  }
}

void DeviceParams::validate() const {
  if (!(L > 0.0) || !(l > 0.0)) throw std::domain_error("device dimensions must be positive");
  if (nx < 2 || ny < 1) throw std::domain_error("device mesh needs nx >= 2, ny >= 1");
  if (tau < 0.0) throw std::domain_error("tau must be >= 0");
  if (!(outer_tol > 0.0) || !(damping > 0.0) || damping > 1.0) {
    throw std::domain_error("outer_tol must be positive and damping in (0,1]");
  }
  boundary.validate();
}

// ---------------------------------------------------------------------------
// assembly of the coupled linear system
// ---------------------------------------------------------------------------

struct DeviceAssembler {
  const DeviceParams& p;
  const Eigen::VectorXd& prev;                 // previous iterate (Newton point)
  const std::array<Eigen::VectorXd, 4>& nu;    // layer corrections per y

  int nx, ny;
  double hx, hy;
  int n_cells;     // 4 nx ny
  int n_unknowns;  // + 4 ny

  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs;
  std::vector<double> mfac;  // lagged drift factor per unknown

  DeviceAssembler(const DeviceParams& params, const Eigen::VectorXd& v,
                  const std::array<Eigen::VectorXd, 4>& nu_in)
      : p(params), prev(v), nu(nu_in) {
    nx = p.nx;
    ny = p.ny;
    hx = p.L / nx;
    hy = 2.0 * p.l / ny;
    n_cells = 4 * nx * ny;
    n_unknowns = n_cells + 4 * ny;
    rhs = Eigen::VectorXd::Zero(n_unknowns);
    mfac.resize(n_unknowns);
    for (int u = 0; u < n_unknowns; ++u) mfac[u] = drift_factor(p.mode, prev[u]);
  }

  int cell(int r, int sp, int i, int j) const { return ((pack_rs(r, sp)) * nx + i) * ny + j; }
  int tr(int q, int j) const { return n_cells + q * ny + j; }

  double xc(int r, int i) const { return r == 0 ? -p.L + (i + 0.5) * hx : (i + 0.5) * hx; }
  double yc(int j) const { return -p.l + (j + 0.5) * hy; }

  // SG flux a -> b over distance d: (1/d)(B(dchi) n_a - B(-dchi) n_b),
  // dchi = s m (U_b - U_a).  Adds the outflow of `a` through a face of the
  // given length to row `row`; either endpoint may be a Dirichlet value.
  struct End {
    int idx;       // unknown index or -1 for Dirichlet
    double value;  // Dirichlet value (ignored when idx >= 0)
    double U;
    double m;      // lagged drift factor at the endpoint
  };

  void add_flux(int row, double sign, const End& a, const End& b, int s, double d,
                double len) {
    const double m = 0.5 * (a.m + b.m);
    const double dchi = s * m * (b.U - a.U);
    const double ca = sign * len / d * bern(dchi);
    const double cb = -sign * len / d * bern(-dchi);
    if (a.idx >= 0) {
      trip.emplace_back(row, a.idx, ca);
    } else {
      rhs[row] -= ca * a.value;
    }
    if (b.idx >= 0) {
      trip.emplace_back(row, b.idx, cb);
    } else {
      rhs[row] -= cb * b.value;
    }
  }

  End cell_end(int r, int sp, int i, int j) const {
    const int u = cell(r, sp, i, j);
    return {u, 0.0, p.U(xc(r, i), yc(j)), mfac[u]};
  }
  End trace_end(int q, int j) const {
    const int u = tr(q, j);
    return {u, 0.0, p.U(0.0, yc(j)), mfac[u]};
  }
  End dirichlet_end(int sp, int side, int j) const {
    const double v = (side == 1) ? p.boundary.n_left[sp] : p.boundary.n_right[sp];
    const double x = (side == 1) ? -p.L : p.L;
    return {-1, v, p.U(x, yc(j)), drift_factor(p.mode, v)};
  }

  void assemble_cells() {
    for (int r = 0; r < 2; ++r) {
      for (int sp = 0; sp < 2; ++sp) {
        const int s = species_sign(sp);
        for (int i = 0; i < nx; ++i) {
          for (int j = 0; j < ny; ++j) {
            const int row = cell(r, sp, i, j);
            const End me = cell_end(r, sp, i, j);
            // west
            if (i > 0) {
              add_flux(row, 1.0, me, cell_end(r, sp, i - 1, j), s, hx, hy);
            } else if (r == 0) {
              add_flux(row, 1.0, me, dirichlet_end(sp, 1, j), s, 0.5 * hx, hy);
            } else {
              add_flux(row, 1.0, me, trace_end(pack_is(2, sp), j), s, 0.5 * hx, hy);
            }
            // east
            if (i + 1 < nx) {
              add_flux(row, 1.0, me, cell_end(r, sp, i + 1, j), s, hx, hy);
            } else if (r == 0) {
              add_flux(row, 1.0, me, trace_end(pack_is(1, sp), j), s, 0.5 * hx, hy);
            } else {
              add_flux(row, 1.0, me, dirichlet_end(sp, 2, j), s, 0.5 * hx, hy);
            }
            // south / north: insulating at j = 0 and j = ny-1
            if (j > 0) add_flux(row, 1.0, me, cell_end(r, sp, i, j - 1), s, hy, hx);
            if (j + 1 < ny) add_flux(row, 1.0, me, cell_end(r, sp, i, j + 1), s, hy, hx);
          }
        }
      }
    }
  }

  // interface current j^i_s at y node j as a linear form c_cell n_cell +
  // c_tr n_trace (+x orientation on both sides)
  struct LinForm {
    int cell_idx, trace_idx;
    double c_cell, c_trace;
  };

  LinForm current_form(int side, int sp, int j) const {
    const int s = species_sign(sp);
    const double d = 0.5 * hx;
    if (side == 1) {
      const End a = cell_end(0, sp, nx - 1, j);
      const End b = trace_end(pack_is(1, sp), j);
      const double m = 0.5 * (a.m + b.m);
      const double dchi = s * m * (b.U - a.U);
      return {a.idx, b.idx, bern(dchi) / d, -bern(-dchi) / d};
    }
    const End a = trace_end(pack_is(2, sp), j);
    const End b = cell_end(1, sp, 0, j);
    const double m = 0.5 * (a.m + b.m);
    const double dchi = s * m * (b.U - a.U);
    return {b.idx, a.idx, -bern(-dchi) / d, bern(dchi) / d};
  }

  // Transmission-condition rows closing the four traces per y node.
  //
  // The layer corrections enter as nu(j) = nu_bar + S (j - j_bar) with the
  // sensitivity S = d(nu)/d(current) supplied by the solver.  Treating nu
  // implicitly is required for stability: an explicit nu update couples to
  // checkerboard-in-y trace modes with gain ~ tau e^{dV} / hy, which
  // diverges under mesh refinement.  At convergence j = j_bar, so S only
  // shapes the iteration, never the fixed point.
  void assemble_interface(const Eigen::Matrix4d& S) {
    const double dV = p.delta_V;
    const double tau = p.tau;
    for (int j = 0; j < ny; ++j) {
      std::array<double, 4> nbar, nuj, ncor, jbar;
      std::array<LinForm, 4> jform;
      for (int q = 0; q < 4; ++q) {
        nbar[q] = prev[tr(q, j)];
        nuj[q] = nu[q][j];
        ncor[q] = nbar[q] + tau * nuj[q];
        if (!(ncor[q] > 0.0)) {
          throw std::domain_error(
              "interface trace with tau-corrected density <= 0 (tau too large)");
        }
        jform[q] = current_form(q / 2 + 1, q % 2, j);
        jbar[q] = jform[q].c_cell * prev[jform[q].cell_idx] +
                  jform[q].c_trace * prev[jform[q].trace_idx];
      }

      // Rows are assembled uniformly from the Newton linearisation of the
      // residual F(u) around `prev`: entries c_k = dF/du_k with
      // rhs = sum_k c_k prev_k - F(prev).  Since nu(j(prev)) = nu_bar, the
      // sensitivity chain contributes entries but nothing to F(prev).
      int eq = 0;
      std::vector<std::pair<int, double>> entries;

      auto add = [&](int col, double c) { entries.emplace_back(col, c); };
      // entries of  coef * d(nu_t(j(u)))/du
      auto add_nu_chain = [&](double coef, int t) {
        for (int q = 0; q < 4; ++q) {
          const double w = coef * S(t, q);
          if (w == 0.0) continue;
          add(jform[q].cell_idx, w * jform[q].c_cell);
          add(jform[q].trace_idx, w * jform[q].c_trace);
        }
      };
      auto add_j_entries = [&](double coef, int q) {
        add(jform[q].cell_idx, coef * jform[q].c_cell);
        add(jform[q].trace_idx, coef * jform[q].c_trace);
      };
      auto flush_row = [&](double F_at_prev) {
        const int row = tr(eq++, j);
        double dot = 0.0;
        for (const auto& [col, c] : entries) {
          trip.emplace_back(row, col, c);
          dot += c * prev[col];
        }
        rhs[row] = dot - F_at_prev;
        entries.clear();
      };

      if (dV == 0.0) {
        // continuity per species: n1_s - n2_s + tau (nu1_s - nu2_s) = 0
        for (int sp = 0; sp < 2; ++sp) {
          const int qa = pack_is(1, sp), qb = pack_is(2, sp);
          add(tr(qa, j), 1.0);
          add(tr(qb, j), -1.0);
          add_nu_chain(tau, qa);
          add_nu_chain(-tau, qb);
          flush_row(nbar[qa] - nbar[qb] + tau * (nuj[qa] - nuj[qb]));
        }
        // per-species flux continuity j1_s = j2_s
        for (int sp = 0; sp < 2; ++sp) {
          const int qa = pack_is(1, sp), qb = pack_is(2, sp);
          add_j_entries(1.0, qa);
          add_j_entries(-1.0, qb);
          flush_row(jbar[qa] - jbar[qb]);
        }
        continue;
      }

      if (p.mode == StatisticsMode::MB) {
        // (+,+):  n1+ - e^{dV} n2+ + tau (nu1+ - e^{dV} nu2+) = 0
        {
          const double e = std::exp(dV);
          add(tr(0, j), 1.0);
          add(tr(2, j), -e);
          add_nu_chain(tau, 0);
          add_nu_chain(-tau * e, 2);
          flush_row(nbar[0] - e * nbar[2] + tau * (nuj[0] - e * nuj[2]));
        }
        // crossed couple: (n + tau nu)(n' + tau nu') = e^{s dV}
        {
          const int qa = (dV > 0.0) ? 0 : 1;  // n1+, n2-  or  n1-, n2+
          const int qb = (dV > 0.0) ? 3 : 2;
          const double target = std::exp((dV > 0.0) ? dV : -dV);
          add(tr(qa, j), ncor[qb]);
          add_nu_chain(tau * ncor[qb], qa);
          add(tr(qb, j), ncor[qa]);
          add_nu_chain(tau * ncor[qa], qb);
          flush_row(ncor[qa] * ncor[qb] - target);
        }
        // (-,-):  n1- - e^{-dV} n2- + tau (nu1- - e^{-dV} nu2-) = 0
        {
          const double e = std::exp(-dV);
          add(tr(1, j), 1.0);
          add(tr(3, j), -e);
          add_nu_chain(tau, 1);
          add_nu_chain(-tau * e, 3);
          flush_row(nbar[1] - e * nbar[3] + tau * (nuj[1] - e * nuj[3]));
        }
      } else {
        // FD: s A(n1_s + tau nu1_s) - s' A(n2_s' + tau nu2_s') - dV = 0
        for (auto [s, sp2] : admissible_couples(dV)) {
          const int qa = pack_is(1, species_index(s));
          const int qb = pack_is(2, species_index(sp2));
          const double Aa = inverse_fermi2(ncor[qa]);
          const double Ab = inverse_fermi2(ncor[qb]);
          const double da = 1.0 / fermi_phi1(Aa);  // dA/dn
          const double db = 1.0 / fermi_phi1(Ab);
          add(tr(qa, j), s * da);
          add_nu_chain(s * da * tau, qa);
          add(tr(qb, j), -sp2 * db);
          add_nu_chain(-sp2 * db * tau, qb);
          flush_row(s * Aa - sp2 * Ab - dV);
        }
      }
      // total charge-flux continuity: j1+ - j1- = j2+ - j2-
      {
        add_j_entries(1.0, 0);
        add_j_entries(-1.0, 1);
        add_j_entries(-1.0, 2);
        add_j_entries(1.0, 3);
        flush_row(jbar[0] - jbar[1] - jbar[2] + jbar[3]);
      }
    }
  }

  Eigen::VectorXd solve(const Eigen::Matrix4d& nu_jac) {
    assemble_cells();
    assemble_interface(nu_jac);
    Eigen::SparseMatrix<double> A(n_unknowns, n_unknowns);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) {
      throw convergence_error("device: singular linear system in the bulk solve");
    }
    return lu.solve(rhs);
  }
};

// ---------------------------------------------------------------------------
// DeviceSolver
// ---------------------------------------------------------------------------

DeviceSolver::DeviceSolver(const DeviceParams& params, const ScatteringTable& table)
    : params_(params),
      table_(table),
      grid_(make_ordinate_grid(params.delta_V, params.eps_max, params.radial_target,
                               params.K, params.gl_per_cell)),
      mgrid_(make_milne_grid(grid_, params.Xi, params.q_target)) {
  params_.validate();
  if (table.delta_V() != params.delta_V) {
    throw std::invalid_argument("device: scattering table delta_V disagrees with params");
  }
  milne_ = std::make_unique<CoupledMilneSolver>(grid_, mgrid_, table_);

  nu_jac_.setZero();
  ninf_map_raw_.setZero();
  if (params_.tau > 0.0) {
    // Reference traces for the linearised current -> n_inf map: the MB layer
    // problem is exactly linear with trace-independent shapes, so the map is
    // exact there; in FD mode it serves as the Jacobian of the implicit
    // coupling only (values are recomputed per y node).
    std::array<double, 4> ref;
    for (int sp = 0; sp < 2; ++sp) {
      ref[pack_is(1, sp)] = params_.boundary.n_left[sp];
      ref[pack_is(2, sp)] = params_.boundary.n_right[sp];
    }
    if (params_.mode == StatisticsMode::MB) ref = {1.0, 1.0, 1.0, 1.0};
    for (int q = 0; q < 4; ++q) {
      std::array<double, 4> e = {0, 0, 0, 0};
      e[q] = 1.0;
      const auto ep = project_conserving(e, params_.delta_V);
      const auto res = milne_->solve(ep, params_.mode, ref);
      for (int out = 0; out < 4; ++out) ninf_map_raw_(out, q) = res.n_inf_raw[out];
    }
    have_mb_map_ = (params_.mode == StatisticsMode::MB);

    // gauge-fixed sensitivity, with the conservation projector and the FD
    // current convention folded in
    Eigen::Matrix4d P = Eigen::Matrix4d::Identity();
    if (params_.delta_V != 0.0) {
      const Eigen::Vector4d g(1.0, -1.0, -1.0, 1.0);
      P -= g * g.transpose() / 4.0;
    } else {
      for (int sp = 0; sp < 2; ++sp) {
        Eigen::Vector4d g = Eigen::Vector4d::Zero();
        g[sp] = 1.0;
        g[2 + sp] = -1.0;
        P -= g * g.transpose() / 2.0;
      }
    }
    Eigen::Matrix4d G = Eigen::Matrix4d::Identity();
    for (const auto& kb : homogeneous_kernel_basis(params_.delta_V,
                                                   kernel_weights(params_.mode, ref))) {
      Eigen::Vector4d k(kb[0], kb[1], kb[2], kb[3]);
      G -= k * k.transpose() / k.squaredNorm();
    }
    const double conv = (params_.mode == StatisticsMode::FD) ? 0.5 : 1.0;
    nu_jac_ = G * ninf_map_raw_ * P * conv;
  }
}

DeviceSolver::~DeviceSolver() = default;

std::array<double, 4> DeviceSolver::milne_ninf(const std::array<double, 4>& j_sg,
                                               const std::array<double, 4>& traces) const {
  // build_G expects the hybrid-model current in MB mode and the bulk
  // drift-diffusion current (c^2/2 of it, i.e. half in scaled units) in FD
  // mode; the SG face flux is the hybrid-model current.
  std::array<double, 4> j = j_sg;
  if (params_.mode == StatisticsMode::FD) {
    for (double& v : j) v *= 0.5;
  }
  const auto jp = project_conserving(j, params_.delta_V);

  std::array<double, 4> raw;
  if (have_mb_map_) {
    Eigen::Vector4d jv(jp[0], jp[1], jp[2], jp[3]);
    Eigen::Vector4d r = ninf_map_raw_ * jv;
    raw = {r[0], r[1], r[2], r[3]};
  } else {
    raw = milne_->solve(jp, params_.mode, traces).n_inf_raw;
  }
  // gauge fixing against the local kernel direction
  const auto basis = homogeneous_kernel_basis(params_.delta_V, kernel_weights(params_.mode, traces));
  for (const auto& kb : basis) {
    double num = 0.0, den = 0.0;
    for (int q = 0; q < 4; ++q) {
      num += raw[q] * kb[q];
      den += kb[q] * kb[q];
    }
    for (int q = 0; q < 4; ++q) raw[q] -= num / den * kb[q];
  }
  return raw;
}

std::array<Eigen::VectorXd, 4> DeviceSolver::interface_currents(const DeviceState& s) const {
  std::array<Eigen::VectorXd, 4> out;
  const double d = 0.5 * s.hx;
  for (int side = 1; side <= 2; ++side) {
    for (int sp = 0; sp < 2; ++sp) {
      const int q = pack_is(side, sp);
      out[q] = Eigen::VectorXd::Zero(s.ny);
      const int sgn = species_sign(sp);
      for (int j = 0; j < s.ny; ++j) {
        const double y = s.y_center(j);
        if (side == 1) {
          const double na = s.n[pack_rs(0, sp)](s.nx - 1, j);
          const double nb = s.trace[q][j];
          const double m = 0.5 * (drift_factor(params_.mode, na) + drift_factor(params_.mode, nb));
          const double dchi = sgn * m * (params_.U(0.0, y) - params_.U(s.x_center(0, s.nx - 1), y));
          out[q][j] = (bern(dchi) * na - bern(-dchi) * nb) / d;
        } else {
          const double na = s.trace[q][j];
          const double nb = s.n[pack_rs(1, sp)](0, j);
          const double m = 0.5 * (drift_factor(params_.mode, na) + drift_factor(params_.mode, nb));
          const double dchi = sgn * m * (params_.U(s.x_center(1, 0), y) - params_.U(0.0, y));
          out[q][j] = (bern(dchi) * na - bern(-dchi) * nb) / d;
        }
      }
    }
  }
  return out;
}

std::array<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>, 4> DeviceSolver::cell_currents(
    const DeviceState& s) const {
  std::array<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>, 4> out;
  const DeviceParams& p = params_;
  // SG flux between two density/potential points at distance d
  auto flux = [&](double na, double nb, double Ua, double Ub, int sgn, double d) {
    const double m = 0.5 * (drift_factor(p.mode, na) + drift_factor(p.mode, nb));
    const double dchi = sgn * m * (Ub - Ua);
    return (bern(dchi) * na - bern(-dchi) * nb) / d;
  };
  for (int r = 0; r < 2; ++r) {
    for (int sp = 0; sp < 2; ++sp) {
      const int sgn = species_sign(sp);
      const auto& n = s.n[pack_rs(r, sp)];
      Eigen::MatrixXd jx(s.nx, s.ny), jy(s.nx, s.ny);
      for (int i = 0; i < s.nx; ++i) {
        for (int j = 0; j < s.ny; ++j) {
          const double x = s.x_center(r, i), y = s.y_center(j);
          // x faces: west and east, with contacts and traces at the ends
          double jw, je;
          if (i > 0) {
            jw = flux(n(i - 1, j), n(i, j), p.U(s.x_center(r, i - 1), y), p.U(x, y), sgn, s.hx);
          } else if (r == 0) {
            jw = flux(p.boundary.n_left[sp], n(i, j), p.U(-p.L, y), p.U(x, y), sgn, 0.5 * s.hx);
          } else {
            jw = flux(s.trace[pack_is(2, sp)][j], n(i, j), p.U(0.0, y), p.U(x, y), sgn,
                      0.5 * s.hx);
          }
          if (i + 1 < s.nx) {
            je = flux(n(i, j), n(i + 1, j), p.U(x, y), p.U(s.x_center(r, i + 1), y), sgn, s.hx);
          } else if (r == 0) {
            je = flux(n(i, j), s.trace[pack_is(1, sp)][j], p.U(x, y), p.U(0.0, y), sgn,
                      0.5 * s.hx);
          } else {
            je = flux(n(i, j), p.boundary.n_right[sp], p.U(x, y), p.U(p.L, y), sgn, 0.5 * s.hx);
          }
          jx(i, j) = 0.5 * (jw + je);
          // y faces: insulating walls carry no flux
          const double js = (j > 0)
              ? flux(n(i, j - 1), n(i, j), p.U(x, s.y_center(j - 1)), p.U(x, y), sgn, s.hy)
              : 0.0;
          const double jn = (j + 1 < s.ny)
              ? flux(n(i, j), n(i, j + 1), p.U(x, y), p.U(x, s.y_center(j + 1)), sgn, s.hy)
              : 0.0;
          jy(i, j) = 0.5 * (js + jn);
        }
      }
      out[pack_rs(r, sp)] = {std::move(jx), std::move(jy)};
    }
  }
  return out;
}

DeviceState DeviceSolver::solve() const {
  const DeviceParams& p = params_;
  DeviceState s;
  s.nx = p.nx;
  s.ny = p.ny;
  s.hx = p.L / p.nx;
  s.hy = 2.0 * p.l / p.ny;
  s.L = p.L;
  s.l = p.l;

  const int n_cells = 4 * p.nx * p.ny;
  const int n_unknowns = n_cells + 4 * p.ny;

  // initial iterate: contact densities per region, traces from the contacts
  Eigen::VectorXd v(n_unknowns);
  for (int r = 0; r < 2; ++r) {
    for (int sp = 0; sp < 2; ++sp) {
      const double val = (r == 0) ? p.boundary.n_left[sp] : p.boundary.n_right[sp];
      for (int i = 0; i < p.nx; ++i) {
        for (int j = 0; j < p.ny; ++j) {
          v[((pack_rs(r, sp)) * p.nx + i) * p.ny + j] = val;
        }
      }
    }
  }
  for (int q = 0; q < 4; ++q) {
    const int sp = q % 2;
    const double val = (q < 2) ? p.boundary.n_left[sp] : p.boundary.n_right[sp];
    for (int j = 0; j < p.ny; ++j) v[n_cells + q * p.ny + j] = val;
    s.nu[q] = Eigen::VectorXd::Zero(p.ny);
    s.trace[q] = Eigen::VectorXd::Constant(p.ny, val);
  }

  auto unpack = [&](const Eigen::VectorXd& vec) {
    for (int r = 0; r < 2; ++r) {
      for (int sp = 0; sp < 2; ++sp) {
        auto& grid = s.n[pack_rs(r, sp)];
        grid.resize(p.nx, p.ny);
        for (int i = 0; i < p.nx; ++i) {
          for (int j = 0; j < p.ny; ++j) {
            grid(i, j) = vec[((pack_rs(r, sp)) * p.nx + i) * p.ny + j];
          }
        }
      }
    }
    for (int q = 0; q < 4; ++q) {
      for (int j = 0; j < p.ny; ++j) s.trace[q][j] = vec[n_cells + q * p.ny + j];
    }
  };

  bool nu_frozen = false;
  double update = 0.0;
  int outer = 0;
  for (outer = 1; outer <= p.max_outer; ++outer) {
    DeviceAssembler assembler(params_, v, s.nu);
    Eigen::VectorXd v_new = assembler.solve(nu_jac_);

    // positivity safeguard: densities must stay positive through the outer
    // iteration; retreat toward the previous iterate if they do not
    int backtracks = 0;
    while (v_new.minCoeff() <= 0.0 && backtracks < 8) {
      v_new = 0.5 * (v_new + v);
      ++backtracks;
    }
    if (v_new.minCoeff() <= 0.0) {
      throw convergence_error("device: densities lost positivity in the outer iteration");
    }

    update = 0.0;
    for (int u = 0; u < n_unknowns; ++u) {
      update = std::max(update, std::abs(v_new[u] - v[u]) / std::max(1.0, std::abs(v[u])));
    }
    v = v_new;
    unpack(v);

    // refresh layer corrections from the new interface currents
    double nu_update = 0.0;
    if (p.tau > 0.0 && !nu_frozen) {
      const auto cur = interface_currents(s);
      for (int j = 0; j < p.ny; ++j) {
        std::array<double, 4> jy, tj;
        for (int q = 0; q < 4; ++q) {
          jy[q] = cur[q][j];
          tj[q] = s.trace[q][j];
        }
        const auto ninf = milne_ninf(jy, tj);
        for (int q = 0; q < 4; ++q) {
          const double next = s.nu[q][j] + p.damping * (ninf[q] - s.nu[q][j]);
          nu_update = std::max(nu_update, std::abs(next - s.nu[q][j]));
          s.nu[q][j] = next;
        }
      }
      if (p.freeze_ninf && update < std::sqrt(p.outer_tol)) nu_frozen = true;
    }

    const double total = std::max(update, nu_update);
    s.residual_history.push_back(total);
    if (total < p.outer_tol && outer > 1) break;
  }
  if (outer > p.max_outer) {
    std::ostringstream os;
    os << "device: outer iteration did not converge in " << p.max_outer
       << " steps; residual history:";
    for (double r : s.residual_history) os << " " << r;
    throw convergence_error(os.str());
  }

  s.outer_iterations = outer;
  s.final_update = update;
  s.j_if = interface_currents(s);
  return s;
}

DeviceObservables DeviceSolver::observables(const DeviceState& s) const {
  const DeviceParams& p = params_;
  DeviceObservables o;
  o.outer_iterations = s.outer_iterations;
  o.final_update = s.final_update;

  // terminal currents through the ohmic contacts
  for (int sp = 0; sp < 2; ++sp) {
    const int sgn = species_sign(sp);
    double left = 0.0, right = 0.0;
    for (int j = 0; j < s.ny; ++j) {
      const double y = s.y_center(j);
      {
        const double nb = s.n[pack_rs(0, sp)](0, j);
        const double na = p.boundary.n_left[sp];
        const double m = 0.5 * (drift_factor(p.mode, na) + drift_factor(p.mode, nb));
        const double dchi = sgn * m * (p.U(s.x_center(0, 0), y) - p.U(-p.L, y));
        left += s.hy * (bern(dchi) * na - bern(-dchi) * nb) / (0.5 * s.hx);
      }
      {
        const double na = s.n[pack_rs(1, sp)](s.nx - 1, j);
        const double nb = p.boundary.n_right[sp];
        const double m = 0.5 * (drift_factor(p.mode, na) + drift_factor(p.mode, nb));
        const double dchi = sgn * m * (p.U(p.L, y) - p.U(s.x_center(1, s.nx - 1), y));
        right += s.hy * (bern(dchi) * na - bern(-dchi) * nb) / (0.5 * s.hx);
      }
    }
    o.terminal_left_species[sp] = left;
    o.terminal_right_species[sp] = right;
  }
  o.terminal_current_left = o.terminal_left_species[0] - o.terminal_left_species[1];
  o.terminal_current_right = o.terminal_right_species[0] - o.terminal_right_species[1];

  for (int j = 0; j < s.ny; ++j) {
    o.interface_flux_left += s.hy * (s.j_if[0][j] - s.j_if[1][j]);
    o.interface_flux_right += s.hy * (s.j_if[2][j] - s.j_if[3][j]);
    o.jump_mean[0] += std::abs(s.trace[0][j] - s.trace[2][j]) / s.ny;
    o.jump_mean[1] += std::abs(s.trace[1][j] - s.trace[3][j]) / s.ny;
  }

  // transmission-condition residuals on the converged traces
  const auto couples = admissible_couples(p.delta_V);
  o.dtc_residual_per_couple.assign(couples.size(), 0.0);
  for (int j = 0; j < s.ny; ++j) {
    std::array<double, 4> n, nu;
    for (int q = 0; q < 4; ++q) {
      n[q] = s.trace[q][j];
      nu[q] = s.nu[q][j];
    }
    const auto res = dtc_first_order_residual(n, nu, p.tau, p.delta_V, p.mode);
    for (size_t c = 0; c < res.size(); ++c) {
      o.dtc_residual_per_couple[c] = std::max(o.dtc_residual_per_couple[c], std::abs(res[c]));
      o.dtc_residual_max = std::max(o.dtc_residual_max, std::abs(res[c]));
      if (couples[c].first != couples[c].second) {
        o.mass_action_residual_max = std::max(o.mass_action_residual_max, std::abs(res[c]));
      }
    }
  }

  // cellwise conservation check and density floor
  o.min_density = std::numeric_limits<double>::max();
  for (const auto& grid : s.n) o.min_density = std::min(o.min_density, grid.minCoeff());
  for (int q = 0; q < 4; ++q) o.min_density = std::min(o.min_density, s.trace[q].minCoeff());

  Eigen::VectorXd v(4 * s.nx * s.ny + 4 * s.ny);
  for (int r = 0; r < 2; ++r) {
    for (int sp = 0; sp < 2; ++sp) {
      for (int i = 0; i < s.nx; ++i) {
        for (int j = 0; j < s.ny; ++j) {
          v[((pack_rs(r, sp)) * s.nx + i) * s.ny + j] = s.n[pack_rs(r, sp)](i, j);
        }
      }
    }
  }
  for (int q = 0; q < 4; ++q) {
    for (int j = 0; j < s.ny; ++j) v[4 * s.nx * s.ny + q * s.ny + j] = s.trace[q][j];
  }
  DeviceAssembler a(params_, v, s.nu);
  a.assemble_cells();
  Eigen::SparseMatrix<double> A(a.n_unknowns, a.n_unknowns);
  A.setFromTriplets(a.trip.begin(), a.trip.end());
  Eigen::VectorXd imbalance = A * v - a.rhs;
  for (int u = 0; u < 4 * s.nx * s.ny; ++u) {
    o.div_j_max = std::max(o.div_j_max, std::abs(imbalance[u]));
  }
  return o;
}

}  // namespace qdd
