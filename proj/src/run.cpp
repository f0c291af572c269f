// run.cpp - produce the file artifacts of one configured run
//
// This software is licensed under the terms of the Apache Licence Version 2.0
// which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.

#include "qdd/run.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "qdd/csv.hpp"
#include "qdd/errors.hpp"
#include "qdd/units.hpp"

namespace qdd {

using ordered_json = nlohmann::ordered_json;

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw config_error("cannot create output directory: " + dir);
}

namespace {

void write_json(const std::string& path, const ordered_json& j) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot open output file: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace

ScatteringReport run_scatter(const RunConfig& cfg, const std::string& dir) {
  ensure_dir(dir);
  ScatteringTable table(cfg.profile);

  CsvWriter csv(dir + "/scatter.csv", {"E", "p_y", "T1", "R1", "T2", "R2"});
  const int nE = cfg.scatter_n_E, npy = cfg.scatter_n_py;
  const double Emax = cfg.scatter_E_max;
  const double dV = cfg.profile.delta_V;
  for (int ie = 0; ie < nE; ++ie) {
    const double E = -Emax + 2.0 * Emax * (ie + 0.371) / nE;
    if (std::abs(E) < 1e-6 || std::abs(E - dV) < 1e-6) continue;
    for (int ip = 0; ip < npy; ++ip) {
      // ip = 0 is exact normal incidence (the Klein-tunneling row)
      const double py = std::abs(E) * ip / (npy + 1);
      const double T1 = table.transmission(1, E, py);
      const double T2 = table.transmission(2, E, py);
      csv.row({E, py, T1, 1.0 - T1, T2, 1.0 - T2});
    }
  }

  ScatteringReport rep = validate_scattering(table, nE, npy, Emax);
  ordered_json j;
  j["profile"] = cfg.profile.is_pure_step() ? "step" : "piecewise";
  j["delta_V"] = dV;
  j["passed"] = rep.passed;
  j["tolerance"] = rep.tolerance;
  j["max_unitarity"] = rep.max_unitarity;
  j["max_bounds"] = rep.max_bounds;
  j["max_symmetry"] = rep.max_symmetry;
  j["max_reciprocity"] = rep.max_reciprocity;
  write_json(dir + "/scatter_report.json", j);
  return rep;
}

void run_milne(const RunConfig& cfg, const std::string& dir) {
  ensure_dir(dir);
  const double dV = cfg.profile.delta_V;
  const OrdinateGrid grid = make_ordinate_grid(dV, cfg.device.eps_max,
                                               cfg.device.radial_target, cfg.device.K,
                                               cfg.device.gl_per_cell);

  ordered_json j;
  j["case"] = cfg.milne_case;
  j["delta_V"] = dV;
  j["Xi"] = cfg.device.Xi;

  if (cfg.milne_case == "currents") {
    const MilneGrid mgrid = make_milne_grid(grid, cfg.device.Xi, cfg.device.q_target);
    CoupledMilneSolver solver(grid, mgrid, ScatteringTable(cfg.profile));
    const auto res = solver.solve(cfg.milne_jx, cfg.device.mode, cfg.milne_traces);
    j["mode"] = cfg.device.mode == StatisticsMode::FD ? "FD" : "MB";
    j["currents"] = cfg.milne_jx;
    j["n_inf"] = res.n_inf;
    j["n_inf_raw"] = res.n_inf_raw;
    j["fixedpoint_update"] = res.fixedpoint_update;
    j["iterations"] = res.iterations;
    j["solvability_mismatch"] = res.solvability_mismatch;
    j["layer_flux"] = res.layer_flux;
    // the asymptotic densities are unique only modulo the homogeneous
    // kernel; this run removes the component along the declared direction
    j["gauge"] = "orthogonal to gamma^i_s = s c^i_s (c-weighted kernel)";
    j["gauge_basis"] = res.kernel_basis;
    write_json(dir + "/milne.json", j);

    // per-node boundary values of the converged layer solution
    CsvWriter csv(dir + "/boundary_values.csv",
                  {"side", "species", "eps", "phi", "inflow", "theta"});
    for (int side = 1; side <= 2; ++side) {
      for (int sp = 0; sp < 2; ++sp) {
        for (int m = 0; m < grid.n_radial(); ++m) {
          for (int k = 0; k < grid.K; ++k) {
            csv.row({static_cast<double>(side), static_cast<double>(species_sign(sp)),
                     grid.eps[m], grid.phi[k],
                     grid.is_inflow(side, k) ? 1.0 : 0.0,
                     res.boundary.at(side, sp, m, k)});
          }
        }
      }
    }
    return;
  }

  Eigen::VectorXd inflow = Eigen::VectorXd::Zero(grid.K);
  for (int k = 0; k < grid.K; ++k) {
    if (!grid.is_inflow(cfg.milne_side, k)) continue;
    if (cfg.milne_case == "equilibrium") {
      inflow[k] = 1.0;
    } else if (cfg.milne_case == "zero") {
      inflow[k] = 0.0;
    } else if (cfg.milne_case == "cosine") {
      inflow[k] = std::max(std::cos(grid.phi[k]), 0.0);
    } else {
      throw config_error("milne.case must be equilibrium|zero|cosine|currents");
    }
  }

  MilneSolution sol = solve_halfspace(grid, cfg.milne_side, inflow, cfg.device.Xi,
                                      cfg.device.q_target);

  CsvWriter csv(dir + "/theta_profile.csv", {"xi", "phi", "theta"});
  for (int q = 0; q < sol.theta.rows(); ++q) {
    for (int k = 0; k < grid.K; ++k) {
      csv.row({sol.xi[q], grid.phi[k], sol.theta(q, k)});
    }
  }

  j["side"] = cfg.milne_side;
  j["n_inf"] = sol.n_inf;
  j["decay_rate"] = sol.fit.rate;
  j["decay_r2"] = sol.fit.r2;
  j["decay_resid_at_Xi"] = sol.fit.resid_at_Xi;
  j["gauge"] = "single half-space problem (no kernel freedom)";
  write_json(dir + "/milne.json", j);
}

DeviceObservables run_solve(const RunConfig& cfg, const std::string& dir) {
  ensure_dir(dir);
  ScatteringTable table(cfg.profile);
  DeviceSolver solver(cfg.device, table);

  DeviceState s;
  try {
    s = solver.solve();
  } catch (const convergence_error&) {
    // leave the residual history behind for diagnosis, then re-throw
    std::ofstream hist(dir + "/residual_history.txt");
    hist << "outer iteration did not converge\n";
    throw;
  }

  {
    const auto cur = solver.cell_currents(s);
    CsvWriter csv(dir + "/fields.csv",
                  {"region", "x", "y", "n_plus", "n_minus", "jx_plus", "jy_plus", "jx_minus",
                   "jy_minus"});
    for (int r = 0; r < 2; ++r) {
      for (int i = 0; i < s.nx; ++i) {
        for (int j = 0; j < s.ny; ++j) {
          csv.row({static_cast<double>(r + 1), s.x_center(r, i), s.y_center(j),
                   s.n[pack_rs(r, 0)](i, j), s.n[pack_rs(r, 1)](i, j),
                   cur[pack_rs(r, 0)].first(i, j), cur[pack_rs(r, 0)].second(i, j),
                   cur[pack_rs(r, 1)].first(i, j), cur[pack_rs(r, 1)].second(i, j)});
        }
      }
    }
  }
  {
    CsvWriter csv(dir + "/interface.csv",
                  {"y", "n1_plus", "n1_minus", "n2_plus", "n2_minus", "nu1_plus", "nu1_minus",
                   "nu2_plus", "nu2_minus", "j1_plus", "j1_minus", "j2_plus", "j2_minus"});
    for (int j = 0; j < s.ny; ++j) {
      csv.row({s.y_center(j), s.trace[0][j], s.trace[1][j], s.trace[2][j], s.trace[3][j],
               s.nu[0][j], s.nu[1][j], s.nu[2][j], s.nu[3][j], s.j_if[0][j], s.j_if[1][j],
               s.j_if[2][j], s.j_if[3][j]});
    }
  }
  {
    CsvWriter csv(dir + "/convergence.csv", {"outer", "residual"});
    for (size_t i = 0; i < s.residual_history.size(); ++i) {
      csv.row({static_cast<double>(i + 1), s.residual_history[i]});
    }
  }

  const DeviceObservables o = solver.observables(s);
  const ScaledUnits units(cfg.physics);
  ordered_json j;
  j["mode"] = cfg.device.mode == StatisticsMode::FD ? "FD" : "MB";
  j["delta_V"] = cfg.device.delta_V;
  j["tau"] = cfg.device.tau;
  // reference scales for converting the dimensionless fields to SI
  j["reference_density_per_m2"] = units.reference_density();
  j["energy_scale_joule"] = units.energy_scale();
  j["terminal_current_left"] = o.terminal_current_left;
  j["terminal_current_right"] = o.terminal_current_right;
  j["terminal_left_plus"] = o.terminal_left_species[0];
  j["terminal_left_minus"] = o.terminal_left_species[1];
  j["terminal_right_plus"] = o.terminal_right_species[0];
  j["terminal_right_minus"] = o.terminal_right_species[1];
  j["interface_flux_left"] = o.interface_flux_left;
  j["interface_flux_right"] = o.interface_flux_right;
  j["interface_flux_gap"] = o.interface_flux_left - o.interface_flux_right;
  j["dtc_residual_max"] = o.dtc_residual_max;
  j["dtc_residual_per_couple"] = o.dtc_residual_per_couple;
  j["mass_action_residual_max"] = o.mass_action_residual_max;
  j["jump_mean_plus"] = o.jump_mean[0];
  j["jump_mean_minus"] = o.jump_mean[1];
  j["div_j_max"] = o.div_j_max;
  j["min_density"] = o.min_density;
  j["outer_iterations"] = o.outer_iterations;
  j["final_update"] = o.final_update;
  // optional check of the stricter reading where the total interface flux
  // itself vanishes (it is only continuous in general)
  if (cfg.expect_zero_total_flux) {
    j["zero_total_flux_violation"] = std::abs(o.interface_flux_left);
    if (std::abs(o.interface_flux_left) > 1e-8) {
      write_json(dir + "/observables.json", j);
      throw config_error("device: total interface flux is nonzero but "
                         "device.expect_zero_total_flux was set");
    }
  }
  write_json(dir + "/observables.json", j);
  return o;
}

}  // namespace qdd
