// config.cpp - flat dotted-key run configuration
//
// This software is licensed under the terms of the Apache Licence Version 2.0
// which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.

#include "qdd/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "qdd/errors.hpp"

namespace qdd {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str(), path);
}

Config Config::parse_string(const std::string& text, const std::string& origin) {
  Config c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw config_error(origin + ":" + std::to_string(lineno) +
                         ": expected 'key = value', got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw config_error(origin + ":" + std::to_string(lineno) + ": empty key");
    }
    c.kv_[key] = value;
  }
  return c;
}

std::string Config::serialize() const {
  std::ostringstream os;
  for (const auto& [k, v] : kv_) os << k << " = " << v << "\n";
  return os.str();
}

void Config::set(const std::string& key, const std::string& value) { kv_[key] = value; }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

std::string Config::require_string(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw config_error("missing required config key '" + key + "'");
  return it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  char* end = nullptr;
  const double v = std::strtod(it->second.c_str(), &end);
  if (end == it->second.c_str() || *end != '\0') {
    throw config_error("config key '" + key + "': cannot parse '" + it->second +
                       "' as a real number");
  }
  return v;
}

int Config::get_int(const std::string& key, int fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  char* end = nullptr;
  const long v = std::strtol(it->second.c_str(), &end, 10);
  if (end == it->second.c_str() || *end != '\0') {
    throw config_error("config key '" + key + "': cannot parse '" + it->second +
                       "' as an integer");
  }
  return static_cast<int>(v);
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw config_error("config key '" + key + "': cannot parse '" + v + "' as a boolean");
}

PotentialProfile parse_profile(const Config& c) {
  PotentialProfile p;
  p.delta_V = c.get_double("physics.delta_V", 0.0);
  const std::string segs = c.get_string("profile.segments", "");
  std::istringstream in(segs);
  std::string item;
  while (std::getline(in, item, ',')) {
    const size_t colon = item.find(':');
    if (colon == std::string::npos) {
      throw config_error("profile.segments: expected 'width:value' pairs, got '" + item + "'");
    }
    PotentialProfile::Segment s;
    try {
      s.width = std::stod(item.substr(0, colon));
      s.value = std::stod(item.substr(colon + 1));
    } catch (const std::exception&) {
      throw config_error("profile.segments: cannot parse '" + item + "'");
    }
    p.segments.push_back(s);
  }
  p.validate();
  return p;
}

RunConfig RunConfig::from(const Config& c) {
  RunConfig r;

  r.physics.temperature = c.get_double("physics.temperature", 300.0);
  r.physics.fermi_velocity = c.get_double("physics.fermi_velocity", 1.0e6);
  r.physics.delta_V = c.get_double("physics.delta_V", 0.0);
  r.physics.tau = c.get_double("physics.tau", 0.0);
  r.physics.half_length_L = c.get_double("device.L", 1.0);
  r.physics.half_width_l = c.get_double("device.l", 0.5);
  r.physics.validate();

  r.profile = parse_profile(c);

  const std::string mode = c.get_string("mode", "MB");
  if (mode != "MB" && mode != "FD") {
    throw config_error("mode must be 'MB' or 'FD', got '" + mode + "'");
  }

  DeviceParams& d = r.device;
  d.mode = (mode == "FD") ? StatisticsMode::FD : StatisticsMode::MB;
  d.delta_V = r.physics.delta_V;
  d.tau = r.physics.tau;
  d.L = r.physics.half_length_L;
  d.l = r.physics.half_width_l;
  d.nx = c.get_int("mesh.nx", 64);
  d.ny = c.get_int("mesh.ny", 32);
  d.eps_max = c.get_double("grid.eps_max", 30.0);
  d.radial_target = c.get_int("grid.M", 96);
  d.K = c.get_int("grid.K", 32);
  d.gl_per_cell = c.get_int("grid.P", 8);
  d.Xi = c.get_double("milne.Xi", 30.0);
  d.q_target = c.get_int("milne.Q", 48);
  d.outer_tol = c.get_double("solver.outer_tol", 1e-9);
  d.damping = c.get_double("solver.damping", 0.5);
  d.max_outer = c.get_int("solver.max_outer", 200);
  d.freeze_ninf = c.get_bool("solver.freeze_ninf", false);
  d.boundary.n_left = {c.get_double("boundary.left_plus", 1.0),
                       c.get_double("boundary.left_minus", 1.0)};
  d.boundary.n_right = {c.get_double("boundary.right_plus", 1.0),
                        c.get_double("boundary.right_minus", 1.0)};
  d.U.c0 = c.get_double("potential.c0", 0.0);
  d.U.ax = c.get_double("potential.ax", 0.0);
  d.U.ay = c.get_double("potential.ay", 0.0);
  d.U.axy = c.get_double("potential.axy", 0.0);

  if (d.K < 8) throw config_error("grid.K must be >= 8");
  if (d.radial_target < 8) throw config_error("grid.M must be >= 8");
  if (d.q_target < 32) throw config_error("milne.Q must be >= 32");
  if (!(d.outer_tol > 0.0)) throw config_error("solver.outer_tol must be > 0");
  d.validate();

  r.output_dir = c.get_string("output.dir", "out");
  r.expect_zero_total_flux = c.get_bool("device.expect_zero_total_flux", false);

  r.scatter_n_E = c.get_int("scatter.n_E", 100);
  r.scatter_n_py = c.get_int("scatter.n_py", 50);
  r.scatter_E_max = c.get_double("scatter.E_max", 8.0);

  r.milne_case = c.get_string("milne.case", "equilibrium");
  r.milne_side = c.get_int("milne.side", 1);
  r.milne_jx = {c.get_double("milne.j1_plus", 0.0), c.get_double("milne.j1_minus", 0.0),
                c.get_double("milne.j2_plus", 0.0), c.get_double("milne.j2_minus", 0.0)};
  r.milne_traces = {c.get_double("milne.n1_plus", 1.0), c.get_double("milne.n1_minus", 1.0),
                    c.get_double("milne.n2_plus", 1.0), c.get_double("milne.n2_minus", 1.0)};
  if (r.milne_side != 1 && r.milne_side != 2) throw config_error("milne.side must be 1 or 2");
  return r;
}

}  // namespace qdd
