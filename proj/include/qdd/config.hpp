// config.hpp - flat dotted-key run configuration
//
// This software is licensed under the terms of the Apache Licence Version 2.0
// which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.

#pragma once

#include <map>
#include <string>

#include "qdd/device.hpp"
#include "qdd/scattering.hpp"
#include "qdd/units.hpp"

namespace qdd {

/// Flat `key = value` configuration with dotted keys, `#` comments and
/// last-assignment-wins semantics.  Raw value strings are preserved, so
/// parse -> serialize -> parse is the identity.
class Config {
public:
  Config() = default;
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text, const std::string& origin = "<string>");

  std::string serialize() const;

  bool has(const std::string& key) const { return kv_.count(key) > 0; }
  void set(const std::string& key, const std::string& value);

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // required variants: throw config_error naming the key when absent
  std::string require_string(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

private:
  std::map<std::string, std::string> kv_;
};

/// Typed view of one run: physical parameters, quantum profile, meshes and
/// solver knobs.  Construction validates the documented minima
/// (K >= 8, M >= 8, Q >= 32, positive tolerances).
struct RunConfig {
  PhysicalConfig physics;
  PotentialProfile profile;
  DeviceParams device;
  std::string output_dir = "out";
  bool expect_zero_total_flux = false;

  // scatter command sampling
  int scatter_n_E = 100;
  int scatter_n_py = 50;
  double scatter_E_max = 8.0;

  // milne command driver
  std::string milne_case = "equilibrium";  // equilibrium | zero | cosine | currents
  int milne_side = 1;
  std::array<double, 4> milne_jx{};
  std::array<double, 4> milne_traces = {1.0, 1.0, 1.0, 1.0};

  static RunConfig from(const Config& c);
};

/// Parse "w:V,w:V,..." segment lists.
PotentialProfile parse_profile(const Config& c);

}  // namespace qdd
