// csv.hpp - deterministic CSV output (full double precision)
//
// This software is licensed under the terms of the Apache Licence Version 2.0
// which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.

#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "qdd/errors.hpp"

namespace qdd {

/// Format with 17 significant digits (bit-stable round trip).
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class CsvWriter {
public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw config_error("cannot open output file: " + path);
    for (size_t i = 0; i < header.size(); ++i) {
      out_ << header[i] << (i + 1 < header.size() ? "," : "\n");
    }
  }

  void row(const std::vector<double>& values) {
    for (size_t i = 0; i < values.size(); ++i) {
      out_ << fmt17(values[i]) << (i + 1 < values.size() ? "," : "\n");
    }
  }

private:
  std::ofstream out_;
};

}  // namespace qdd
