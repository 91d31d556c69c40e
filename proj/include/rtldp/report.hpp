#pragma once

/// Output writers.  Every file embeds the config hash, library version and
/// seed; CSV numeric fields use a fixed "%.12g" so repeated runs reproduce
/// byte-identical output.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rtldp/ldp.hpp"
#include "rtldp/version.hpp"

namespace rtldp {

struct RunStamp {
  std::string config_hash;
  uint64_t seed = 0;
};

inline std::string format_g12(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return std::string(buf);
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const RunStamp& stamp,
            const std::vector<std::string>& columns) {
    out_.open(path);
    if (!out_) throw std::runtime_error("cannot open output file: " + path);
    out_ << "# config_hash=" << stamp.config_hash << "\n";
    out_ << "# version=" << kVersion << "\n";
    out_ << "# seed=" << stamp.seed << "\n";
    for (size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << "\n";
  }

  void row(const std::vector<std::string>& fields) {
    for (size_t i = 0; i < fields.size(); ++i) out_ << (i ? "," : "") << fields[i];
    out_ << "\n";
  }

  void row(const std::vector<double>& values) {
    for (size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << format_g12(values[i]);
    out_ << "\n";
  }

 private:
  std::ofstream out_;
};

inline nlohmann::json write_json_report(const std::string& path, nlohmann::json j,
                                        const RunStamp& stamp) {
  j["config_hash"] = stamp.config_hash;
  j["version"] = kVersion;
  j["seed"] = stamp.seed;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << j.dump(2) << "\n";
  return j;
}

/// json-safe wrapper for possibly infinite reals.
inline nlohmann::json json_real(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline void write_cgf_csv(const std::string& path, const CgfCurve& curve,
                          const RunStamp& stamp) {
  CsvWriter w(path, stamp, {"alpha", "psi", "dpsi"});
  for (const auto& p : curve.samples) w.row(std::vector<double>{p.alpha, p.psi, p.dpsi});
}

inline void write_rate_csv(const std::string& path, const RateCurve& curve,
                           const RunStamp& stamp) {
  CsvWriter w(path, stamp, {"u", "phi", "truncated"});
  for (const auto& p : curve.samples)
    w.row({format_g12(p.u), p.minus_infinity ? "-inf" : format_g12(p.phi),
           p.truncated ? "1" : "0"});
}

inline nlohmann::json domain_json(const CgfCurve& curve) {
  nlohmann::json j;
  j["alpha_max"] = json_real(curve.alpha_max);
  j["domain_unbounded"] = curve.domain_unbounded;
  j["mean_return"] = curve.mean_return;
  j["target_measure"] = 1.0 / curve.mean_return;
  j["rho"] = curve.rho();
  j["slope_floor"] = json_real(1.0 / curve.rho());
  j["provenance"] = curve.provenance == CurveProvenance::ExactCylinder ? "exact-cylinder"
                    : curve.provenance == CurveProvenance::Inner       ? "inner"
                                                                       : "outer";
  return j;
}

}  // namespace rtldp
