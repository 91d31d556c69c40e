#pragma once

/// Experiment configuration: one JSON document describing the SFT, the
/// potential, the target set, and per-command parameters.  Validation is
/// strict (unknown keys are rejected) and happens before any computation.
/// An FNV-1a hash of the effective config (seed included, output paths and
/// thread counts excluded) is embedded in every output file.

#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rtldp/cylinder_set.hpp"
#include "rtldp/ldp.hpp"
#include "rtldp/openset.hpp"
#include "rtldp/potential.hpp"
#include "rtldp/sft.hpp"

namespace rtldp {

using nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace cfg {

inline void require_keys(const json& j, const std::string& where,
                         const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

template <typename T>
inline T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for '" + key + "': " + e.what());
  }
}

template <typename T>
inline T get_required(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError("missing key '" + key + "' in " + where);
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for '" + key + "' in " + where + ": " + e.what());
  }
}

}  // namespace cfg

inline Sft sft_from_json(const json& j) {
  cfg::require_keys(j, "sft", {"name", "alphabet_size", "transitions", "forbidden_words"});
  if (j.contains("name")) {
    std::string name = j.at("name").get<std::string>();
    if (name == "FULL2") return Sft::full2();
    if (name == "GOLD") return Sft::golden_mean();
    throw ConfigError("unknown sft name '" + name + "' (built-ins: FULL2, GOLD)");
  }
  int n = cfg::get_required<int>(j, "alphabet_size", "sft");
  if (j.contains("transitions")) {
    auto rows = j.at("transitions");
    if (!rows.is_array() || static_cast<int>(rows.size()) != n)
      throw ConfigError("transitions must be an NxN array");
    std::vector<uint8_t> a;
    for (const auto& row : rows) {
      if (!row.is_array() || static_cast<int>(row.size()) != n)
        throw ConfigError("transitions must be an NxN array");
      for (const auto& v : row) a.push_back(static_cast<uint8_t>(v.get<int>()));
    }
    return Sft::make(n, std::move(a));
  }
  if (j.contains("forbidden_words")) {
    // Forbidden words over the full N-shift compile to a higher-block SFT.
    std::vector<std::vector<int>> words;
    int max_len = 1;
    for (const auto& w : j.at("forbidden_words")) {
      words.push_back(parse_word(w.get<std::string>(), n));
      max_len = std::max(max_len, static_cast<int>(words.back().size()));
    }
    if (max_len == 1) throw ConfigError("forbidding single symbols just shrinks the alphabet");
    int k = max_len - 1;
    Sft full = Sft::make(n, std::vector<uint8_t>(static_cast<size_t>(n) * n, 1));
    auto contains_forbidden = [&](const std::vector<int>& text) {
      for (const auto& w : words) {
        if (w.size() > text.size()) continue;
        for (size_t i = 0; i + w.size() <= text.size(); ++i) {
          bool hit = true;
          for (size_t t = 0; t < w.size(); ++t)
            if (text[i + t] != w[t]) {
              hit = false;
              break;
            }
          if (hit) return true;
        }
      }
      return false;
    };
    // States: k-words free of forbidden words; transitions when the joined
    // (k+1)-word is also free.  Prune stranded states iteratively.
    std::vector<std::vector<int>> states;
    for (uint64_t c : admissible_word_codes(full, k)) {
      auto s = code_to_symbols(c, k, n);
      if (!contains_forbidden(s)) states.push_back(s);
    }
    std::vector<uint8_t> alive(states.size(), 1);
    auto allowed_pair = [&](size_t u, size_t v) {
      for (int i = 0; i + 1 < k; ++i)
        if (states[u][i + 1] != states[v][i]) return false;
      std::vector<int> joined = states[u];
      joined.push_back(states[v][k - 1]);
      return !contains_forbidden(joined);
    };
    bool changed = true;
    while (changed) {
      changed = false;
      for (size_t u = 0; u < states.size(); ++u) {
        if (!alive[u]) continue;
        bool has_out = false, has_in = false;
        for (size_t v = 0; v < states.size(); ++v) {
          if (!alive[v]) continue;
          if (allowed_pair(u, v)) has_out = true;
          if (allowed_pair(v, u)) has_in = true;
        }
        if (!has_out || !has_in) {
          alive[u] = 0;
          changed = true;
        }
      }
    }
    std::vector<size_t> keep;
    for (size_t u = 0; u < states.size(); ++u)
      if (alive[u]) keep.push_back(u);
    if (keep.empty()) throw ConfigError("forbidden words admit no bi-infinite sequences");
    int m = static_cast<int>(keep.size());
    std::vector<uint8_t> trans(static_cast<size_t>(m) * m, 0);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        if (allowed_pair(keep[a], keep[b])) trans[static_cast<size_t>(a) * m + b] = 1;
    return Sft::make(m, std::move(trans));
  }
  throw ConfigError("sft needs 'name', 'transitions', or 'forbidden_words'");
}

inline Potential potential_from_json(const json& j, const Sft& sft) {
  cfg::require_keys(j, "potential",
                    {"name", "probabilities", "window_left", "window_right", "values"});
  if (j.contains("name")) {
    std::string name = j.at("name").get<std::string>();
    if (name == "zero") return Potential::zero(sft);
    if (name == "bernoulli")
      return Potential::bernoulli(
          sft, cfg::get_required<std::vector<double>>(j, "probabilities", "potential"));
    throw ConfigError("unknown potential name '" + name + "' (built-ins: zero, bernoulli)");
  }
  int l = cfg::get_required<int>(j, "window_left", "potential");
  int r = cfg::get_required<int>(j, "window_right", "potential");
  std::map<std::string, double> values;
  for (auto it = j.at("values").begin(); it != j.at("values").end(); ++it)
    values[it.key()] = it.value().get<double>();
  return Potential::from_table(sft, l, r, values);
}

inline CylinderSet cylinder_from_json(const json& j, const Sft& sft) {
  cfg::require_keys(j, "cylinder set", {"kind", "depth", "anchor", "words"});
  auto words = cfg::get_required<std::vector<std::string>>(j, "words", "cylinder set");
  if (j.contains("depth")) return CylinderSet::from_depth_words(sft, j.at("depth").get<int>(), words);
  int anchor = cfg::get_or<int>(j, "anchor", 0);
  std::vector<Word> ws;
  for (const auto& text : words)
    ws.push_back(Word{parse_word(text, sft.alphabet_size()), anchor});
  return CylinderSet::from_words(sft, ws);
}

inline std::shared_ptr<OpenSetSpec> openset_from_json(const json& j, const Sft& sft) {
  cfg::require_keys(j, "open set", {"kind", "name", "pattern", "cylinder_union", "tables"});
  if (j.contains("name")) {
    std::string name = j.at("name").get<std::string>();
    if (name == "FUTURE11") return make_future11(sft);
    if (name == "NEXT0") return make_next0(sft);
    throw ConfigError("unknown open-set name '" + name + "' (built-ins: FUTURE11, NEXT0)");
  }
  if (j.contains("pattern")) {
    const json& p = j.at("pattern");
    cfg::require_keys(p, "pattern", {"prefix", "pattern", "direction"});
    auto prefix = parse_word(cfg::get_required<std::string>(p, "prefix", "pattern"),
                             sft.alphabet_size());
    auto pattern = parse_word(cfg::get_required<std::string>(p, "pattern", "pattern"),
                              sft.alphabet_size());
    std::string dir = cfg::get_or<std::string>(p, "direction", "future");
    if (dir != "future" && dir != "past")
      throw ConfigError("pattern direction must be 'future' or 'past'");
    return std::make_shared<PatternSpec>(sft, prefix, pattern,
                                         dir == "future" ? PatternSpec::Direction::Future
                                                         : PatternSpec::Direction::Past);
  }
  if (j.contains("cylinder_union"))
    return std::make_shared<ExplicitUnionSpec>(sft,
                                               cylinder_from_json(j.at("cylinder_union"), sft));
  if (j.contains("tables")) {
    std::vector<TableSpec::DepthTable> tables;
    for (const auto& t : j.at("tables")) {
      cfg::require_keys(t, "table", {"depth", "in", "boundary"});
      TableSpec::DepthTable dt;
      dt.depth = cfg::get_required<int>(t, "depth", "table");
      auto mk = [&](const char* key) {
        std::vector<std::string> ws = cfg::get_or<std::vector<std::string>>(t, key, {});
        return ws.empty() ? CylinderSet::empty(sft, -dt.depth, 2 * dt.depth + 1)
                          : CylinderSet::from_depth_words(sft, dt.depth, ws);
      };
      dt.in_words = mk("in");
      dt.boundary_words = mk("boundary");
      tables.push_back(std::move(dt));
    }
    return std::make_shared<TableSpec>(sft, std::move(tables));
  }
  throw ConfigError("open set needs 'name', 'pattern', 'cylinder_union', or 'tables'");
}

/// Target of an experiment: either a cylinder set or an open-set spec.
struct Target {
  std::optional<CylinderSet> cylinder;
  std::shared_ptr<OpenSetSpec> open_set;
  bool is_open() const { return open_set != nullptr; }
};

inline Target target_from_json(const json& j, const Sft& sft) {
  std::string kind = cfg::get_required<std::string>(j, "kind", "target");
  Target t;
  if (kind == "cylinder") {
    t.cylinder = cylinder_from_json(j, sft);
  } else if (kind == "open_set") {
    t.open_set = openset_from_json(j, sft);
  } else {
    throw ConfigError("target kind must be 'cylinder' or 'open_set'");
  }
  return t;
}

/// FNV-1a (64-bit) over the canonical (sorted-key) JSON serialization.
inline std::string config_hash(const json& j) {
  json canon = j;
  canon.erase("out_dir");
  canon.erase("threads");
  std::string text = canon.dump();
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

struct ExperimentConfig {
  json raw;
  Sft sft;
  Potential potential;
  std::optional<Target> target;
  std::vector<CylinderSet> holes;
  uint64_t seed = 20250809;
  int threads = 1;
  std::string out_dir = ".";
  std::string hash;

  // Command-specific parameters with defaults.
  CgfGridOptions alpha_grid;
  std::vector<double> u_values;
  std::vector<int> depths;
  double tolerance = 1e-4;
  int64_t trials = 100000;
  int n_returns = 100;
  int64_t horizon = 1'000'000;
  int gibbs_max_depth = 3;
  bool complement_check = false;
  double tolerance_scale = 1.0;
  json simulate_params;
};

inline ExperimentConfig parse_config(const json& j) {
  cfg::require_keys(j, "config",
                    {"sft", "potential", "target", "holes", "alpha_grid", "u_grid", "depths",
                     "tolerance", "trials", "n", "horizon", "seed", "threads", "out_dir",
                     "gibbs_max_depth", "complement_check", "tolerance_scale", "simulate"});
  ExperimentConfig c;
  c.raw = j;
  if (!j.contains("sft")) throw ConfigError("missing 'sft'");
  c.sft = sft_from_json(j.at("sft"));
  c.potential = j.contains("potential") ? potential_from_json(j.at("potential"), c.sft)
                                        : Potential::zero(c.sft);
  if (j.contains("target")) c.target = target_from_json(j.at("target"), c.sft);
  if (j.contains("holes"))
    for (const auto& h : j.at("holes")) c.holes.push_back(cylinder_from_json(h, c.sft));
  c.seed = cfg::get_or<uint64_t>(j, "seed", c.seed);
  c.threads = cfg::get_or<int>(j, "threads", 1);
  c.out_dir = cfg::get_or<std::string>(j, "out_dir", ".");
  if (j.contains("alpha_grid")) {
    const json& g = j.at("alpha_grid");
    cfg::require_keys(g, "alpha_grid", {"points", "span", "domain_margin"});
    c.alpha_grid.points = cfg::get_or<int>(g, "points", 64);
    c.alpha_grid.alpha_span = cfg::get_or<double>(g, "span", 4.0);
    c.alpha_grid.domain_margin = cfg::get_or<double>(g, "domain_margin", 1e-3);
  }
  if (j.contains("u_grid")) {
    const json& g = j.at("u_grid");
    cfg::require_keys(g, "u_grid", {"values", "points", "min", "max"});
    if (g.contains("values")) {
      c.u_values = g.at("values").get<std::vector<double>>();
    } else {
      int pts = cfg::get_or<int>(g, "points", 40);
      double lo = cfg::get_required<double>(g, "min", "u_grid");
      double hi = cfg::get_required<double>(g, "max", "u_grid");
      for (int i = 0; i < pts; ++i)
        c.u_values.push_back(lo + (hi - lo) * i / std::max(1, pts - 1));
    }
  }
  if (j.contains("depths")) {
    const json& d = j.at("depths");
    if (d.is_array()) {
      c.depths = d.get<std::vector<int>>();
    } else {
      cfg::require_keys(d, "depths", {"min", "max"});
      int lo = cfg::get_required<int>(d, "min", "depths");
      int hi = cfg::get_required<int>(d, "max", "depths");
      for (int m = lo; m <= hi; ++m) c.depths.push_back(m);
    }
  }
  c.tolerance = cfg::get_or<double>(j, "tolerance", 1e-4);
  c.trials = cfg::get_or<int64_t>(j, "trials", 100000);
  c.n_returns = cfg::get_or<int>(j, "n", 100);
  c.horizon = cfg::get_or<int64_t>(j, "horizon", 1'000'000);
  c.gibbs_max_depth = cfg::get_or<int>(j, "gibbs_max_depth", 3);
  c.complement_check = cfg::get_or<bool>(j, "complement_check", false);
  c.tolerance_scale = cfg::get_or<double>(j, "tolerance_scale", 1.0);
  if (j.contains("simulate")) {
    c.simulate_params = j.at("simulate");
    cfg::require_keys(c.simulate_params, "simulate",
                      {"mode", "alpha", "u", "tilted", "lower_branch", "stream_csv", "depth"});
  }
  c.hash = config_hash(j);
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(j);
}

}  // namespace rtldp
