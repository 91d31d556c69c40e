// Command-line front end: configuration-driven experiments over the
// return-time LDP library.  Commands:
//   pressure  - pressure, survivor pressures per declared hole, Gibbs envelope
//   rate      - CGF and rate-function curves (cgf.csv, rate.csv, domain.json)
//   simulate  - Monte Carlo / exact-DP return-time statistics
//   approx    - inner/outer/annulus word lists and their mass tables
//   verify    - acceptance suite with machine-readable verdicts
// Exit codes: 0 success, 1 verification failure, 2 config error, 3 numeric
// failure, 4 partial result (e.g. inner/outer not converged).

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "rtldp/acceptance.hpp"
#include "rtldp/config.hpp"
#include "rtldp/ldp.hpp"
#include "rtldp/report.hpp"
#include "rtldp/simulate.hpp"

namespace fs = std::filesystem;
using namespace rtldp;

namespace {

struct CliOverrides {
  std::string config_path;
  std::string out_dir;
  bool has_out = false;
  uint64_t seed = 0;
  bool has_seed = false;
  int threads = 0;
  bool has_threads = false;
};

ExperimentConfig load_with_overrides(const CliOverrides& ov) {
  std::ifstream in(ov.config_path);
  if (!in) throw ConfigError("cannot open config file: " + ov.config_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  if (ov.has_seed) j["seed"] = ov.seed;
  if (ov.has_threads) j["threads"] = ov.threads;
  if (ov.has_out) j["out_dir"] = ov.out_dir;
  return parse_config(j);
}

RunStamp stamp_of(const ExperimentConfig& c) { return RunStamp{c.hash, c.seed}; }

fs::path ensure_out_dir(const ExperimentConfig& c) {
  fs::path dir(c.out_dir);
  fs::create_directories(dir);
  return dir;
}

int cmd_pressure(const ExperimentConfig& c) {
  json rep;
  double p = pressure(c.sft, c.potential);
  rep["pressure"] = p;
  rep["sft_alphabet"] = c.sft.alphabet_size();
  rep["irreducible"] = c.sft.diagnostics().irreducible;
  rep["aperiodic"] = c.sft.diagnostics().aperiodic;
  json holes = json::array();
  for (const auto& h : c.holes) {
    SurvivorPressure sp = survivor_pressure(c.sft, c.potential, h);
    json hj;
    hj["words"] = h.word_strings();
    hj["survivor_pressure"] = json_real(sp.value);
    hj["whole_space"] = sp.whole_space;
    hj["alpha"] = json_real(p - sp.value);
    holes.push_back(hj);
  }
  rep["holes"] = holes;
  GibbsChain chain = equilibrium_chain(c.sft, c.potential);
  GibbsReport gb = gibbs_constant(chain, c.potential, c.gibbs_max_depth);
  rep["gibbs"] = {{"b", gb.b},
                  {"centering", gb.centering},
                  {"max_depth", c.gibbs_max_depth},
                  {"argmax_depth", gb.argmax_depth},
                  {"argmax_word", word_to_string(gb.argmax_word.symbols, c.sft.alphabet_size())},
                  {"per_depth_halfwidth", gb.per_depth_halfwidth}};
  rep["entropy"] = chain.entropy();
  rep["warnings"] = chain.warnings();
  fs::path dir = ensure_out_dir(c);
  json stamped = write_json_report((dir / "pressure.json").string(), rep, stamp_of(c));
  std::cout << stamped.dump(2) << "\n";
  return 0;
}

int cmd_rate(const ExperimentConfig& c) {
  if (!c.target) throw ConfigError("rate needs a 'target'");
  fs::path dir = ensure_out_dir(c);
  RunStamp stamp = stamp_of(c);
  int exit_code = 0;
  std::shared_ptr<CgfCurve> curve;
  if (!c.target->is_open()) {
    curve = std::make_shared<CgfCurve>(
        build_cgf_curve(c.sft, c.potential, *c.target->cylinder, c.alpha_grid));
    write_cgf_csv((dir / "cgf.csv").string(), *curve, stamp);
  } else {
    // Open set: per grid alpha, evaluate the inner/outer pair at the deepest
    // configured depth and report the common value when converged.
    const OpenSetSpec& spec = *c.target->open_set;
    std::vector<int> depths = c.depths;
    if (depths.empty())
      for (int m = std::max(1, spec.min_depth()); m <= std::max(1, spec.min_depth()) + 7; ++m)
        depths.push_back(m);
    Approximation deepest = approximations(c.sft, spec, depths.back());
    auto outer_curve = std::make_shared<CgfCurve>(build_cgf_curve(
        c.sft, c.potential, deepest.outer, c.alpha_grid, CurveProvenance::Outer, spec.name()));
    CgfEvaluator inner_ev(c.sft, c.potential, deepest.inner);
    CsvWriter w((dir / "cgf.csv").string(), stamp,
                {"alpha", "psi_inner", "psi_outer", "psi"});
    bool all_converged = true;
    for (const auto& p : outer_curve->samples) {
      double inner = std::numeric_limits<double>::quiet_NaN();
      if (p.alpha < inner_ev.alpha_max()) inner = inner_ev.eval(p.alpha).psi;
      double gap = std::abs(inner - p.psi);
      bool conv = std::isfinite(gap) && gap <= c.tolerance;
      if (!conv) all_converged = false;
      double mid = 0.5 * (inner + p.psi);
      w.row({format_g12(p.alpha), format_g12(inner), format_g12(p.psi),
             conv ? format_g12(mid) : "nan"});
    }
    if (!all_converged) exit_code = 4;
    curve = outer_curve;  // rate curve from the outer branch evaluator
  }
  std::vector<double> us = c.u_values;
  if (us.empty()) {
    double lo = std::max(1.0 / curve->rho() * 1.01, 1e-3);
    double hi = curve->mean_return * 4.0;
    for (int i = 0; i < 40; ++i) us.push_back(lo + (hi - lo) * i / 39.0);
  }
  RateCurve rc = build_rate_curve(curve, us);
  if (c.complement_check && c.target && !c.target->is_open()) {
    CylinderSet comp = c.target->cylinder->complement(c.sft);
    auto comp_curve =
        std::make_shared<CgfCurve>(build_cgf_curve(c.sft, c.potential, comp, c.alpha_grid));
    RateCurve comp_rate = build_rate_curve(comp_curve, {});
    CsvWriter w((dir / "rate.csv").string(), stamp,
                {"u", "phi", "truncated", "phi_complement_route", "gap"});
    for (const auto& p : rc.samples) {
      std::string phi_c = "nan", gap = "nan";
      if (p.u > 1.0 + 1e-9) {
        LegendreResult r = complement_rate(comp_rate, p.u);
        if (!r.minus_infinity) {
          phi_c = format_g12(r.phi);
          if (!p.minus_infinity) gap = format_g12(std::abs(r.phi - p.phi));
        } else {
          phi_c = "-inf";
        }
      }
      w.row({format_g12(p.u), p.minus_infinity ? "-inf" : format_g12(p.phi),
             p.truncated ? "1" : "0", phi_c, gap});
    }
  } else {
    write_rate_csv((dir / "rate.csv").string(), rc, stamp);
  }
  write_json_report((dir / "domain.json").string(), domain_json(*curve), stamp_of(c));
  std::cout << "wrote " << (dir / "cgf.csv") << ", " << (dir / "rate.csv") << ", "
            << (dir / "domain.json") << "\n";
  return exit_code;
}

int cmd_simulate(const ExperimentConfig& c) {
  if (!c.target) throw ConfigError("simulate needs a 'target'");
  const json& sp = c.simulate_params.is_null() ? json::object() : c.simulate_params;
  std::string mode = cfg::get_or<std::string>(sp, "mode", "cgf");
  fs::path dir = ensure_out_dir(c);
  RunStamp stamp = stamp_of(c);
  json rep;
  rep["mode"] = mode;

  CylinderSet target_set = [&]() {
    if (!c.target->is_open()) return *c.target->cylinder;
    int depth = cfg::get_or<int>(sp, "depth", std::max(1, c.target->open_set->min_depth()));
    return approximations(c.sft, *c.target->open_set, depth).outer;
  }();
  CylinderSet reduced = target_set.reduce(c.sft);
  GibbsChain chain = equilibrium_chain(c.sft, c.potential, reduced.length());

  auto record_json = [](const EstimateRecord& r) {
    json j;
    j["value"] = json_real(r.value);
    j["std_error"] = r.std_error;
    j["trials"] = r.trials;
    j["batches"] = r.batches;
    j["n"] = r.n;
    j["seed"] = r.seed;
    j["truncated_trials"] = r.truncated_trials;
    j["warnings"] = r.warnings;
    return j;
  };

  if (mode == "cgf") {
    double alpha = cfg::get_required<double>(sp, "alpha", "simulate");
    if (c.target->is_open()) {
      int depth = cfg::get_or<int>(sp, "depth", std::max(1, c.target->open_set->min_depth()));
      Approximation ap = approximations(c.sft, *c.target->open_set, depth);
      CylinderSet ri = ap.inner.reduce(c.sft), ro = ap.outer.reduce(c.sft);
      GibbsChain fine = equilibrium_chain(c.sft, c.potential,
                                          std::max(ri.length(), ro.length()));
      auto [inner, outer] = empirical_cgf_sandwich(fine, ap.inner, ap.outer, alpha,
                                                   c.n_returns, c.trials, c.seed, c.horizon,
                                                   c.threads);
      rep["inner"] = record_json(inner);
      rep["outer"] = record_json(outer);
    } else {
      double domain = cgf_domain(c.sft, c.potential, target_set);
      rep["estimate"] = record_json(empirical_cgf(chain, target_set, alpha, c.n_returns,
                                                  c.trials, c.seed, c.horizon, c.threads,
                                                  domain));
      rep["analytic"] = alpha < domain ? json_real(cgf(c.sft, c.potential, target_set, alpha).psi)
                                       : json("outside-domain");
    }
    rep["alpha"] = alpha;
  } else if (mode == "tail") {
    double u = cfg::get_required<double>(sp, "u", "simulate");
    bool lower = cfg::get_or<bool>(sp, "lower_branch", false);
    TailOptions topt;
    topt.lower_branch = lower;
    topt.horizon = c.horizon;
    topt.threads = c.threads;
    std::unique_ptr<GibbsChain> tilt;
    if (cfg::get_or<bool>(sp, "tilted", false)) {
      auto curve = std::make_shared<CgfCurve>(
          build_cgf_curve(c.sft, c.potential, target_set, c.alpha_grid));
      LegendreResult leg = legendre(*curve, u);
      if (!leg.minus_infinity) {
        tilt = std::make_unique<GibbsChain>(penalized_chain(
            c.sft, c.potential, target_set, curve->evaluator->eval(leg.alpha_star).psi,
            chain.blocks().block_length()));
        topt.tilt = tilt.get();
        rep["tilt_alpha_star"] = leg.alpha_star;
        rep["analytic_rate"] = leg.phi;
      }
    }
    rep["estimate"] =
        record_json(empirical_tail(chain, target_set, u, c.n_returns, c.trials, c.seed, topt));
    rep["u"] = u;
    rep["lower_branch"] = lower;
  } else if (mode == "returns") {
    bool stream = cfg::get_or<bool>(sp, "stream_csv", false);
    std::unique_ptr<CsvWriter> csv;
    if (stream)
      csv = std::make_unique<CsvWriter>((dir / "returns.csv").string(), stamp,
                                        std::vector<std::string>{"trial", "n", "r_n", "branch"});
    double mean_acc = 0.0;
    int64_t done = 0, truncated = 0;
    for (int64_t i = 0; i < c.trials; ++i) {
      ReturnTimeSeries s = sample_return_times(chain, target_set, c.n_returns, c.horizon,
                                               c.seed, static_cast<uint64_t>(i));
      if (s.truncated) {
        ++truncated;
        continue;
      }
      mean_acc += static_cast<double>(s.times.back());
      ++done;
      if (csv)
        csv->row({std::to_string(i), std::to_string(c.n_returns),
                  std::to_string(s.times.back()), s.branch});
    }
    rep["mean_r_n"] = done ? mean_acc / done : 0.0;
    rep["completed_trials"] = done;
    rep["truncated_trials"] = truncated;
  } else {
    throw ConfigError("simulate mode must be cgf | tail | returns");
  }
  json stamped = write_json_report((dir / "simulate.json").string(), rep, stamp);
  std::cout << stamped.dump(2) << "\n";
  return 0;
}

int cmd_approx(const ExperimentConfig& c) {
  if (!c.target || !c.target->is_open())
    throw ConfigError("approx needs an open-set target");
  const OpenSetSpec& spec = *c.target->open_set;
  std::vector<int> depths = c.depths;
  if (depths.empty())
    for (int m = std::max(1, spec.min_depth()); m <= std::max(1, spec.min_depth()) + 5; ++m)
      depths.push_back(m);
  fs::path dir = ensure_out_dir(c);
  RunStamp stamp = stamp_of(c);
  GibbsChain chain = equilibrium_chain(c.sft, c.potential);
  CsvWriter table((dir / "approx_summary.csv").string(), stamp,
                  {"depth", "inner_words", "outer_words", "annulus_words", "mu_annulus",
                   "rho_annulus"});
  for (int m : depths) {
    Approximation ap = approximations(c.sft, spec, m);
    for (auto [set, tag] : {std::pair<const CylinderSet*, const char*>{&ap.inner, "B"},
                            {&ap.outer, "C"},
                            {&ap.annulus, "D"}}) {
      std::ofstream out(dir / (std::string(tag) + std::to_string(m) + ".txt"));
      for (const auto& s : set->word_strings()) out << s << "\n";
    }
    double mu_d = chain.set_mass(ap.annulus.reduce(c.sft));
    std::string rho_d = "nan";
    try {
      rho_d = format_g12(max_invariant_mass(c.sft, ap.annulus));
    } catch (const std::runtime_error&) {
      // depth beyond the max-mean-cycle memory budget: leave as nan
    }
    table.row({std::to_string(m), std::to_string(ap.inner.size()),
               std::to_string(ap.outer.size()), std::to_string(ap.annulus.size()),
               format_g12(mu_d), rho_d});
  }
  std::cout << "wrote word lists and approx_summary.csv under " << dir << "\n";
  return 0;
}

int cmd_verify(const ExperimentConfig& c, bool known_failures_ok) {
  auto results = run_acceptance(c.tolerance_scale, c.seed, &std::cout);
  json rep;
  json arr = json::array();
  bool all_pass = true;
  for (const auto& r : results) {
    all_pass = all_pass && r.pass;
    arr.push_back({{"id", r.id},
                   {"name", r.name},
                   {"pass", r.pass},
                   {"seconds", r.seconds},
                   {"details", r.details}});
  }
  rep["criteria"] = arr;
  rep["all_pass"] = all_pass;
  rep["tolerance_scale"] = c.tolerance_scale;
  rep["matches_expected_profile"] = acceptance_matches_expected(results);
  fs::path dir = ensure_out_dir(c);
  write_json_report((dir / "verify.json").string(), rep, stamp_of(c));
  if (known_failures_ok) return acceptance_matches_expected(results) ? 0 : 1;
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"return-time large deviations on subshifts of finite type"};
  app.require_subcommand(1);
  CliOverrides ov;
  app.add_option("--config", ov.config_path, "experiment config (JSON)");
  auto* out_opt = app.add_option("--out", ov.out_dir, "output directory");
  auto* seed_opt = app.add_option("--seed", ov.seed, "override the config seed");
  auto* thr_opt = app.add_option("--threads", ov.threads, "cap worker threads");
  auto* p = app.add_subcommand("pressure", "pressure, survivor pressures, Gibbs envelope");
  auto* r = app.add_subcommand("rate", "CGF and rate-function curves");
  auto* s = app.add_subcommand("simulate", "Monte Carlo / DP return-time statistics");
  auto* a = app.add_subcommand("approx", "inner/outer/annulus word lists and tables");
  auto* v = app.add_subcommand("verify", "run the acceptance suite");
  for (auto* sub : {p, r, s, a, v}) sub->fallthrough();
  bool known_ok = false;
  v->add_flag("--known-failures-ok", known_ok,
              "exit 0 when the verdict matrix matches the documented expected profile");

  CLI11_PARSE(app, argc, argv);
  ov.has_out = out_opt->count() > 0;
  ov.has_seed = seed_opt->count() > 0;
  ov.has_threads = thr_opt->count() > 0;

  try {
    ExperimentConfig c = [&]() {
      if (!ov.config_path.empty()) return load_with_overrides(ov);
      // verify runs on built-in fixtures without a config
      if (!v->parsed()) throw ConfigError("--config is required for this command");
      json j = {{"sft", {{"name", "FULL2"}}}};
      if (ov.has_seed) j["seed"] = ov.seed;
      if (ov.has_out) j["out_dir"] = ov.out_dir;
      return parse_config(j);
    }();
    if (p->parsed()) return cmd_pressure(c);
    if (r->parsed()) return cmd_rate(c);
    if (s->parsed()) return cmd_simulate(c);
    if (a->parsed()) return cmd_approx(c);
    if (v->parsed()) return cmd_verify(c, known_ok);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const CgfDomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
