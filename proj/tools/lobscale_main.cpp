// lobscale CLI: configure and run the book-scaling experiments, emit CSV/JSON
// artifacts plus a manifest. Precedence: flag > environment > config file.
#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "lobscale/experiments.hpp"
#include "lobscale/report.hpp"

using namespace lob;

namespace {

void emit_first_order(const RunConfig& cfg, const FirstOrderResult& r) {
  std::string hash = cfg.hash_hex();
  nlohmann::json j = r.to_json();
  j["config_hash"] = hash;
  write_json(cfg.out_dir + "/report.json", j);
  std::vector<std::vector<double>> rows;
  for (const auto& l : r.levels)
    rows.push_back({l.dt, static_cast<double>(l.paths), l.med_sup_B, l.med_sup_Y,
                    l.deriv_check_sup});
  write_csv(cfg.out_dir + "/supdev.csv", hash,
            {"dt", "paths", "median_sup_B", "median_sup_Y", "deriv_check_sup"}, rows);
  rows.clear();
  for (size_t i = 0; i < r.limit_t.size(); ++i)
    rows.push_back({r.limit_t[i], r.limit_B[i], r.limit_Y[i]});
  write_csv(cfg.out_dir + "/limit_path.csv", hash, {"t", "B", "Y"}, rows);
}

void emit_fast(const RunConfig& cfg, const FastCltResult& r) {
  std::string hash = cfg.hash_hex();
  nlohmann::json j = r.to_json();
  j["config_hash"] = hash;
  write_json(cfg.out_dir + "/report.json", j);
  std::vector<std::vector<double>> rows;
  for (const auto& v : r.variances)
    rows.push_back({v.var_discrete, v.var_limit, v.rel_err});
  write_csv(cfg.out_dir + "/variances.csv", hash, {"var_discrete", "var_limit", "rel_err"}, rows);
}

void emit_slow(const RunConfig& cfg, const SlowCltResult& r) {
  std::string hash = cfg.hash_hex();
  nlohmann::json j = r.to_json();
  j["config_hash"] = hash;
  write_json(cfg.out_dir + "/report.json", j);
  std::vector<std::vector<double>> rows;
  for (const auto& l : r.iw_levels) rows.push_back({l.dt_sde, l.tick, l.med_gap, l.c_constant});
  write_csv(cfg.out_dir + "/iw_equivalence.csv", hash, {"dt_sde", "tick", "med_gap", "C"}, rows);
}

void emit_liq(const RunConfig& cfg, const LiquidationResult& r) {
  std::string hash = cfg.hash_hex();
  nlohmann::json j = r.to_json();
  j["config_hash"] = hash;
  write_json(cfg.out_dir + "/interval.json", j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lobscale — multiscale limit order book scaling experiments"};

  std::string config_file, experiment, out_dir, schedule;
  double dt = 0, alpha = 0, beta = 0;
  long paths = -1, stride = -1, seed = -1;
  int parallelism = -1;
  bool assert_mode = false;

  app.add_option("--config", config_file, "INI config file");
  app.add_option("--experiment", experiment, "first-order | fast-clt | slow-clt | liquidation");
  app.add_option("--dt", dt, "event time step dt");
  app.add_option("--alpha", alpha, "tick exponent alpha");
  app.add_option("--beta", beta, "price-intensity exponent beta");
  app.add_option("--paths", paths, "discrete Monte Carlo paths");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--out", out_dir, "output directory");
  app.add_flag("--assert", assert_mode, "exit nonzero when an acceptance threshold fails");
  app.add_option("--stride", stride, "u-snapshot stride (events)");
  app.add_option("--parallelism", parallelism, "worker threads (default: logical cores)");
  app.add_option("--schedule", schedule, "liquidation schedule CSV (t,shares)");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg;
    if (!config_file.empty()) cfg = parse_config_file(config_file);
    apply_env_overrides(cfg);
    if (!experiment.empty()) apply_override(cfg, "experiment.name", experiment);
    if (app.count("--dt")) cfg.dt = dt;
    if (app.count("--alpha")) cfg.alpha = alpha;
    if (app.count("--beta")) cfg.beta = beta;
    if (paths >= 0) cfg.paths = paths;
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (assert_mode) cfg.assert_mode = true;
    if (stride >= 0) cfg.stride = stride;
    if (parallelism >= 0) cfg.parallelism = parallelism;
    if (!schedule.empty()) cfg.schedule_file = schedule;
    cfg.validate();
    ensure_dir(cfg.out_dir);

    int failures = 0;
    if (cfg.experiment == "first-order") {
      FirstOrderResult r = run_first_order(cfg);
      emit_first_order(cfg, r);
      for (const auto& l : r.levels)
        std::printf("dt=%-10g median sup|B^n-B|=%-12g median sup|Y^n-Y|=%g\n", l.dt, l.med_sup_B,
                    l.med_sup_Y);
      if (cfg.dt_levels.size() >= 2 && !(r.monotone_B && r.monotone_Y)) ++failures;
    } else if (cfg.experiment == "fast-clt") {
      FastCltResult r = run_fast_clt(cfg);
      emit_fast(cfg, r);
      std::printf("preflight lattice: spacing=%g crit=%g -> %s\n", r.lattice_spacing, r.ks_crit,
                  r.preflight_ok ? "ok" : "FAIL");
      std::printf("KS Z^B(T): D=%g (1%% crit %g) p=%g\n", r.ks_zb_T.statistic, r.ks_crit,
                  r.ks_zb_T.p_value);
      for (const auto& v : r.variances)
        std::printf("Var<Z^u(T),%s>: discrete=%g limit=%g rel_err=%g\n", v.phi.c_str(),
                    v.var_discrete, v.var_limit, v.rel_err);
      if (!r.preflight_ok || r.ks_zb_T.statistic >= r.ks_crit) ++failures;
      for (const auto& v : r.variances)
        if (v.rel_err >= 0.10) ++failures;
      if (!r.ou_ok) ++failures;
      if (r.kernel_psd_delta >= 1e-10 || r.kernel_clamped > 0) ++failures;
    } else if (cfg.experiment == "slow-clt") {
      SlowCltResult r = run_slow_clt(cfg);
      emit_slow(cfg, r);
      std::printf("KS Z^B(T): D=%g  KS Z^Y(T): D=%g  (5%% crit %g)\n", r.ks_zb_T.statistic,
                  r.ks_zy_T.statistic, r.ks_crit);
      for (const auto& l : r.iw_levels)
        std::printf("IW gap (dt_sde=%g tick=%g): %g  C=%g\n", l.dt_sde, l.tick, l.med_gap,
                    l.c_constant);
      if (r.ks_zb_T.statistic >= r.ks_crit || r.ks_zy_T.statistic >= r.ks_crit) ++failures;
      if (!r.iw_ok) ++failures;
    } else if (cfg.experiment == "liquidation") {
      LiquidationResult r = run_liquidation(cfg);
      emit_liq(cfg, r);
      std::printf("V=%g  %g%% CI=[%g, %g]  coverage=%g (%ld/%ld)\n", r.ci.V, 100 * r.ci.level,
                  r.ci.lo, r.ci.hi, r.coverage, r.covered, r.total);
      if (cfg.impact == "non-permanent" && !(r.coverage >= 0.85 && r.coverage <= 0.95)) ++failures;
      if (cfg.impact == "permanent" && !(r.coverage >= 0.80 && r.coverage <= 0.98)) ++failures;
    }
    write_manifest(cfg.out_dir, cfg);
    if (cfg.assert_mode && failures > 0) {
      std::fprintf(stderr, "%d acceptance threshold(s) failed\n", failures);
      return 1;
    }
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
