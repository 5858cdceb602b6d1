#include "lobscale/experiments.hpp"

#include <algorithm>
#include <cmath>

#include "lobscale/parallel.hpp"
#include "lobscale/simulator.hpp"

namespace lob {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<double> marks_for(double T) { return {0.25 * T, 0.5 * T, T}; }

// Fine-level Brownian increments shared across refinement levels.
struct PregenFastNoise final : FastNoise {
  double dt_fine;
  long steps;
  int cells;
  std::vector<double> wb;     // [step]
  std::vector<double> wc;     // [step * cells + c]
  PregenFastNoise(double dtf, long st, int n, Rng& rng) : dt_fine(dtf), steps(st), cells(n) {
    wb.resize(static_cast<size_t>(steps));
    wc.resize(static_cast<size_t>(steps) * static_cast<size_t>(cells));
    double s = std::sqrt(dtf);
    for (long k = 0; k < steps; ++k) {
      wb[static_cast<size_t>(k)] = s * rng.normal();
      for (int c = 0; c < cells; ++c)
        wc[static_cast<size_t>(k) * cells + static_cast<size_t>(c)] = s * rng.normal();
    }
  }
  void draw(double t, double dt, double& dWB, std::span<double> dW_cells) override {
    long k0 = std::lround(t / dt_fine);
    long m = std::max<long>(1, std::lround(dt / dt_fine));
    dWB = 0.0;
    std::fill(dW_cells.begin(), dW_cells.end(), 0.0);
    for (long k = k0; k < std::min(k0 + m, steps); ++k) {
      dWB += wb[static_cast<size_t>(k)];
      const double* row = &wc[static_cast<size_t>(k) * cells];
      for (int c = 0; c < cells; ++c) dW_cells[static_cast<size_t>(c)] += row[c];
    }
  }
};

}  // namespace

std::uint64_t seed_stream(std::uint64_t master, std::uint64_t tag) {
  std::uint64_t z = master + tag * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// first-order (LLN sweep)
// ---------------------------------------------------------------------------

FirstOrderResult run_first_order(const RunConfig& cfg) {
  cfg.validate();
  ModelSpec spec = cfg.model_spec();
  std::vector<double> levels = cfg.dt_levels.empty() ? std::vector<double>{cfg.dt} : cfg.dt_levels;

  FirstOrderResult out;
  for (double dt : levels) {
    ScalingRegime reg = ScalingRegime::make(dt, cfg.alpha, cfg.beta, cfg.horizon,
                                            regime_from_string(cfg.regime));
    Grid grid = default_grid(spec, reg, cfg.L_override, 0.0);
    FomOptions fo;
    fo.solver_dt = std::min(cfg.solver_dt, 0.25 * reg.horizon);
    LimitPath limit = solve_first_order(spec, reg, grid, fo);
    SimSetup setup = SimSetup::make(spec, reg, grid);

    FirstOrderLevel lv;
    lv.dt = dt;
    lv.paths = cfg.paths;
    std::vector<double> supB(static_cast<size_t>(cfg.paths), 0.0);
    std::vector<double> supY(static_cast<size_t>(cfg.paths), 0.0);
    std::vector<char> bad(static_cast<size_t>(cfg.paths), 0);
    std::vector<double> lost(static_cast<size_t>(cfg.paths), 0.0);

    SimOptions so;
    so.snapshot_stride = cfg.stride;
    parallel_for(cfg.paths, cfg.parallelism, [&](long p) {
      SimPath sp = simulate_path(setup, cfg.seed ^ static_cast<std::uint64_t>(p), so);
      if (sp.aborted) {
        bad[static_cast<size_t>(p)] = 1;
        return;
      }
      double sB = 0, sY = 0;
      for (size_t k = 0; k < sp.B.size(); ++k) {
        double tk = static_cast<double>(k) * reg.dt;
        sB = std::max(sB, std::abs(sp.B[k] - limit.B_at(tk)));
        sY = std::max(sY, std::abs(sp.Y[k] - limit.Y_at(tk)));
      }
      supB[static_cast<size_t>(p)] = sB;
      supY[static_cast<size_t>(p)] = sY;
      lost[static_cast<size_t>(p)] =
          sp.final_state.lost_mass / std::max(1e-300, sp.initial_mass);
    });

    std::vector<double> okB, okY;
    for (long p = 0; p < cfg.paths; ++p) {
      if (bad[static_cast<size_t>(p)]) {
        ++lv.aborted;
        continue;
      }
      okB.push_back(supB[static_cast<size_t>(p)]);
      okY.push_back(supY[static_cast<size_t>(p)]);
      lv.max_lost_mass_rel = std::max(lv.max_lost_mass_rel, lost[static_cast<size_t>(p)]);
    }
    lv.med_sup_B = median(okB);
    lv.med_sup_Y = median(okY);

    // Lemma-3.2-style discrete-derivative gap, one representative path
    {
      SimPath sp = simulate_path(setup, cfg.seed ^ 0x5eedULL, so);
      if (!sp.aborted) {
        GridFunction h = setup.h;
        TestFunctions tf = default_test_functions(grid, h);
        lv.deriv_check_sup = discrete_derivative_check(sp, limit, reg, tf.fns[2]).sup_diff;
      }
    }
    out.levels.push_back(lv);

    if (dt == levels.back()) {
      out.limit_t = limit.t;
      out.limit_B = limit.B;
      out.limit_Y = limit.Y;
    }
  }
  out.monotone_B = out.monotone_Y = out.deriv_monotone = out.levels.size() >= 2;
  for (size_t i = 1; i < out.levels.size(); ++i) {
    if (!(out.levels[i].med_sup_B < out.levels[i - 1].med_sup_B)) out.monotone_B = false;
    if (!(out.levels[i].med_sup_Y < out.levels[i - 1].med_sup_Y)) out.monotone_Y = false;
    if (!(out.levels[i].deriv_check_sup < out.levels[i - 1].deriv_check_sup))
      out.deriv_monotone = false;
  }
  return out;
}

nlohmann::json FirstOrderResult::to_json() const {
  nlohmann::json lv = nlohmann::json::array();
  for (const auto& l : levels)
    lv.push_back({{"dt", l.dt},
                  {"paths", l.paths},
                  {"aborted", l.aborted},
                  {"median_sup_B", l.med_sup_B},
                  {"median_sup_Y", l.med_sup_Y},
                  {"max_lost_mass_rel", l.max_lost_mass_rel},
                  {"deriv_check_sup", l.deriv_check_sup}});
  return {{"levels", lv},
          {"monotone_B", monotone_B},
          {"monotone_Y", monotone_Y},
          {"deriv_monotone", deriv_monotone}};
}

// ---------------------------------------------------------------------------
// fast-clt
// ---------------------------------------------------------------------------

FastCltResult run_fast_clt(const RunConfig& cfg) {
  cfg.validate();
  ModelSpec spec = cfg.model_spec();
  ScalingRegime reg = cfg.scaling();
  Grid grid = default_grid(spec, reg, cfg.L_override, 0.0);
  FomOptions fo;
  fo.solver_dt = cfg.solver_dt;
  LimitPath limit = solve_first_order(spec, reg, grid, fo);
  SimSetup setup = SimSetup::make(spec, reg, grid);
  TestFunctions tf = default_test_functions(grid, setup.h);
  std::vector<double> marks = marks_for(reg.horizon);

  FastCltResult out;
  out.marks = marks;
  out.preflight_ok =
      preflight_lattice_ok(reg, 0.01, cfg.paths, cfg.mc_paths, &out.lattice_spacing, &out.ks_crit);

  // discrete side
  const size_t M = marks.size(), P = tf.fns.size();
  std::vector<MarginalSamples> disc(M);
  {
    std::vector<FluctuationSample> flucs(static_cast<size_t>(cfg.paths));
    std::vector<char> bad(static_cast<size_t>(cfg.paths), 0);
    SimOptions so;
    so.snapshot_times = marks;
    so.snapshot_stride = std::max<long>(1, reg.n_events());
    parallel_for(cfg.paths, cfg.parallelism, [&](long p) {
      SimPath sp = simulate_path(setup, cfg.seed ^ static_cast<std::uint64_t>(p), so);
      if (sp.aborted) {
        bad[static_cast<size_t>(p)] = 1;
        return;
      }
      flucs[static_cast<size_t>(p)] = extract_fluctuations(sp, limit, reg, setup.h, marks, tf.fns);
    });
    for (size_t m = 0; m < M; ++m) disc[m].pairings.resize(P);
    for (long p = 0; p < cfg.paths; ++p) {
      if (bad[static_cast<size_t>(p)]) {
        ++out.discrete_aborted;
        continue;
      }
      const auto& f = flucs[static_cast<size_t>(p)];
      for (size_t m = 0; m < M; ++m) {
        disc[m].ZB.push_back(f.ZB[m]);
        disc[m].ZY.push_back(f.ZY[m]);
        for (size_t q = 0; q < P; ++q) disc[m].pairings[q].push_back(f.pairings[m][q]);
      }
    }
  }

  // limit side (full grid SDE)
  FastSetup fsetup = FastSetup::make(spec, limit, cfg.dt_sde);
  out.kernel_rebuilds = static_cast<long>(fsetup.schedule.kernels.size());
  for (const auto& k : fsetup.schedule.kernels) {
    out.kernel_psd_delta = std::max(out.kernel_psd_delta, k.psd_projection_delta());
    out.kernel_clamped += k.clamped_cells();
  }
  std::vector<MarginalSamples> lim(M);
  {
    std::vector<std::vector<double>> zb(M), zy(M);
    std::vector<std::vector<std::vector<double>>> pr(M);
    for (size_t m = 0; m < M; ++m) {
      zb[m].resize(static_cast<size_t>(cfg.mc_paths));
      zy[m].resize(static_cast<size_t>(cfg.mc_paths));
      pr[m].assign(P, std::vector<double>(static_cast<size_t>(cfg.mc_paths)));
    }
    run_fast_paths(fsetup, cfg.mc_paths, seed_stream(cfg.seed, 0xFA57), marks, cfg.parallelism,
                   [&](long p, size_t m, const FastIntegrator& it) {
                     zb[m][static_cast<size_t>(p)] = it.ZB();
                     zy[m][static_cast<size_t>(p)] = it.ZY();
                     for (size_t q = 0; q < P; ++q)
                       pr[m][q][static_cast<size_t>(p)] = it.pair(tf.fns[q]);
                   });
    for (size_t m = 0; m < M; ++m) {
      lim[m].ZB = std::move(zb[m]);
      lim[m].ZY = std::move(zy[m]);
      lim[m].pairings = std::move(pr[m]);
    }
  }

  for (size_t m = 0; m < M; ++m) out.ks_zb_marks.push_back(ks_two_sample(disc[m].ZB, lim[m].ZB));
  out.ks_zb_T = out.ks_zb_marks.back();

  auto variance = [](const std::vector<double>& v) {
    double mu = 0;
    for (double x : v) mu += x;
    mu /= static_cast<double>(v.size());
    double q = 0;
    for (double x : v) q += (x - mu) * (x - mu);
    return q / std::max(1.0, static_cast<double>(v.size()) - 1.0);
  };
  for (size_t q = 0; q < 3 && q < P; ++q) {
    VarianceCheck vc;
    vc.phi = tf.names[q];
    vc.var_discrete = variance(disc.back().pairings[q]);
    vc.var_limit = variance(lim.back().pairings[q]);
    vc.rel_err = vc.var_limit != 0 ? std::abs(vc.var_discrete - vc.var_limit) / vc.var_limit
                                   : std::abs(vc.var_discrete);
    out.variances.push_back(vc);
  }

  // scalar OU consistency under shared refined noise
  {
    const int ou_paths = 8;
    const double dt_fine = cfg.dt_sde;
    const long steps_fine = std::lround(reg.horizon / dt_fine);
    std::vector<std::vector<double>> gaps(3, std::vector<double>(ou_paths, 0.0));
    parallel_for(ou_paths, cfg.parallelism, [&](long p) {
      Rng rng(seed_stream(cfg.seed, 0xB00) ^ static_cast<std::uint64_t>(p));
      PregenFastNoise noise(dt_fine, steps_fine, grid.size(), rng);
      for (int lvl = 0; lvl < 3; ++lvl) {
        FastSetup fs = fsetup;
        fs.dt_sde = dt_fine * static_cast<double>(1 << (2 - lvl));
        FastIntegrator it(fs);
        it.record_noise = true;
        it.advance_to(reg.horizon, noise);
        std::vector<double> ou = zy_ou_reference(it.records());
        double gap = 0;
        for (size_t k2 = 0; k2 < ou.size(); ++k2)
          gap = std::max(gap, std::abs(ou[k2] - it.records()[k2].zy_after));
        gaps[static_cast<size_t>(lvl)][static_cast<size_t>(p)] = gap;
      }
    });
    for (int lvl = 0; lvl < 3; ++lvl) {
      OuLevel ol;
      ol.dt_sde = dt_fine * static_cast<double>(1 << (2 - lvl));
      ol.med_gap = median(gaps[static_cast<size_t>(lvl)]);
      out.ou_levels.push_back(ol);
    }
    out.ou_ok = true;
    for (size_t l = 1; l < out.ou_levels.size(); ++l) {
      double r = out.ou_levels[l - 1].med_gap / std::max(1e-300, out.ou_levels[l].med_gap);
      out.ou_ratios.push_back(r);
      if (!(r > 1.4 && r < 2.6)) out.ou_ok = false;
    }
  }
  return out;
}

nlohmann::json FastCltResult::to_json() const {
  nlohmann::json vars = nlohmann::json::array();
  for (const auto& v : variances)
    vars.push_back({{"phi", v.phi},
                    {"var_discrete", v.var_discrete},
                    {"var_limit", v.var_limit},
                    {"rel_err", v.rel_err}});
  nlohmann::json ou = nlohmann::json::array();
  for (const auto& l : ou_levels) ou.push_back({{"dt_sde", l.dt_sde}, {"med_gap", l.med_gap}});
  return {{"lattice_spacing_z", lattice_spacing},
          {"ks_critical_1pct", ks_crit},
          {"preflight_ok", preflight_ok},
          {"ks_zb_T", {{"statistic", ks_zb_T.statistic}, {"p_value", ks_zb_T.p_value}}},
          {"variances", vars},
          {"kernel", {{"psd_projection_delta", kernel_psd_delta},
                      {"clamped_cells", kernel_clamped},
                      {"rebuilds", kernel_rebuilds}}},
          {"ou_levels", ou},
          {"ou_ratios", ou_ratios},
          {"ou_ok", ou_ok},
          {"discrete_aborted", discrete_aborted}};
}

// ---------------------------------------------------------------------------
// slow-clt
// ---------------------------------------------------------------------------

SlowCltResult run_slow_clt(const RunConfig& cfg) {
  cfg.validate();
  ModelSpec spec = cfg.model_spec();
  ScalingRegime reg = cfg.scaling();
  Grid grid = default_grid(spec, reg, cfg.L_override, 0.0);
  FomOptions fo;
  fo.solver_dt = cfg.solver_dt;
  LimitPath limit = solve_first_order(spec, reg, grid, fo);
  SimSetup setup = SimSetup::make(spec, reg, grid);
  std::vector<double> marks = marks_for(reg.horizon);

  SlowCltResult out;
  out.marks = marks;
  out.preflight_ok =
      preflight_lattice_ok(reg, 0.05, cfg.paths, cfg.mc_paths, &out.lattice_spacing, &out.ks_crit);
  out.ks_crit = ks_critical_value(0.05, cfg.paths, cfg.mc_paths);

  // discrete side (ZB, ZY only)
  std::vector<double> dzb(static_cast<size_t>(cfg.paths)), dzy(static_cast<size_t>(cfg.paths));
  std::vector<char> bad(static_cast<size_t>(cfg.paths), 0);
  {
    SimOptions so;
    so.snapshot_stride = std::max<long>(1, reg.n_events());
    parallel_for(cfg.paths, cfg.parallelism, [&](long p) {
      SimPath sp = simulate_path(setup, cfg.seed ^ static_cast<std::uint64_t>(p), so);
      if (sp.aborted) {
        bad[static_cast<size_t>(p)] = 1;
        return;
      }
      FluctuationSample f = extract_fluctuations(sp, limit, reg, setup.h,
                                                 std::span<const double>(&marks.back(), 1), {});
      dzb[static_cast<size_t>(p)] = f.ZB[0];
      dzy[static_cast<size_t>(p)] = f.ZY[0];
    });
  }

  // limit side
  SlowSetup ssetup = SlowSetup::make(spec, limit, cfg.dt_sde);
  std::vector<double> lzb(static_cast<size_t>(cfg.mc_paths)), lzy(static_cast<size_t>(cfg.mc_paths)),
      lgap(static_cast<size_t>(cfg.mc_paths));
  run_slow_paths(ssetup, cfg.mc_paths, seed_stream(cfg.seed, 0x510), {&marks.back(), 1},
                 cfg.parallelism, [&](long p, size_t, const SlowIntegrator& it) {
                   lzb[static_cast<size_t>(p)] = it.ZB();
                   lzy[static_cast<size_t>(p)] = it.ZY();
                   lgap[static_cast<size_t>(p)] = std::abs(it.ZY() - it.ZY_weak());
                 });
  out.zy_consistency_gap = median(lgap);

  std::vector<double> dzb_ok, dzy_ok;
  for (long p = 0; p < cfg.paths; ++p) {
    if (bad[static_cast<size_t>(p)]) {
      ++out.discrete_aborted;
      continue;
    }
    dzb_ok.push_back(dzb[static_cast<size_t>(p)]);
    dzy_ok.push_back(dzy[static_cast<size_t>(p)]);
  }
  out.ks_zb_T = ks_two_sample(dzb_ok, lzb);
  out.ks_zy_T = ks_two_sample(dzy_ok, lzy);

  // Ito-Wentzell equivalence: weak pairing vs Volterra on identical paths,
  // two refinement levels with dt_sde and tick halved together
  {
    const long iw_paths = 50;
    for (int lvl = 0; lvl < 2; ++lvl) {
      double tick = 0.1 / (1 << lvl);
      double dts = 4e-3 / (1 << lvl);
      Grid igrid = default_grid(spec, reg, cfg.L_override, tick);
      LimitPath ilimit = solve_first_order(spec, reg, igrid, fo);
      SlowSetup is = SlowSetup::make(spec, ilimit, dts);
      GridFunction bump = default_test_functions(igrid, is.h).fns[2];
      std::vector<double> gaps(static_cast<size_t>(iw_paths), 0.0);
      run_slow_paths(is, iw_paths, seed_stream(cfg.seed, 0x1007), marks, cfg.parallelism,
                     [&](long p, size_t, const SlowIntegrator& it) {
                       double g1 = std::abs(it.pair(is.h) - it.volterra_pair(is.h));
                       double g2 = std::abs(it.pair(bump) - it.volterra_pair(bump));
                       double& slot = gaps[static_cast<size_t>(p)];
                       slot = std::max({slot, g1, g2});
                     });
      IwLevel il;
      il.dt_sde = dts;
      il.tick = tick;
      il.med_gap = median(gaps);
      il.c_constant = il.med_gap / (dts + tick);
      out.iw_levels.push_back(il);
    }
    double c0 = out.iw_levels[0].c_constant, c1 = out.iw_levels[1].c_constant;
    double ratio = c1 / std::max(1e-300, c0);
    out.iw_ok = out.iw_levels[1].med_gap < out.iw_levels[0].med_gap && ratio > 0.5 && ratio < 2.0;
  }
  return out;
}

nlohmann::json SlowCltResult::to_json() const {
  nlohmann::json iw = nlohmann::json::array();
  for (const auto& l : iw_levels)
    iw.push_back({{"dt_sde", l.dt_sde}, {"tick", l.tick}, {"med_gap", l.med_gap},
                  {"C", l.c_constant}});
  return {{"ks_zb_T", {{"statistic", ks_zb_T.statistic}, {"p_value", ks_zb_T.p_value}}},
          {"ks_zy_T", {{"statistic", ks_zy_T.statistic}, {"p_value", ks_zy_T.p_value}}},
          {"ks_critical_5pct", ks_crit},
          {"lattice_spacing_z", lattice_spacing},
          {"preflight_ok", preflight_ok},
          {"iw_levels", iw},
          {"iw_ok", iw_ok},
          {"zy_consistency_gap", zy_consistency_gap},
          {"discrete_aborted", discrete_aborted}};
}

// ---------------------------------------------------------------------------
// liquidation
// ---------------------------------------------------------------------------

LiquidationSchedule schedule_from_config(const RunConfig& cfg, const ModelSpec& spec) {
  if (!cfg.schedule_file.empty()) {
    LiquidationSchedule s = LiquidationSchedule::from_csv(cfg.schedule_file);
    s.validate(cfg.horizon);
    return s;
  }
  double X = cfg.liq_total;
  if (X <= 0) {
    // default: 10% of the initial bid-side mass
    Grid g = Grid::centered(0.01, spec.M + 1.0);
    GridFunction u0 = spec.u0_on(g);
    double mass = 0;
    for (int j = 0; j >= g.lo; --j) mass += g.tick * u0[j];
    X = 0.1 * mass;
  }
  LiquidationSchedule s = LiquidationSchedule::uniform(X, cfg.liq_slices, 0.0, 0.9 * cfg.horizon);
  s.validate(cfg.horizon);
  return s;
}

namespace {

// Realized liquidation income on one discrete path without state impact
// (non-permanent case): walk the realized book at each trade time.
double realized_value_nonpermanent(const SimPath& sp, const ScalingRegime& reg,
                                   const LiquidationSchedule& sched) {
  double v = 0;
  for (size_t i = 0; i < sched.times.size(); ++i) {
    long k = std::clamp<long>(static_cast<long>(std::floor(sched.times[i] / reg.dt + 1e-9)), 0,
                              static_cast<long>(sp.B.size()) - 1);
    const GridFunction& u = sp.time_u[i];
    double d = depth_for_shares(u, sched.shares[i]);
    v += sp.B[static_cast<size_t>(k)] * sched.shares[i] + book_value_integral(u, d);
  }
  return v;
}

// Discrete path with permanent impact: the trade removes the depth and shifts
// the book by the nearest tick count (A-event mechanics); income uses the
// exact off-lattice depth.
double realized_value_permanent(const SimSetup& setup, std::uint64_t seed,
                                const LiquidationSchedule& sched, bool& aborted) {
  const ScalingRegime& reg = setup.regime;
  const long T_n = reg.n_events();
  Rng rng(seed);
  BookState s;
  s.B = setup.spec.B0;
  s.u = setup.u0;
  s.Y = inner_product(setup.h, s.u);
  double v = 0;
  size_t trade = 0;
  double abort_mass = 1e-9 * std::max(s.u.total_mass(), 1e-300);
  aborted = false;
  for (long k = 0; k <= T_n; ++k) {
    while (trade < sched.times.size() &&
           static_cast<long>(std::floor(sched.times[trade] / reg.dt + 1e-9)) == k) {
      double d = depth_for_shares(s.u, sched.shares[trade]);
      v += s.B * sched.shares[trade] + book_value_integral(s.u, d);
      long m = std::lround(d / reg.dx());
      for (long q = 0; q < m; ++q) {
        s.B -= reg.dx();
        s.lost_mass += s.u.shift_in_place(ShiftDir::Minus);
      }
      s.Y = inner_product(setup.h, s.u);
      ++trade;
    }
    if (k == T_n) break;
    EventDraw ev = sample_event(s, setup.spec, reg, rng);
    apply_event(s, ev, setup.h, reg);
    if (s.lost_mass > abort_mass) {
      aborted = true;
      break;
    }
  }
  return v;
}

}  // namespace

LiquidationResult run_liquidation(const RunConfig& cfg) {
  cfg.validate();
  ModelSpec spec = cfg.model_spec();
  ScalingRegime reg = cfg.scaling();
  Grid grid = default_grid(spec, reg, cfg.L_override, 0.0);
  LiquidationSchedule sched = schedule_from_config(cfg, spec);
  FomOptions fo;
  fo.solver_dt = cfg.solver_dt;

  LiquidationResult out;
  out.impact = cfg.impact;
  SimSetup setup = SimSetup::make(spec, reg, grid);

  if (cfg.impact == "non-permanent") {
    LimitPath limit = solve_first_order(spec, reg, grid, fo);
    FastSetup fsetup = FastSetup::make(spec, limit, cfg.dt_sde);
    out.ci = ci_nonpermanent(sched, limit, fsetup, reg, cfg.mc_paths,
                             seed_stream(cfg.seed, 0xC1), cfg.ci_level, cfg.parallelism);
    out.depths = value_nonpermanent(sched, limit).depths;

    std::vector<double> realized(static_cast<size_t>(cfg.paths));
    std::vector<char> bad(static_cast<size_t>(cfg.paths), 0);
    SimOptions so;
    so.snapshot_times = sched.times;
    so.snapshot_stride = std::max<long>(1, reg.n_events());
    so.record_series = true;
    parallel_for(cfg.paths, cfg.parallelism, [&](long p) {
      SimPath sp = simulate_path(setup, cfg.seed ^ static_cast<std::uint64_t>(p), so);
      if (sp.aborted) {
        bad[static_cast<size_t>(p)] = 1;
        return;
      }
      realized[static_cast<size_t>(p)] = realized_value_nonpermanent(sp, reg, sched);
    });
    for (long p = 0; p < cfg.paths; ++p) {
      if (bad[static_cast<size_t>(p)]) continue;
      ++out.total;
      double v = realized[static_cast<size_t>(p)];
      if (v >= out.ci.lo && v <= out.ci.hi) ++out.covered;
    }
  } else {
    LimitPath impacted = impacted_first_order(sched, spec, reg, grid, fo);
    SlowSetup ssetup = SlowSetup::make(spec, impacted, cfg.dt_sde);
    ssetup.use_weak_zy = true;
    out.ci = ci_permanent(sched, impacted, ssetup, reg, cfg.mc_paths,
                          seed_stream(cfg.seed, 0xC2), cfg.ci_level, cfg.parallelism);
    out.depths = impacted.jump_sizes;

    std::vector<double> realized(static_cast<size_t>(cfg.paths));
    std::vector<char> bad(static_cast<size_t>(cfg.paths), 0);
    parallel_for(cfg.paths, cfg.parallelism, [&](long p) {
      bool aborted = false;
      realized[static_cast<size_t>(p)] = realized_value_permanent(
          setup, cfg.seed ^ static_cast<std::uint64_t>(p), sched, aborted);
      if (aborted) bad[static_cast<size_t>(p)] = 1;
    });
    for (long p = 0; p < cfg.paths; ++p) {
      if (bad[static_cast<size_t>(p)]) continue;
      ++out.total;
      double v = realized[static_cast<size_t>(p)];
      if (v >= out.ci.lo && v <= out.ci.hi) ++out.covered;
    }
  }
  out.coverage = out.total > 0 ? static_cast<double>(out.covered) / static_cast<double>(out.total)
                               : 0.0;
  out.width = out.ci.hi - out.ci.lo;
  return out;
}

nlohmann::json LiquidationResult::to_json() const {
  return {{"impact", impact},
          {"V", ci.V},
          {"lo", ci.lo},
          {"hi", ci.hi},
          {"level", ci.level},
          {"M", ci.paths},
          {"regime", ci.regime},
          {"width", width},
          {"coverage", coverage},
          {"covered", covered},
          {"total", total}};
}

}  // namespace lob
