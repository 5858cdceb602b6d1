#include <doctest.h>

#include <cmath>
#include <vector>

#include "lobscale/clt.hpp"

using namespace lob;

namespace {
ModelParams params(std::initializer_list<std::pair<const std::string, double>> kv) {
  ModelParams p;
  p.kv = kv;
  return p;
}
}  // namespace

TEST_CASE("KS statistic: identical samples, symmetry, critical values") {
  Rng rng(1);
  std::vector<double> a;
  for (int i = 0; i < 500; ++i) a.push_back(rng.normal());
  KsResult same = ks_two_sample(a, a);
  CHECK(same.statistic == 0.0);

  std::vector<double> b;
  for (int i = 0; i < 700; ++i) b.push_back(0.3 + rng.normal());
  KsResult ab = ks_two_sample(a, b);
  KsResult ba = ks_two_sample(b, a);
  CHECK(ab.statistic == ba.statistic);
  CHECK(ab.p_value == ba.p_value);
  CHECK(ab.statistic > 0.0);

  // two-sample critical value formula: c(level) * sqrt((n+m)/(nm))
  double crit1 = ks_critical_value(0.01, 2000, 2000);
  CHECK(crit1 == doctest::Approx(std::sqrt(-0.5 * std::log(0.005)) * std::sqrt(0.001)).epsilon(1e-12));
  CHECK(ks_critical_value(0.05, 1000, 1000) ==
        doctest::Approx(std::sqrt(-0.5 * std::log(0.025)) * std::sqrt(0.002)).epsilon(1e-12));
}

TEST_CASE("KS p-values are roughly calibrated under the null") {
  Rng rng(42);
  int reps = 200, low = 0;
  double psum = 0;
  for (int r = 0; r < reps; ++r) {
    std::vector<double> a, b;
    for (int i = 0; i < 400; ++i) a.push_back(rng.normal());
    for (int i = 0; i < 400; ++i) b.push_back(rng.normal());
    KsResult k = ks_two_sample(a, b);
    psum += k.p_value;
    if (k.p_value < 0.05) ++low;
  }
  CHECK(psum / reps > 0.35);
  CHECK(psum / reps < 0.65);
  CHECK(low <= 24);  // ~5% expected, generous band
}

TEST_CASE("type-7 quantiles") {
  std::vector<double> v{1.0, 2.0, 3.0, 4.0, 5.0};
  CHECK(quantile_type7(v, 0.0) == 1.0);
  CHECK(quantile_type7(v, 1.0) == 5.0);
  CHECK(quantile_type7(v, 0.5) == 3.0);
  CHECK(quantile_type7(v, 0.25) == 2.0);
  CHECK(quantile_type7(v, 0.1) == doctest::Approx(1.4).epsilon(1e-14));
}

TEST_CASE("zero-noise extraction vanishes identically") {
  ModelSpec spec = make_builtin_model(
      "constant-test", params({{"pa", 0.0}, {"pb", 0.0}, {"omega", 0.0}}));
  ScalingRegime reg = ScalingRegime::make(1e-3, 0.4, 0.6, 1.0, Regime::Slow);
  Grid g = default_grid(spec, reg);
  SimSetup setup = SimSetup::make(spec, reg, g);
  std::vector<double> marks{0.25, 0.5, 1.0};
  SimOptions so;
  so.snapshot_times = marks;
  SimPath sp = simulate_path(setup, 3, so);
  LimitPath lp = solve_first_order(spec, reg, g, {1e-2, 1});
  TestFunctions tf = default_test_functions(g, setup.h);
  FluctuationSample f = extract_fluctuations(sp, lp, reg, setup.h, marks, tf.fns);
  for (size_t m = 0; m < marks.size(); ++m) {
    CHECK(f.ZB[m] == 0.0);
    CHECK(std::abs(f.ZY[m]) < 1e-13);
    for (double v : f.pairings[m]) CHECK(std::abs(v) < 1e-13);
  }
}

TEST_CASE("one tick of price deviation maps to dt^(alpha - 1/2) in Z units") {
  ScalingRegime reg = ScalingRegime::make(1e-4, 0.6, 0.8, 1.0, Regime::Fast);
  Grid g(reg.dx(), -4, 4);
  SimPath sp;
  sp.B = {1.0 + reg.dx()};
  sp.Y = {0.0};
  LimitPath lp;
  lp.grid = g;
  lp.B0 = 1.0;
  lp.t = {0.0, 1.0};
  lp.B = {1.0, 1.0};
  lp.Y = {0.0, 0.0};
  lp.u.assign(2, std::vector<double>(static_cast<size_t>(g.size()), 0.0));
  lp.ux.assign(2, std::vector<double>(static_cast<size_t>(g.size()), 0.0));
  std::vector<double> marks{0.0};
  GridFunction h(g);
  FluctuationSample f = extract_fluctuations(sp, lp, reg, h, marks, {});
  CHECK(f.ZB[0] == doctest::Approx(std::pow(reg.dt, reg.alpha - 0.5)).epsilon(1e-12));
}

TEST_CASE("preflight lattice check reports the fast-example violation") {
  ScalingRegime fast = ScalingRegime::make(1e-4, 0.6, 0.8, 1.0, Regime::Fast);
  double spacing = 0, crit = 0;
  bool ok = preflight_lattice_ok(fast, 0.01, 2000, 2000, &spacing, &crit);
  CHECK(spacing == doctest::Approx(std::pow(1e-4, 0.1)).epsilon(1e-12));  // ~0.398
  CHECK(crit == doctest::Approx(ks_critical_value(0.01, 2000, 2000)).epsilon(1e-12));
  CHECK_FALSE(ok);  // 0.398 >> crit/4 ~ 0.0129: the pinned parameters cannot resolve Z^B
}

TEST_CASE("compare_marginals refuses undersized ensembles and reports moments") {
  MarginalSamples a, b;
  Rng rng(5);
  for (int i = 0; i < 600; ++i) {
    a.ZB.push_back(rng.normal());
    a.ZY.push_back(rng.normal());
    b.ZB.push_back(rng.normal());
    b.ZY.push_back(rng.normal());
  }
  a.pairings.push_back(a.ZB);
  b.pairings.push_back(b.ZB);
  MarginalReport rep = compare_marginals(a, b, {"phi0"});
  CHECK(rep.pairings.size() == 1);
  CHECK(std::abs(rep.pairings[0].mean_z) < 5.0);
  CHECK(rep.ks_zb.statistic < 0.12);

  MarginalSamples tiny;
  tiny.ZB.assign(10, 0.0);
  tiny.ZY.assign(10, 0.0);
  CHECK_THROWS_AS(compare_marginals(tiny, b, {}), std::invalid_argument);
}

TEST_CASE("default test functions: five staggered bumps plus the kernel") {
  Grid g = Grid::centered(0.1, 12.0);
  ModelSpec spec = make_builtin_model("example-3-10");
  GridFunction h = spec.h_on(g);
  TestFunctions tf = default_test_functions(g, h);
  REQUIRE(tf.fns.size() == 6);
  CHECK(tf.names.back() == "h");
  for (size_t i = 0; i + 1 < tf.fns.size(); ++i) {
    double mass = tf.fns[i].total_mass();
    CHECK(mass > 0.0);
    CHECK(std::sqrt(inner_product(tf.fns[i], tf.fns[i])) > 0.1);
  }
}
