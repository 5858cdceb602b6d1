#include <doctest.h>

#include <cmath>
#include <vector>

#include "lobscale/som_fast.hpp"

using namespace lob;

namespace {
ModelParams params(std::initializer_list<std::pair<const std::string, double>> kv) {
  ModelParams p;
  p.kv = kv;
  return p;
}

// Pregenerated fine increments so coarse/fine integrations share one Brownian
// path (coarse steps aggregate fine increments).
struct SharedNoise final : FastNoise {
  double dt_fine;
  long steps;
  int cells;
  std::vector<double> wb, wc;
  SharedNoise(double dtf, long st, int n, Rng& rng) : dt_fine(dtf), steps(st), cells(n) {
    wb.resize(static_cast<size_t>(steps));
    wc.resize(static_cast<size_t>(steps) * static_cast<size_t>(cells));
    double s = std::sqrt(dtf);
    for (auto& x : wb) x = s * rng.normal();
    for (auto& x : wc) x = s * rng.normal();
  }
  void draw(double t, double dt, double& dWB, std::span<double> dW_cells) override {
    long k0 = std::lround(t / dt_fine);
    long m = std::max<long>(1, std::lround(dt / dt_fine));
    dWB = 0;
    std::fill(dW_cells.begin(), dW_cells.end(), 0.0);
    for (long k = k0; k < std::min(k0 + m, steps); ++k) {
      dWB += wb[static_cast<size_t>(k)];
      const double* row = &wc[static_cast<size_t>(k) * cells];
      for (int c = 0; c < cells; ++c) dW_cells[static_cast<size_t>(c)] += row[c];
    }
  }
};
}  // namespace

TEST_CASE("price drift and volatility of the fast fluctuation") {
  ModelSpec spec =
      make_builtin_model("constant-test", params({{"pa", 0.5}, {"pb", 0.5}, {"p_diff", 0.0}}));
  spec.p_diff = [](double, double) { return 0.0; };
  auto [mu, sig] = drift_vol_price(0.3, spec);
  CHECK(mu == 0.0);
  CHECK(sig == doctest::Approx(1.0).epsilon(1e-15));

  ModelSpec zero = make_builtin_model("constant-test", params({{"pa", 0.0}, {"pb", 0.0}}));
  zero.p_diff = [](double, double) { return 0.0; };
  CHECK(drift_vol_price(0.1, zero).second == 0.0);

  ModelSpec missing = make_builtin_model("example-3-10");
  CHECK_THROWS_AS(drift_vol_price(0.0, missing), config_error);

  // closing example of the fast section: mu(y) = B0 (1-Phi(y)) / (1+B0)
  ModelSpec fast = make_builtin_model("example-fast");
  auto [mu2, sig2] = drift_vol_price(0.4, fast);
  CHECK(mu2 == doctest::Approx((1.0 - normal_cdf(0.4)) / 2.0).epsilon(1e-14));
  CHECK(sig2 == doctest::Approx(std::sqrt(2.0 * fast.pA(1.0, 0.4))).epsilon(1e-14));
}

TEST_CASE("noise kernel factor reproduces Q = diag(g) - tick f f^T exactly") {
  ModelSpec spec = make_builtin_model("example-3-10");
  Grid g = Grid::centered(0.5, 11.0);
  NoiseKernel k(spec, g, 0.3);
  CHECK(k.clamped_cells() == 0);
  CHECK(k.psd_projection_delta() < 1e-10);
  CHECK(k.rho() <= 1.0 + 1e-12);

  const int n = k.size();
  // columns of L via unit inputs, then compare L L^T with q_entry
  std::vector<std::vector<double>> L(static_cast<size_t>(n),
                                     std::vector<double>(static_cast<size_t>(n), 0.0));
  std::vector<double> e(static_cast<size_t>(n), 0.0), col(static_cast<size_t>(n));
  for (int c = 0; c < n; ++c) {
    std::fill(col.begin(), col.end(), 0.0);
    e[static_cast<size_t>(c)] = 1.0;
    k.add_sample(e, 1.0, col);
    e[static_cast<size_t>(c)] = 0.0;
    for (int r = 0; r < n; ++r)
      L[static_cast<size_t>(r)][static_cast<size_t>(c)] = col[static_cast<size_t>(r)];
  }
  double max_err = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double q = 0;
      for (int c = 0; c < n; ++c)
        q += L[static_cast<size_t>(i)][static_cast<size_t>(c)] *
             L[static_cast<size_t>(j)][static_cast<size_t>(c)];
      max_err = std::max(max_err, std::abs(q - k.q_entry(i, j)));
    }
  }
  CHECK(max_err < 1e-12 * std::max(1.0, k.norm_inf()));
}

TEST_CASE("variance inequality <g,phi^2> >= <f,phi>^2 for sampler-consistent fields") {
  // random conditional laws: cell probabilities q_i, omega moments m1, m2 >= m1^2
  Rng rng(2718);
  for (int rep = 0; rep < 25; ++rep) {
    Grid g(0.25, -8, 4);
    const int n = g.size();
    std::vector<double> q(static_cast<size_t>(n)), m1(static_cast<size_t>(n)),
        m2(static_cast<size_t>(n));
    double qs = 0;
    for (int i = 0; i < n; ++i) {
      q[static_cast<size_t>(i)] = rng.uniform01();
      qs += q[static_cast<size_t>(i)];
      m1[static_cast<size_t>(i)] = 2.0 * rng.uniform01() - 1.0;
      m2[static_cast<size_t>(i)] =
          m1[static_cast<size_t>(i)] * m1[static_cast<size_t>(i)] + rng.uniform01();
    }
    for (auto& x : q) x /= qs;
    ModelSpec spec = make_builtin_model("constant-test");
    spec.f_avg = [&, g](double, double, double lo, double hi) {
      int j = g.cell_of(0.5 * (lo + hi));
      size_t i = static_cast<size_t>(g.index_of(j));
      return q[i] * m1[i] / g.tick;
    };
    spec.g_avg = [&, g](double, double, double lo, double hi) {
      int j = g.cell_of(0.5 * (lo + hi));
      size_t i = static_cast<size_t>(g.index_of(j));
      return q[i] * m2[i] / g.tick;
    };
    NoiseKernel k(spec, g, 0.0);
    CHECK(k.rho() <= 1.0 + 1e-12);
    CHECK(k.psd_projection_delta() < 1e-10);
    for (int i = 0; i < n; ++i) CHECK(k.sigma_sq(i) >= -1e-14);
    GridFunction phi(g);
    for (int j = g.lo; j <= g.hi; ++j) phi[j] = rng.normal();
    double quad = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        quad += phi.values()[static_cast<size_t>(i)] * k.q_entry(i, j) *
                phi.values()[static_cast<size_t>(j)];
    CHECK(quad >= -1e-10 * k.norm_inf());
  }
}

TEST_CASE("martingale increments: Var<M_t, e_i> = t sigma_i^2 within 5%") {
  // f == 0, g == 1 on a block: Q = I on the block cells
  ModelSpec spec = make_builtin_model("constant-test", params({{"omega", 0.0}}));
  Grid g(0.5, -4, 2);
  spec.f_avg = [](double, double, double, double) { return 0.0; };
  spec.g_avg = [](double, double, double lo, double) { return lo < 0.0 ? 1.0 : 0.0; };
  NoiseKernel k(spec, g, 0.0);
  const int cell = g.index_of(-2);
  CHECK(k.sigma_sq(cell) == doctest::Approx(1.0).epsilon(1e-12));

  Rng rng(99);
  const int paths = 10000, steps = 16;
  const double T = 1.0, dt = T / steps;
  double s2 = 0;
  std::vector<double> xi(static_cast<size_t>(g.size())), m(static_cast<size_t>(g.size()));
  for (int p = 0; p < paths; ++p) {
    std::fill(m.begin(), m.end(), 0.0);
    for (int s = 0; s < steps; ++s) {
      for (auto& x : xi) x = rng.normal();
      k.add_sample(xi, std::sqrt(dt / g.tick), m);
    }
    double pair_ei = std::sqrt(g.tick) * m[static_cast<size_t>(cell)];  // <M, e_i>
    s2 += pair_ei * pair_ei;
  }
  double var = s2 / paths;
  CHECK(var == doctest::Approx(T).epsilon(0.05));
}

TEST_CASE("independence of dW^B and dM components") {
  ModelSpec spec = make_builtin_model("example-fast");
  ScalingRegime reg = ScalingRegime::make(1e-4, 0.6, 0.8, 0.25, Regime::Fast);
  Grid g = Grid::centered(0.5, 11.0);
  LimitPath lp = solve_first_order(spec, reg, g, {5e-3, 1});
  FastSetup fs = FastSetup::make(spec, lp, 5e-3);
  const long N = 20000;
  Rng rng(4);
  std::vector<double> xi(static_cast<size_t>(g.size()));
  std::vector<double> dm(static_cast<size_t>(g.size()));
  int probe = g.index_of(-1);
  double swb = 0, swm = 0, swbm = 0, sbb = 0, smm = 0;
  const NoiseKernel& k = fs.schedule.kernels.front();
  for (long i = 0; i < N; ++i) {
    double dwb = rng.normal();
    for (auto& x : xi) x = rng.normal();
    std::fill(dm.begin(), dm.end(), 0.0);
    k.add_sample(xi, 1.0, dm);
    double v = dm[static_cast<size_t>(probe)];
    swb += dwb;
    swm += v;
    swbm += dwb * v;
    sbb += dwb * dwb;
    smm += v * v;
  }
  double corr = (swbm / N - swb / N * swm / N) /
                std::sqrt((sbb / N - swb / N * swb / N) * (smm / N - swm / N * swm / N));
  CHECK(std::abs(corr) < 4.0 / std::sqrt(static_cast<double>(N)));
}

TEST_CASE("zero-coefficient degeneration keeps the state at zero") {
  ModelSpec spec = make_builtin_model(
      "constant-test", params({{"pa", 0.0}, {"pb", 0.0}, {"omega", 0.0}}));
  spec.p_diff = [](double, double) { return 0.0; };
  ScalingRegime reg = ScalingRegime::make(1e-4, 0.6, 0.8, 1.0, Regime::Fast);
  Grid g = Grid::centered(0.25, 4.0);
  LimitPath lp = solve_first_order(spec, reg, g, {1e-2, 1});
  FastSetup fs = FastSetup::make(spec, lp, 1e-2);
  FastIntegrator it(fs);
  Rng rng(8);
  it.advance_to(1.0, rng);
  CHECK(it.ZB() == 0.0);
  CHECK(it.ZY() == 0.0);
  for (double v : it.Zu().values()) CHECK(v == 0.0);
}

TEST_CASE("OU reference: f_y == 0 makes ZY = <D,h> exactly") {
  ModelSpec spec = make_builtin_model(
      "constant-test", params({{"pa", 0.3},
                               {"pb", 0.3},
                               {"p_diff", 0.05},
                               {"omega", 1.0},
                               {"pi_lo", -2.0},
                               {"pi_hi", 0.0}}));
  ScalingRegime reg = ScalingRegime::make(1e-4, 0.6, 0.8, 1.0, Regime::Fast);
  Grid g = Grid::centered(0.25, 4.0);
  LimitPath lp = solve_first_order(spec, reg, g, {1e-2, 1});
  FastSetup fs = FastSetup::make(spec, lp, 1e-2);
  FastIntegrator it(fs);
  it.record_noise = true;
  Rng rng(12);
  it.advance_to(1.0, rng);
  std::vector<double> ou = zy_ou_reference(it.records());
  double dsum = 0;
  for (size_t k = 0; k < ou.size(); ++k) {
    dsum += it.records()[k].dDh;
    CHECK(ou[k] == dsum);  // a == 0: the exponential scheme telescopes exactly
  }
  // and the grid route only differs by roundoff
  CHECK(std::abs(it.ZY() - ou.back()) < 1e-10);
}

TEST_CASE("OU reference: constant coefficients match the closed form") {
  // dZY = d0 dt - c ZY dt, ZY(0) = 0  =>  ZY(T) = (d0/c)(1 - exp(-cT))
  const double c = 0.8, d0 = 1.7, T = 2.0;
  const int steps = 50;
  std::vector<FastStepRecord> recs;
  for (int k = 0; k < steps; ++k)
    recs.push_back({k * T / steps, T / steps, -c, d0 * T / steps, 0.0});
  std::vector<double> ou = zy_ou_reference(recs);
  double exact = d0 / c * (1.0 - std::exp(-c * T));
  CHECK(ou.back() == doctest::Approx(exact).epsilon(1e-12));
}

TEST_CASE("grid <Zu,h> and the scalar OU reference converge at first order in dt") {
  ModelSpec spec = make_builtin_model("example-fast");
  ScalingRegime reg = ScalingRegime::make(1e-4, 0.6, 0.8, 1.0, Regime::Fast);
  Grid g = Grid::centered(0.5, 11.0);
  LimitPath lp = solve_first_order(spec, reg, g, {5e-3, 1});
  FastSetup base = FastSetup::make(spec, lp, 1.0);

  const double dt_fine = 2.5e-3;
  const long steps = std::lround(1.0 / dt_fine);
  std::vector<double> med_gap;
  for (double dt : {4 * dt_fine, 2 * dt_fine, dt_fine}) {
    std::vector<double> gaps;
    for (int p = 0; p < 6; ++p) {
      Rng rng(7000 + p);
      SharedNoise noise(dt_fine, steps, g.size(), rng);
      FastSetup fs = base;
      fs.dt_sde = dt;
      FastIntegrator it(fs);
      it.record_noise = true;
      it.advance_to(1.0, noise);
      std::vector<double> ou = zy_ou_reference(it.records());
      double gap = 0;
      for (size_t k = 0; k < ou.size(); ++k)
        gap = std::max(gap, std::abs(ou[k] - it.records()[k].zy_after));
      gaps.push_back(gap);
    }
    std::sort(gaps.begin(), gaps.end());
    med_gap.push_back(gaps[gaps.size() / 2]);
  }
  CHECK(med_gap[0] / med_gap[1] > 1.4);
  CHECK(med_gap[0] / med_gap[1] < 2.8);
  CHECK(med_gap[1] / med_gap[2] > 1.4);
  CHECK(med_gap[1] / med_gap[2] < 2.8);
}

TEST_CASE("terminal pairing variance matches a 10x finer integration within 2%") {
  ModelSpec spec = make_builtin_model("example-fast");
  ScalingRegime reg = ScalingRegime::make(1e-4, 0.6, 0.8, 1.0, Regime::Fast);
  Grid g = Grid::centered(0.5, 11.0);
  LimitPath lp = solve_first_order(spec, reg, g, {5e-3, 1});
  FastSetup base = FastSetup::make(spec, lp, 1.0);
  GridFunction phi = project_to_grid(
      [](double x) {
        double s = (x + 2.0) / 2.0;
        return std::abs(s) < 1 ? std::exp(1 - 1 / (1 - s * s)) : 0.0;
      },
      g, 16);

  const double dt_fine = 2e-3;
  const long steps = std::lround(1.0 / dt_fine);
  const int paths = 3000;
  double s_coarse = 0, s2_coarse = 0, s_fine = 0, s2_fine = 0;
  for (int p = 0; p < paths; ++p) {
    Rng rng(100000 + p);
    SharedNoise noise(dt_fine, steps, g.size(), rng);
    for (int lvl = 0; lvl < 2; ++lvl) {
      FastSetup fs = base;
      fs.dt_sde = lvl == 0 ? 10 * dt_fine : dt_fine;
      FastIntegrator it(fs);
      it.advance_to(1.0, noise);
      double v = it.pair(phi);
      if (lvl == 0) {
        s_coarse += v;
        s2_coarse += v * v;
      } else {
        s_fine += v;
        s2_fine += v * v;
      }
    }
  }
  double var_c = s2_coarse / paths - (s_coarse / paths) * (s_coarse / paths);
  double var_f = s2_fine / paths - (s_fine / paths) * (s_fine / paths);
  CHECK(std::abs(var_c - var_f) / var_f < 0.02);
}
