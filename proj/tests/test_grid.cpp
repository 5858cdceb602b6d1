#include <doctest.h>

#include <cmath>

#include "lobscale/grid.hpp"
#include "lobscale/model.hpp"
#include "lobscale/rng.hpp"
#include "lobscale/scaling.hpp"

using namespace lob;

namespace {
GridFunction constant_fn(const Grid& g, double v) {
  GridFunction f(g);
  for (int j = g.lo; j <= g.hi; ++j) f[j] = v;
  return f;
}
}  // namespace

TEST_CASE("inner product is exact quadrature for step functions") {
  Grid g(0.5, -1, 2);  // 4 cells
  REQUIRE(g.size() == 4);
  GridFunction one = constant_fn(g, 1.0);
  CHECK(inner_product(one, one) == doctest::Approx(2.0).epsilon(1e-15));

  GridFunction zero(g);
  Rng rng(7);
  GridFunction a(g), b(g), c(g);
  for (int j = g.lo; j <= g.hi; ++j) {
    a[j] = rng.normal();
    b[j] = rng.normal();
    c[j] = rng.normal();
  }
  CHECK(inner_product(a, zero) == 0.0);
  CHECK(inner_product(a, b) == inner_product(b, a));
  // bilinearity
  GridFunction bc = b;
  for (int j = g.lo; j <= g.hi; ++j) bc[j] = 2.5 * b[j] + c[j];
  CHECK(inner_product(a, bc) ==
        doctest::Approx(2.5 * inner_product(a, b) + inner_product(a, c)).epsilon(1e-13));
}

TEST_CASE("inner product against the exponential kernel converges at O(tick)") {
  // h(x) = -x^3 e^x on x<=0, lambda=1; int_{-1}^0 h = 6 - 16/e ~ 0.1144933
  const double exact = 6.0 - 16.0 / std::exp(1.0);
  auto h = [](double x) { return x > 0 ? 0.0 : -x * x * x * std::exp(x); };
  double prev_err = 1e9;
  for (double tick : {0.1, 0.05, 0.025}) {
    Grid g = Grid::centered(tick, 2.0);
    GridFunction hg = project_to_grid(h, g, 64);
    GridFunction ind =
        project_to_grid([](double x) { return (x > -1.0 && x <= 0.0) ? 1.0 : 0.0; }, g, 64);
    double err = std::abs(inner_product(hg, ind) - exact);
    CHECK(err < tick);
    CHECK(err < prev_err + 1e-15);
    prev_err = err;
  }
}

TEST_CASE("grid mismatch raises a structural error") {
  Grid g1(0.5, -1, 2), g2(0.25, -1, 2);
  CHECK_THROWS_AS(inner_product(GridFunction(g1), GridFunction(g2)), grid_mismatch_error);
}

TEST_CASE("shifts relabel cells exactly and track boundary loss") {
  Grid g(1.0, -3, 3);
  GridFunction u(g);
  u[0] = 1.0;  // unit mass in cell 0 (tick = 1)
  GridFunction minus = shift(u, ShiftDir::Minus);
  CHECK(minus[1] == 1.0);
  CHECK(minus[0] == 0.0);

  GridFunction back = shift(shift(u, ShiftDir::Plus), ShiftDir::Minus);
  for (int j = g.lo; j <= g.hi; ++j) CHECK(back[j] == u[j]);

  GridFunction c = constant_fn(g, 3.0);
  GridFunction cp = shift(c, ShiftDir::Plus);
  for (int j = g.lo; j < g.hi; ++j) CHECK(cp[j] == 3.0);  // interior cells
  CHECK(cp[g.hi] == 0.0);                                 // zero inflow

  GridFunction edge(g);
  edge[g.hi] = 2.0;
  double lost = edge.shift_in_place(ShiftDir::Minus);
  CHECK(lost == doctest::Approx(2.0 * g.tick));
}

TEST_CASE("projection: constants, midpoints of linear cells, normalizer") {
  Grid g(0.5, -2, 2);
  GridFunction one = project_to_grid([](double) { return 1.0; }, g);
  for (int j = g.lo; j <= g.hi; ++j) CHECK(one[j] == doctest::Approx(1.0).epsilon(1e-15));

  // linear x over the cell (0, dx]: cell average = dx/2
  Grid g2(0.25, 0, 1);
  GridFunction lin = project_to_grid([](double x) { return x; }, g2);
  CHECK(lin[1] == doctest::Approx(0.125).epsilon(1e-14));

  // placement density of the worked example integrates to 1 with C = 3/320000
  ModelSpec spec = make_builtin_model("example-3-10");
  Grid g3 = Grid::centered(0.05, 12.0);
  GridFunction rho = spec.g_on(g3, spec.B0, 0.0);
  CHECK(std::abs(rho.total_mass() - 1.0) < 1e-10);

  CHECK_THROWS_AS(project_to_grid([](double x) { return 1.0 / (x - x); }, g2), numeric_error);
}

TEST_CASE("scaling regime derived quantities and validation") {
  ScalingRegime slow = ScalingRegime::make(1e-3, 0.4, 0.6, 1.0, Regime::Slow);
  CHECK(slow.dx() == doctest::Approx(std::pow(1e-3, 0.4)).epsilon(1e-15));
  CHECK(slow.dp() == doctest::Approx(std::pow(1e-3, 0.6)).epsilon(1e-15));
  CHECK(slow.dv() == 1e-3);
  CHECK(slow.n_events() == 1000);
  CHECK(slow.price_active());
  CHECK(slow.fluctuation_scale() == doctest::Approx(std::sqrt(slow.dx())).epsilon(1e-15));

  ScalingRegime fast = ScalingRegime::make(1e-4, 0.6, 0.8, 1.0, Regime::Fast);
  CHECK(fast.fluctuation_scale() == doctest::Approx(1e-2).epsilon(1e-12));
  CHECK_FALSE(fast.price_active());

  // dx*dp = dt^(alpha+beta) <= dt for every valid regime
  for (const auto& r : {slow, fast}) {
    CHECK(r.dx() * r.dp() == doctest::Approx(std::pow(r.dt, r.alpha + r.beta)).epsilon(1e-12));
    CHECK(r.dx() * r.dp() <= r.dt * (1 + 1e-12));
  }

  CHECK_THROWS_AS(ScalingRegime::make(1e-3, 0.4, 0.7, 1.0, Regime::Slow), config_error);
  CHECK_THROWS_AS(ScalingRegime::make(1e-3, 0.6, 0.4, 1.0, Regime::Fast), config_error);
  CHECK_THROWS_AS(ScalingRegime::make(1e-3, 0.3, 0.5, 1.0, Regime::Fast), config_error);
  CHECK_THROWS_AS(ScalingRegime::make(1e-3, 1.2, 0.6, 1.0, Regime::Slow), config_error);
  CHECK_THROWS_AS(ScalingRegime::make(-1.0, 0.4, 0.6, 1.0, Regime::Slow), config_error);
}

TEST_CASE("fractional shifts: identity at zero, exact at whole ticks inside") {
  Grid g(0.5, -6, 6);
  GridFunction u = project_to_grid([](double x) { return std::exp(-x * x); }, g);
  GridFunction same = u.shifted_by(0.0);
  for (int j = g.lo; j <= g.hi; ++j) CHECK(same[j] == u[j]);
  GridFunction one_tick = u.shifted_by(g.tick);
  for (int j = g.lo; j < g.hi; ++j) CHECK(one_tick[j] == doctest::Approx(u[j + 1]).epsilon(1e-14));
}
