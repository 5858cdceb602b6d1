#include "lobscale/model.hpp"

#include <cmath>

namespace lob {

double normal_cdf(double y) { return 0.5 * std::erfc(-y / std::sqrt(2.0)); }
double normal_pdf(double y) { return std::exp(-0.5 * y * y) / std::sqrt(2.0 * M_PI); }

double ModelSpec::pA_n(double b, double y, const ScalingRegime&) const { return pA(b, y); }

double ModelSpec::pB_n(double b, double y, const ScalingRegime& reg) const {
  double v = pB(b, y);
  if (reg.regime == Regime::Fast && p_diff)
    v += std::pow(reg.dt, reg.alpha - 0.5) * p_diff(b, y);
  return v;
}

namespace {
constexpr double kFdScale = 1e-5;

double fd_step(double arg) { return kFdScale * (1.0 + std::abs(arg)); }
}  // namespace

double ModelSpec::pb_at(double b, double y) const {
  if (pb) return pb(b, y);
  double e = fd_step(b);
  return (p_bma(b + e, y) - p_bma(b - e, y)) / (2 * e);
}

double ModelSpec::py_at(double b, double y) const {
  if (py) return py(b, y);
  double e = fd_step(y);
  return (p_bma(b, y + e) - p_bma(b, y - e)) / (2 * e);
}

double ModelSpec::fb_at(double b, double y, double x) const {
  if (fb) return fb(b, y, x);
  double e = fd_step(b);
  return (f(b + e, y, x) - f(b - e, y, x)) / (2 * e);
}

double ModelSpec::fy_at(double b, double y, double x) const {
  if (fy) return fy(b, y, x);
  double e = fd_step(y);
  return (f(b, y + e, x) - f(b, y - e, x)) / (2 * e);
}

GridFunction ModelSpec::f_on(const Grid& grid, double b, double y) const {
  if (f_avg)
    return project_cell_averages([&](double lo, double hi) { return f_avg(b, y, lo, hi); }, grid);
  return project_to_grid([&](double x) { return f(b, y, x); }, grid);
}

GridFunction ModelSpec::g_on(const Grid& grid, double b, double y) const {
  if (!g && !g_avg) throw config_error("model.g: second-moment density required but not set");
  if (g_avg)
    return project_cell_averages([&](double lo, double hi) { return g_avg(b, y, lo, hi); }, grid);
  return project_to_grid([&](double x) { return g(b, y, x); }, grid);
}

GridFunction ModelSpec::fb_on(const Grid& grid, double b, double y) const {
  return project_to_grid([&](double x) { return fb_at(b, y, x); }, grid);
}

GridFunction ModelSpec::fy_on(const Grid& grid, double b, double y) const {
  return project_to_grid([&](double x) { return fy_at(b, y, x); }, grid);
}

GridFunction ModelSpec::h_on(const Grid& grid) const {
  return project_to_grid(h, grid, 64);
}

GridFunction ModelSpec::u0_on(const Grid& grid) const {
  return project_to_grid(u0, grid, 64);
}

void ModelSpec::validate() const {
  if (!(M > 0)) throw config_error("model.M: must be positive");
  if (!pA || !pB) throw config_error("model.pA/pB: intensities required");
  if (!f) throw config_error("model.f: first-moment density required");
  if (!h) throw config_error("model.h: volume indicator kernel required");
  if (!u0) throw config_error("model.u0: initial density required");
  if (!sample_omega || !sample_pi) throw config_error("model.samplers: omega/pi samplers required");
  for (double x : {0.5, 1.0, 2.0, M}) {
    if (h(x) != 0.0) throw config_error("model.h: support must lie in x <= 0");
  }
  for (double x : {-1.75 * M, -1.25 * M, -1.05 * M, 1.05 * M, 1.25 * M, 1.75 * M}) {
    if (u0(x) != 0.0) throw config_error("model.u0: support must lie in [-M, M]");
  }
  for (double x = -M; x <= M; x += M / 7.0) {
    double v = u0(x);
    if (!(v >= 0.0 && v <= M)) throw config_error("model.u0: values must lie in [0, M]");
  }
}

// ---------------------------------------------------------------------------
// Built-in models
// ---------------------------------------------------------------------------

namespace {

// Placement density of the worked example: rho(x) = C (x-10)^2 (x+10)^2 on
// [-10,10], C = 3/320000 normalizes it. Antiderivative is exact.
struct QuarticPlacement {
  double C = 3.0 / 320000.0;
  double density(double x) const {
    if (x < -10.0 || x > 10.0) return 0.0;
    double q = x * x - 100.0;
    return C * q * q;
  }
  double antiderivative(double x) const {
    double xc = std::min(std::max(x, -10.0), 10.0);
    return C * (std::pow(xc, 5) / 5.0 - 200.0 * std::pow(xc, 3) / 3.0 + 10000.0 * xc);
  }
  double cell_average(double lo, double hi) const {
    return (antiderivative(hi) - antiderivative(lo)) / (hi - lo);
  }
  double sample(Rng& rng) const {
    // rejection from uniform[-10,10]; peak of (x^2-100)^2 is 1e4 at x=0
    for (;;) {
      double x = -10.0 + 20.0 * rng.uniform01();
      double q = x * x - 100.0;
      if (rng.uniform01() * 1e4 <= q * q) return x;
    }
  }
};

// E[omega | Y=y] for P(omega=+1) = exp(-y^3) ∧ 1.
double omega_mean(double y) { return y <= 0.0 ? 1.0 : 2.0 * std::exp(-y * y * y) - 1.0; }
double omega_mean_dy(double y) {
  return y <= 0.0 ? 0.0 : -6.0 * y * y * std::exp(-y * y * y);
}

double sample_pm_one(double y, Rng& rng) {
  double p_plus = y <= 0.0 ? 1.0 : std::exp(-y * y * y);
  return rng.uniform01() < p_plus ? 1.0 : -1.0;
}

ProfileFn exp_kernel(double lambda) {
  return [lambda](double x) {
    if (x > 0.0) return 0.0;
    double lx = lambda * x;
    return -lx * lx * lx * std::exp(lx);
  };
}

ProfileFn exp_kernel_prime(double lambda) {
  return [lambda](double x) {
    if (x > 0.0) return 0.0;
    double l3 = lambda * lambda * lambda;
    return -l3 * x * x * (3.0 + lambda * x) * std::exp(lambda * x);
  };
}

// Smooth compactly supported initial book shape amp*(1-(x/w)^2)^2 on [-w,w].
ProfileFn poly_bump(double amp, double w) {
  return [amp, w](double x) {
    double s = x / w;
    if (s <= -1.0 || s >= 1.0) return 0.0;
    double q = 1.0 - s * s;
    return amp * q * q;
  };
}

ModelSpec make_example_3_10(const ModelParams& p) {
  ModelSpec m;
  m.name = "example-3-10";
  m.M = 10.0;
  m.B0 = p.get("B0", 1.0);
  double lambda = p.get("lambda", 1.0);
  QuarticPlacement rho;
  rho.C = p.get("C", rho.C);
  double amp = p.get("u0_amp", 0.1);
  double w = p.get("u0_halfwidth", 8.0);

  m.pA = [](double b, double y) { return b / (1.0 + b) * (1.0 - normal_cdf(y)); };
  m.pB = [pa = m.pA](double b, double y) { return 1.0 - pa(b, y); };
  m.pb = [](double b, double y) {
    double d = 1.0 + b;
    return -2.0 * (1.0 - normal_cdf(y)) / (d * d);
  };
  m.py = [](double b, double y) { return 2.0 * b / (1.0 + b) * normal_pdf(y); };

  m.f = [rho](double, double y, double x) { return omega_mean(y) * rho.density(x); };
  m.fb = [](double, double, double) { return 0.0; };
  m.fy = [rho](double, double y, double x) { return omega_mean_dy(y) * rho.density(x); };
  m.g = [rho](double, double, double x) { return rho.density(x); };
  m.f_avg = [rho](double, double y, double lo, double hi) {
    return omega_mean(y) * rho.cell_average(lo, hi);
  };
  m.g_avg = [rho](double, double, double lo, double hi) { return rho.cell_average(lo, hi); };

  m.h = exp_kernel(lambda);
  m.h_prime = exp_kernel_prime(lambda);
  m.u0 = poly_bump(amp, w);

  m.sample_omega = [](double, double y, Rng& rng) { return sample_pm_one(y, rng); };
  m.sample_pi = [rho](double, double, Rng& rng) { return rho.sample(rng); };
  return m;
}

ModelSpec make_example_fast(const ModelParams& p) {
  ModelSpec m = make_example_3_10(p);
  m.name = "example-fast";
  // Symmetric limit intensities q(b,y) = b(1-Phi(y))/(1+b); the discrete model
  // tilts B-events by dt^(alpha-1/2) * q, so p(b,y) = q and
  // mu(y) = B0 (1-Phi(y)) / (1+B0).
  auto q = [](double b, double y) { return b / (1.0 + b) * (1.0 - normal_cdf(y)); };
  m.pA = q;
  m.pB = q;
  m.p_diff = q;
  m.pb = [](double, double) { return 0.0; };
  m.py = [](double, double) { return 0.0; };
  return m;
}

ModelSpec make_constant_test(const ModelParams& p) {
  ModelSpec m;
  m.name = "constant-test";
  double pa = p.get("pa", 0.0);
  double pb = p.get("pb", 0.0);
  double omega0 = p.get("omega", 1.0);
  double pi_lo = p.get("pi_lo", -1.0);
  double pi_hi = p.get("pi_hi", 0.0);
  double u0_height = p.get("u0_height", 1.0);
  double u0_lo = p.get("u0_lo", -1.0);
  double u0_hi = p.get("u0_hi", 0.0);
  double lambda = p.get("lambda", 1.0);
  double pdiff = p.get("p_diff", 0.0);
  m.M = p.get("M", std::max({std::abs(omega0), std::abs(pi_lo), std::abs(pi_hi),
                             std::abs(u0_lo), std::abs(u0_hi), u0_height, 1.0}));
  m.B0 = p.get("B0", 0.0);

  m.pA = [pa](double, double) { return pa; };
  m.pB = [pb](double, double) { return pb; };
  if (pdiff != 0.0) m.p_diff = [pdiff](double, double) { return pdiff; };
  m.pb = [](double, double) { return 0.0; };
  m.py = [](double, double) { return 0.0; };

  double dens = pi_hi > pi_lo ? 1.0 / (pi_hi - pi_lo) : 0.0;
  auto box = [pi_lo, pi_hi, dens](double x) { return (x > pi_lo && x <= pi_hi) ? dens : 0.0; };
  m.f = [omega0, box](double, double, double x) { return omega0 * box(x); };
  m.fb = [](double, double, double) { return 0.0; };
  m.fy = [](double, double, double) { return 0.0; };
  m.g = [omega0, box](double, double, double x) { return omega0 * omega0 * box(x); };
  auto box_avg = [pi_lo, pi_hi, dens](double lo, double hi) {
    double a = std::max(lo, pi_lo), b = std::min(hi, pi_hi);
    return b > a ? dens * (b - a) / (hi - lo) : 0.0;
  };
  m.f_avg = [omega0, box_avg](double, double, double lo, double hi) {
    return omega0 * box_avg(lo, hi);
  };
  m.g_avg = [omega0, box_avg](double, double, double lo, double hi) {
    return omega0 * omega0 * box_avg(lo, hi);
  };

  if (p.kv.count("h_bump_center")) {
    // smooth bump kernel on [center-width, center+width], support in x <= 0
    double hc = p.get("h_bump_center", -2.0);
    double hw = p.get("h_bump_width", 1.0);
    if (hc + hw > 0) throw config_error("model.h_bump_center: support must lie in x <= 0");
    m.h = [hc, hw](double x) {
      double s = (x - hc) / hw;
      if (s <= -1.0 || s >= 1.0) return 0.0;
      return std::exp(1.0 - 1.0 / (1.0 - s * s));
    };
    m.h_prime = [hc, hw](double x) {
      double s = (x - hc) / hw;
      if (s <= -1.0 || s >= 1.0) return 0.0;
      double q = 1.0 - s * s;
      return std::exp(1.0 - 1.0 / q) * (-2.0 * s / (q * q)) / hw;
    };
  } else {
    m.h = exp_kernel(lambda);
    m.h_prime = exp_kernel_prime(lambda);
  }
  m.u0 = [u0_height, u0_lo, u0_hi](double x) {
    return (x > u0_lo && x <= u0_hi) ? u0_height : 0.0;
  };
  if (p.kv.count("u0_bump")) {
    double amp = p.get("u0_bump", 1.0);
    double w = p.get("u0_halfwidth", std::min(m.M, 4.0));
    m.u0 = poly_bump(amp, w);
  }

  m.sample_omega = [omega0](double, double, Rng&) { return omega0; };
  m.sample_pi = [pi_lo, pi_hi](double, double, Rng& rng) {
    return pi_lo + (pi_hi - pi_lo) * rng.uniform01();
  };
  return m;
}

}  // namespace

ModelSpec make_builtin_model(const std::string& name, const ModelParams& params) {
  if (name == "example-3-10") return make_example_3_10(params);
  if (name == "example-fast") return make_example_fast(params);
  if (name == "constant-test") return make_constant_test(params);
  throw config_error("model.name: unknown built-in '" + name + "'");
}

}  // namespace lob
