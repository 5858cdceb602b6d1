#include "lobscale/som_fast.hpp"

#include <algorithm>
#include <cmath>

#include "lobscale/parallel.hpp"

namespace lob {

std::pair<double, double> drift_vol_price(double y, const ModelSpec& spec) {
  if (!spec.p_diff)
    throw config_error("model.pDiff: rescaled price-intensity difference required in the fast regime");
  double mu = spec.p_diff(spec.B0, y);
  double sig = std::sqrt(std::max(0.0, spec.pA(spec.B0, y) + spec.pB(spec.B0, y)));
  return {mu, sig};
}

NoiseKernel::NoiseKernel(const ModelSpec& spec, const Grid& grid, double y) {
  tick_ = grid.tick;
  GridFunction fg = spec.f_on(grid, spec.B0, y);
  GridFunction gg = spec.g_on(grid, spec.B0, y);
  f_.assign(fg.values().begin(), fg.values().end());
  g_.assign(gg.values().begin(), gg.values().end());
  const size_t n = f_.size();
  sig2_.resize(n);
  d_.resize(n);
  v_.resize(n);
  double neg_g = 0.0, fmax = 0.0, dropped_f = 0.0;
  clamped_ = 0;
  for (size_t i = 0; i < n; ++i) {
    sig2_[i] = g_[i] - tick_ * f_[i] * f_[i];
    if (sig2_[i] < 0.0) ++clamped_;
    double gi = g_[i];
    if (gi < 0.0) {
      neg_g = std::max(neg_g, -gi);
      gi = 0.0;
    }
    d_[i] = std::sqrt(gi);
    fmax = std::max(fmax, std::abs(f_[i]));
    if (d_[i] > 0.0) {
      v_[i] = std::sqrt(tick_) * f_[i] / d_[i];
    } else {
      v_[i] = 0.0;  // 0/0 := 0; a nonzero f over a zero-variance cell is projected away
      if (f_[i] != 0.0) dropped_f = std::max(dropped_f, tick_ * f_[i] * f_[i]);
    }
  }
  rho_ = 0.0;
  for (double w : v_) rho_ += w * w;
  double rank1_delta = 0.0;
  if (rho_ > 1.0) {
    double s = 1.0 / std::sqrt(rho_);
    for (double& w : v_) w *= s;
    rank1_delta = tick_ * fmax * fmax * (1.0 - 1.0 / rho_);
  }
  double rho_eff = std::min(rho_, 1.0);
  c_ = rho_eff < 1e-12 ? 0.5 : (1.0 - std::sqrt(1.0 - rho_eff)) / rho_eff;
  double nrm = norm_inf();
  proj_delta_ = std::max({neg_g, dropped_f, rank1_delta}) / std::max(nrm, 1e-300);
}

void NoiseKernel::add_sample(std::span<const double> xi, double scale, std::span<double> out) const {
  const size_t n = d_.size();
  double vdot = 0.0;
  for (size_t i = 0; i < n; ++i) vdot += v_[i] * xi[i];
  double cv = c_ * vdot;
  for (size_t i = 0; i < n; ++i) out[i] += scale * d_[i] * (xi[i] - cv * v_[i]);
}

double NoiseKernel::q_entry(int i, int j) const {
  size_t a = static_cast<size_t>(i), b = static_cast<size_t>(j);
  double q = -tick_ * f_[a] * f_[b];
  if (i == j) q += g_[a];
  return q;
}

double NoiseKernel::norm_inf() const {
  double diag = 0.0, f1 = 0.0, f2 = 0.0;
  for (size_t i = 0; i < f_.size(); ++i) {
    diag = std::max(diag, std::abs(g_[i] - tick_ * f_[i] * f_[i]));
    double a = std::abs(f_[i]);
    if (a > f1) {
      f2 = f1;
      f1 = a;
    } else if (a > f2) {
      f2 = a;
    }
  }
  return std::max(diag, tick_ * f1 * f2);
}

double NoiseKernel::distance_inf_bound(const NoiseKernel& a, const NoiseKernel& b) {
  double dg = 0.0, df = 0.0, fmax = 0.0;
  for (size_t i = 0; i < a.f_.size(); ++i) {
    dg = std::max(dg, std::abs(a.g_[i] - b.g_[i]));
    df = std::max(df, std::abs(a.f_[i] - b.f_[i]));
    fmax = std::max({fmax, std::abs(a.f_[i]), std::abs(b.f_[i])});
  }
  return std::max(dg + a.tick_ * df * 2.0 * fmax, a.tick_ * df * 2.0 * fmax);
}

const NoiseKernel& NoiseSchedule::at(double t) const {
  auto it = std::upper_bound(times.begin(), times.end(), t);
  size_t i = it == times.begin() ? 0 : static_cast<size_t>(it - times.begin()) - 1;
  return kernels[i];
}

NoiseSchedule build_noise_schedule(const ModelSpec& spec, const LimitPath& path, double rel_tol) {
  NoiseSchedule sched;
  for (size_t r = 0; r < path.rows(); ++r) {
    NoiseKernel cand(spec, path.grid, path.Y[r]);
    if (sched.kernels.empty() ||
        NoiseKernel::distance_inf_bound(sched.kernels.back(), cand) >
            rel_tol * std::max(sched.kernels.back().norm_inf(), 1e-300)) {
      sched.times.push_back(path.t[r]);
      sched.kernels.push_back(std::move(cand));
    }
  }
  return sched;
}

FastSetup FastSetup::make(const ModelSpec& spec, const LimitPath& path, double dt_sde,
                          double kernel_tol) {
  if (!spec.p_diff)
    throw config_error("model.pDiff: rescaled price-intensity difference required in the fast regime");
  FastSetup s;
  s.spec = &spec;
  s.path = &path;
  s.h = spec.h_on(path.grid);
  s.dt_sde = dt_sde;
  s.schedule = build_noise_schedule(spec, path, kernel_tol);
  const size_t rows = path.rows();
  s.fb_rows.resize(rows);
  s.fy_rows.resize(rows);
  s.mu_row.resize(rows);
  s.sigma_row.resize(rows);
  s.a_row.resize(rows);
  for (size_t r = 0; r < rows; ++r) {
    double y = path.Y[r];
    GridFunction fb = spec.fb_on(path.grid, spec.B0, y);
    GridFunction fy = spec.fy_on(path.grid, spec.B0, y);
    s.fb_rows[r].assign(fb.values().begin(), fb.values().end());
    s.fy_rows[r].assign(fy.values().begin(), fy.values().end());
    auto [mu, sig] = drift_vol_price(y, spec);
    s.mu_row[r] = mu;
    s.sigma_row[r] = sig;
    s.a_row[r] = inner_product(s.h, fy);
  }
  return s;
}

namespace {

// Linear interpolation of per-row coefficient tables along the path times.
void interp_rows(const std::vector<double>& t, const std::vector<std::vector<double>>& rows,
                 size_t i, double w, std::span<double> out) {
  const auto& lo = rows[i];
  if (w <= 0.0 || i + 1 >= rows.size()) {
    std::copy(lo.begin(), lo.end(), out.begin());
    return;
  }
  const auto& hi = rows[i + 1];
  for (size_t c = 0; c < lo.size(); ++c) out[c] = (1 - w) * lo[c] + w * hi[c];
  (void)t;
}

}  // namespace

FastIntegrator::FastIntegrator(const FastSetup& s) : s_(&s), zu_(s.path->grid) {
  size_t n = static_cast<size_t>(s.path->grid.size());
  xi_.resize(n);
  dm_.resize(n);
  fb_.resize(n);
  fy_.resize(n);
  ux_.resize(n);
}

void FastIntegrator::step(double dt, FastNoise& noise) {
  const LimitPath& path = *s_->path;
  const Grid& g = path.grid;
  const size_t n = static_cast<size_t>(g.size());
  size_t i = path.segment(t_);
  double w = 0.0;
  if (i + 1 < path.rows() && path.t[i + 1] > path.t[i])
    w = std::clamp((t_ - path.t[i]) / (path.t[i + 1] - path.t[i]), 0.0, 1.0);
  interp_rows(path.t, s_->fb_rows, i, w, fb_);
  interp_rows(path.t, s_->fy_rows, i, w, fy_);
  double mu = (1 - w) * s_->mu_row[i] + (i + 1 < path.rows() ? w * s_->mu_row[i + 1] : 0.0);
  double sigma = (1 - w) * s_->sigma_row[i] + (i + 1 < path.rows() ? w * s_->sigma_row[i + 1] : 0.0);
  double a = (1 - w) * s_->a_row[i] + (i + 1 < path.rows() ? w * s_->a_row[i + 1] : 0.0);
  path.ux_row_at(t_, ux_);

  double dWB = 0.0;
  noise.draw(t_, dt, dWB, xi_);
  std::fill(dm_.begin(), dm_.end(), 0.0);
  s_->schedule.at(t_).add_sample(xi_, 1.0 / std::sqrt(g.tick), dm_);

  const auto hv = s_->h.values();
  double hux = 0.0, hfb = 0.0, hdm = 0.0;
  for (size_t c = 0; c < n; ++c) {
    hux += hv[c] * ux_[c];
    hfb += hv[c] * fb_[c];
    hdm += hv[c] * dm_[c];
  }
  hux *= g.tick;
  hfb *= g.tick;
  hdm *= g.tick;

  auto zv = zu_.values();
  for (size_t c = 0; c < n; ++c)
    zv[c] += (mu * ux_[c] + fb_[c] * zb_ + fy_[c] * zy_) * dt + sigma * ux_[c] * dWB + dm_[c];

  double dDh = (mu * hux + hfb * zb_) * dt + sigma * hux * dWB + hdm;
  zb_ += mu * dt + sigma * dWB;
  double zy = 0.0;
  for (size_t c = 0; c < n; ++c) zy += hv[c] * zv[c];
  zy_ = g.tick * zy;

  if (record_noise) recs_.push_back({t_, dt, a, dDh, zy_});
  t_ += dt;
}

void FastIntegrator::advance_to(double T, FastNoise& noise) {
  const double eps = 1e-12 * std::max(1.0, std::abs(T));
  while (t_ < T - eps) step(std::min(s_->dt_sde, T - t_), noise);
  t_ = std::max(t_, T);
}

void FastIntegrator::advance_to(double T, Rng& rng) {
  struct Wrap final : FastNoise {
    Rng* r;
    void draw(double, double dt, double& dWB, std::span<double> cells) override {
      double s = std::sqrt(dt);
      dWB = s * r->normal();
      for (auto& w : cells) w = s * r->normal();
    }
  } wrap;
  wrap.r = &rng;
  advance_to(T, wrap);
}

double FastIntegrator::pair(const GridFunction& phi) const { return inner_product(zu_, phi); }

std::vector<double> zy_ou_reference(const std::vector<FastStepRecord>& recs) {
  std::vector<double> out;
  out.reserve(recs.size());
  double zy = 0.0;
  for (const auto& r : recs) {
    double z = r.a * r.dt;
    double e = std::exp(z);
    double phi1 = std::abs(z) < 1e-8 ? 1.0 + 0.5 * z : (e - 1.0) / z;
    zy = e * zy + phi1 * r.dDh;
    out.push_back(zy);
  }
  return out;
}

void run_fast_paths(const FastSetup& setup, long paths, std::uint64_t master_seed,
                    std::span<const double> probe_times, int parallelism,
                    const std::function<void(long, size_t, const FastIntegrator&)>& visit) {
  std::vector<double> probes(probe_times.begin(), probe_times.end());
  parallel_for(paths, parallelism, [&](long p) {
    RngFastNoise noise(master_seed ^ static_cast<std::uint64_t>(p));
    FastIntegrator it(setup);
    for (size_t m = 0; m < probes.size(); ++m) {
      it.advance_to(probes[m], noise);
      visit(p, m, it);
    }
  });
}

}  // namespace lob
