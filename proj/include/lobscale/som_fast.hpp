#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "lobscale/fom.hpp"
#include "lobscale/grid.hpp"
#include "lobscale/model.hpp"
#include "lobscale/rng.hpp"

namespace lob {

// mu(y) = p(B0, y), sigma(y) = sqrt(pA + pB)(B0, y) — drift and volatility of
// the fast-regime price fluctuation. Throws config_error when p_diff is absent.
std::pair<double, double> drift_vol_price(double y, const ModelSpec& spec);

// Covariance kernel of the placement noise on the orthonormal cell basis
// e_i = 1_{cell i}/sqrt(tick):  Q = diag(g) - tick f f^T, assembled from cell
// averages of f(B0,y), g(B0,y). Factorized in closed form as
// L = D^(1/2)(I - c vv^T) with LL^T = Q after PSD projection (clamp negative
// diagonal, cap rho = tick sum f^2/g at 1).
class NoiseKernel {
 public:
  NoiseKernel() = default;
  NoiseKernel(const ModelSpec& spec, const Grid& grid, double y);

  // out[i] += scale * (L xi)_i
  void add_sample(std::span<const double> xi, double scale, std::span<double> out) const;

  double sigma_sq(int idx) const { return sig2_[static_cast<size_t>(idx)]; }  // diag of Q
  int clamped_cells() const { return clamped_; }
  double psd_projection_delta() const { return proj_delta_; }  // ||Q_proj - Q||_inf / ||Q||_inf
  double rho() const { return rho_; }
  int size() const { return static_cast<int>(f_.size()); }
  const std::vector<double>& f_cells() const { return f_; }
  const std::vector<double>& g_cells() const { return g_; }
  double tick() const { return tick_; }
  double q_entry(int i, int j) const;  // diagnostics/tests
  double norm_inf() const;

  // entrywise upper bound on ||Q_a - Q_b||_inf (kernel refresh heuristic)
  static double distance_inf_bound(const NoiseKernel& a, const NoiseKernel& b);

 private:
  double tick_ = 1.0;
  std::vector<double> f_, g_, sig2_;
  std::vector<double> d_, v_;  // factor pieces
  double c_ = 0.0, rho_ = 0.0, proj_delta_ = 0.0;
  int clamped_ = 0;
};

// Kernel breakpoints along the deterministic limit path; refactorized lazily
// when ||Q(t) - Q(last)||_inf exceeds rel_tol * ||Q||_inf. Shared read-only
// across Monte Carlo paths.
struct NoiseSchedule {
  std::vector<double> times;
  std::vector<NoiseKernel> kernels;
  const NoiseKernel& at(double t) const;
};
NoiseSchedule build_noise_schedule(const ModelSpec& spec, const LimitPath& path,
                                   double rel_tol = 1e-3);

// Driving noise of the fast system: one scalar Brownian motion W^B plus one
// standard Brownian motion per grid cell (the kernel factor is applied to the
// raw cell increments). Pluggable so oracle tests can refine/share paths.
struct FastNoise {
  virtual ~FastNoise() = default;
  virtual void draw(double t, double dt, double& dWB, std::span<double> dW_cells) = 0;
};

struct RngFastNoise final : FastNoise {
  explicit RngFastNoise(std::uint64_t seed) : rng(seed) {}
  Rng rng;
  void draw(double, double dt, double& dWB, std::span<double> dW_cells) override {
    double s = std::sqrt(dt);
    dWB = s * rng.normal();
    for (auto& w : dW_cells) w = s * rng.normal();
  }
};

struct FastSetup {
  const ModelSpec* spec = nullptr;
  const LimitPath* path = nullptr;
  GridFunction h;
  double dt_sde = 1e-3;
  NoiseSchedule schedule;
  // coefficient rows aligned with path->t, evaluated at (B0, Y_t)
  std::vector<std::vector<double>> fb_rows, fy_rows;
  std::vector<double> mu_row, sigma_row, a_row;  // a = <h, fy(B0,Y_t)>

  static FastSetup make(const ModelSpec& spec, const LimitPath& path, double dt_sde,
                        double kernel_tol = 1e-3);
};

// Euler–Maruyama integrator for the fast-regime second-order system:
//   dZB = mu dt + sigma dW^B
//   dZu = [mu du/dx + f_b ZB + f_y <Zu,h>] dt + sigma du/dx dW^B + dM
struct FastStepRecord {
  double t0, dt;
  double a;         // <h, f_y(B0, Y_t)>
  double dDh;       // realized increment of <D, h> (everything except the OU drift)
  double zy_after;  // grid-side <Zu, h> after the step
};

class FastIntegrator {
 public:
  explicit FastIntegrator(const FastSetup& s);

  void advance_to(double T, FastNoise& noise);
  void advance_to(double T, Rng& rng);

  double t() const { return t_; }
  double ZB() const { return zb_; }
  double ZY() const { return zy_; }
  const GridFunction& Zu() const { return zu_; }
  double pair(const GridFunction& phi) const;

  bool record_noise = false;  // keep per-step records for the OU reference
  const std::vector<FastStepRecord>& records() const { return recs_; }

 private:
  void step(double dt, FastNoise& noise);
  const FastSetup* s_;
  double t_ = 0, zb_ = 0, zy_ = 0;
  GridFunction zu_;
  std::vector<double> xi_, dm_, fb_, fy_, ux_;
  std::vector<FastStepRecord> recs_;
};

// Scalar Ornstein–Uhlenbeck reference for Z^Y on the same realized noise:
//   dZY = d<D,h> + ZY <h, f_y(B0,Y_t)> dt
// integrated with the exponential (integrating-factor) scheme; exact for
// constant coefficients. Returns ZY after each recorded step.
std::vector<double> zy_ou_reference(const std::vector<FastStepRecord>& recs);

// Runs independent fast-regime paths (seed = master ^ path); visit(path, probe,
// integrator) fires at each probe time in order, before further stepping.
void run_fast_paths(const FastSetup& setup, long paths, std::uint64_t master_seed,
                    std::span<const double> probe_times, int parallelism,
                    const std::function<void(long, size_t, const FastIntegrator&)>& visit);

}  // namespace lob
