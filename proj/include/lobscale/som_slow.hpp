#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "lobscale/fom.hpp"
#include "lobscale/grid.hpp"
#include "lobscale/model.hpp"
#include "lobscale/rng.hpp"

namespace lob {

// One coefficient field sampled along the limit path. When every row is a
// scalar multiple of a common reference profile (true for the built-in
// models), kernel pairings <prof(t_s), h(.+delta)> collapse to
// coef(s) * table(delta) with one precomputed shift table; otherwise the
// shifted inner products are evaluated directly.
struct SlowProfileField {
  std::vector<std::vector<double>> rows;
  bool rank1 = false;
  std::vector<double> coef;  // per row, when rank1
  std::vector<double> ref;   // reference profile, when rank1
  double delta_lo = 0, delta_step = 0;
  std::vector<double> h_table;  // <ref, h(.+delta)> samples, when rank1

  double h_pair_ref(double delta) const;  // table interpolation
  bool all_zero_rows() const;
};

// Precomputed slow-regime coefficients along the deterministic limit path,
// shared read-only across Monte Carlo paths.
struct SlowSetup {
  const ModelSpec* spec = nullptr;
  const LimitPath* path = nullptr;
  GridFunction h;
  double dt_sde = 1e-3;
  int history_budget = 4096;
  bool use_weak_zy = false;  // impacted paths: couple through <Zu,h> instead of the Volterra ZY

  SlowProfileField f, fb, fy, dxf;
  std::vector<double> pb_row, py_row, sigma_row;

  static SlowSetup make(const ModelSpec& spec, const LimitPath& path, double dt_sde,
                        int history_budget = 4096);
};

// Integrator for the slow-regime second-order system. Z^B is stepped by
// Euler–Maruyama with drift p_b Z^B + p_y Z^Y and volatility sigma_B(B,Y);
// Z^Y follows the Volterra representation (trapezoid over the stored history,
// kernels shifted by B_s - B_t); Z^u evolves in weak form with first-order
// upwind transport, driven by the identical Brownian increments. Derivative
// pairings use the grid central difference via discrete integration by parts.
class SlowIntegrator {
 public:
  explicit SlowIntegrator(const SlowSetup& s);

  // Restart support / sensitivity experiments: only valid before stepping.
  void set_initial_ZB(double zb);

  void advance_to(double T, Rng& rng);

  double t() const { return t_; }
  double ZB() const { return zb_; }
  double ZY() const { return zy_; }            // Volterra route
  double ZY_weak() const { return zy_weak_; }  // <Zu, h> from the weak field
  const GridFunction& Zu() const { return zu_; }
  double pair(const GridFunction& phi) const;  // <Zu, phi>

  // Volterra evaluation of <Z^u(t), phi> over the current history.
  double volterra_pair(const GridFunction& phi) const;

  size_t history_nodes() const { return nodes_.size(); }
  int history_coarsenings() const { return coarsenings_; }
  int transport_substeps_max() const { return substeps_max_; }

 private:
  struct Node {
    double t, B, zb, zy;
    double c_f, c_fb, c_fy, c_dxf;  // rank-1 coefficients
    std::vector<double> f, fb, fy, dxf;  // stored only when a field is not rank-1
  };
  void step(double dt, Rng& rng);
  void apply_pending_jumps();
  double node_h_pair(const Node& nd, const SlowProfileField& field, double c_scalar,
                     const std::vector<double>& vec, double delta) const;
  void coarsen_history();

  const SlowSetup* s_;
  double t_ = 0, zb_ = 0, zy_ = 0, zy_weak_ = 0;
  GridFunction zu_;
  std::vector<Node> nodes_;
  size_t next_jump_ = 0;
  int coarsenings_ = 0;
  int substeps_max_ = 1;
  std::vector<double> ux0_, fbrow_, fyrow_;
};

// Independent slow-regime paths; visit(path, probe, it) fires at each probe
// time (pre-jump when a trade is scheduled exactly there).
void run_slow_paths(const SlowSetup& setup, long paths, std::uint64_t master_seed,
                    std::span<const double> probe_times, int parallelism,
                    const std::function<void(long, size_t, const SlowIntegrator&)>& visit);

}  // namespace lob
