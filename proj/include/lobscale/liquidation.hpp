#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lobscale/fom.hpp"
#include "lobscale/grid.hpp"
#include "lobscale/som_fast.hpp"
#include "lobscale/som_slow.hpp"

namespace lob {

struct infeasible_trade_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LiquidationSchedule {
  std::vector<double> times;
  std::vector<double> shares;  // theta_i >= 0
  double total() const;
  void validate(double horizon) const;
  static LiquidationSchedule uniform(double X, long slices, double t0, double t1);
  static LiquidationSchedule from_csv(const std::string& path);  // rows: t,shares
};

// Smallest c >= 0 with ∫_{-c}^0 u = theta; cumulative cell sums with linear
// interpolation inside the crossing cell, 0/0 := 0 on empty cells.
double depth_for_shares(const GridFunction& u, double theta);

// ∫_{-c}^0 x u(x) dx, exact for the step function (quadratic per cell).
double book_value_integral(const GridFunction& u, double c);

struct LiquidationValue {
  double V = 0.0;
  std::vector<double> depths;  // c_i per trade
};

// V = B0 X + sum_i ∫_{-c_i}^0 x u(t_i,x) dx on a constant-price limit path.
LiquidationValue value_nonpermanent(const LiquidationSchedule& sched, const LimitPath& path);

struct ConfidenceInterval {
  double V = 0.0, lo = 0.0, hi = 0.0;
  double level = 0.9;
  long paths = 0;
  std::string regime;
};

// Eq.-style corrections sqrt(dt) * sum_i [ZB(t_i) theta_i + ∫_{-c_i}^0 x Zu dx]
// over fast-regime Monte Carlo paths; interval from type-7 quantiles.
ConfidenceInterval ci_nonpermanent(const LiquidationSchedule& sched, const LimitPath& path,
                                   const FastSetup& fast, const ScalingRegime& reg,
                                   long mc_paths, std::uint64_t seed, double level,
                                   int parallelism);

// Permanent impact: alternate depth jumps (B -= c_i; relative density shifts
// by c_i, i.e. the absolute-frame book is unchanged) with the ODE-PDE flow.
LimitPath impacted_first_order(const LiquidationSchedule& sched, const ModelSpec& spec,
                               const ScalingRegime& reg, const Grid& grid,
                               const FomOptions& opt = {});

// Liquidation value along an impacted path: sum_i ∫ (B^θ(t_i)+x) u^θ(t_i,x) dx.
LiquidationValue value_permanent(const LiquidationSchedule& sched, const LimitPath& impacted);

// Corrections sqrt(dx) * sum_i [Z^{B,θ}(t_i) theta_i + ∫_{-c_i}^0 x Z^{u,θ} dx]
// with the slow-regime steppers run along the impacted path (weak-form field,
// frame shifts at trades, pre-jump sampling).
ConfidenceInterval ci_permanent(const LiquidationSchedule& sched, const LimitPath& impacted,
                                const SlowSetup& slow, const ScalingRegime& reg, long mc_paths,
                                std::uint64_t seed, double level, int parallelism);

}  // namespace lob
