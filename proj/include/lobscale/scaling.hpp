#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace lob {

struct config_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class Regime { Fast, Slow, FirstOrderOnly };

std::string to_string(Regime r);
Regime regime_from_string(const std::string& s);

// Event-time scaling: dv = dt, dx = dt^alpha, dp = dt^beta, T_n = floor(T/dt).
struct ScalingRegime {
  double dt = 1e-3;
  double alpha = 0.4;
  double beta = 0.6;
  double horizon = 1.0;
  Regime regime = Regime::Slow;

  double dx() const { return std::pow(dt, alpha); }
  double dp() const { return std::pow(dt, beta); }
  double dv() const { return dt; }
  long n_events() const { return static_cast<long>(std::floor(horizon / dt + 1e-9)); }

  // Whether the first-order price drift is active (critical case beta = 1-alpha).
  bool price_active() const { return std::abs(beta - (1.0 - alpha)) <= 1e-12; }

  // Rescaling Delta^(n): dt in the fast regime, dx in the slow regime.
  double fluctuation_scale() const;

  // Validates all invariants; throws config_error naming the offending field.
  static ScalingRegime make(double dt, double alpha, double beta, double horizon, Regime regime);
};

}  // namespace lob
