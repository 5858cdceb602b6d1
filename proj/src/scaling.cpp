#include "lobscale/scaling.hpp"

namespace lob {

std::string to_string(Regime r) {
  switch (r) {
    case Regime::Fast: return "fast";
    case Regime::Slow: return "slow";
    case Regime::FirstOrderOnly: return "first-order-only";
  }
  return "?";
}

Regime regime_from_string(const std::string& s) {
  if (s == "fast") return Regime::Fast;
  if (s == "slow") return Regime::Slow;
  if (s == "first-order-only" || s == "first_order_only" || s == "fom")
    return Regime::FirstOrderOnly;
  throw config_error("scaling.regime: unknown regime '" + s + "'");
}

double ScalingRegime::fluctuation_scale() const {
  switch (regime) {
    case Regime::Fast: return std::sqrt(dt);
    case Regime::Slow: return std::sqrt(dx());
    case Regime::FirstOrderOnly:
      throw config_error("fluctuation_scale: first-order-only regime has no rescaling");
  }
  return 0;
}

ScalingRegime ScalingRegime::make(double dt, double alpha, double beta, double horizon,
                                  Regime regime) {
  if (!(dt > 0)) throw config_error("scaling.dt: must be positive");
  if (!(horizon > 0)) throw config_error("scaling.T: must be positive");
  if (!(alpha > 0 && alpha < 1)) throw config_error("scaling.alpha: must lie in (0,1)");
  if (beta < 1.0 - alpha - 1e-12) throw config_error("scaling.beta: must satisfy beta >= 1 - alpha");
  ScalingRegime r{dt, alpha, beta, horizon, regime};
  if (r.n_events() < 1) throw config_error("scaling: T_n = floor(T/dt) must be >= 1");
  switch (regime) {
    case Regime::Fast:
      if (!(alpha > 0.5)) throw config_error("scaling.alpha: fast regime requires alpha in (1/2,1)");
      if (std::abs(beta - 2.0 * (1.0 - alpha)) > 1e-12)
        throw config_error("scaling.beta: fast regime requires beta = 2(1-alpha)");
      break;
    case Regime::Slow:
      if (!(alpha < 0.5)) throw config_error("scaling.alpha: slow regime requires alpha in (0,1/2)");
      if (std::abs(beta - (1.0 - alpha)) > 1e-12)
        throw config_error("scaling.beta: slow regime requires beta = 1 - alpha");
      break;
    case Regime::FirstOrderOnly:
      break;
  }
  return r;
}

}  // namespace lob
