#pragma once

#include <functional>
#include <map>
#include <string>

#include "lobscale/grid.hpp"
#include "lobscale/rng.hpp"
#include "lobscale/scaling.hpp"

namespace lob {

using Coefficient = std::function<double(double b, double y)>;
using FieldFn = std::function<double(double b, double y, double x)>;
using CellAvgFn = std::function<double(double b, double y, double xlo, double xhi)>;
using ProfileFn = std::function<double(double x)>;
using SamplerFn = std::function<double(double b, double y, Rng& rng)>;

// Coefficient bundle of one model: event intensities, conditional moment
// fields, the volume-indicator kernel, samplers and the initial state.
// All callables are shared read-only across worker threads.
struct ModelSpec {
  std::string name;
  double M = 1.0;   // a.s. bound for |omega|, |pi|; also bounds u0 and its support
  double B0 = 0.0;

  Coefficient pA, pB;   // limit price-move intensities, values in [0,1]
  Coefficient p_diff;   // fast regime: rescaled limit of p^(n),B - p^(n),A (may be empty)
  Coefficient pb, py;   // partials of p^{B-A} = pB - pA; empty -> central differences

  FieldFn f;        // first conditional moment density f(b,y;x)
  FieldFn fb, fy;   // partials in b and y; empty -> central differences
  FieldFn g;        // second conditional moment density (may be empty outside fast regime)
  CellAvgFn f_avg, g_avg;  // exact cell averages when available

  ProfileFn h;        // volume indicator kernel, support in x <= 0
  ProfileFn h_prime;  // analytic derivative (diagnostics)
  ProfileFn u0;       // initial relative volume density, in [0,M], support in [-M,M]

  SamplerFn sample_omega, sample_pi;

  // Discrete-model intensities p^(n),I. Defaults: pA_n = pA; pB_n = pB plus the
  // critical-case tilt dt^(alpha-1/2) * p_diff in the fast regime.
  double pA_n(double b, double y, const ScalingRegime& reg) const;
  double pB_n(double b, double y, const ScalingRegime& reg) const;

  double p_bma(double b, double y) const { return pB(b, y) - pA(b, y); }

  // Partials with central-difference fallback (step 1e-5 * (1 + |arg|)).
  double pb_at(double b, double y) const;
  double py_at(double b, double y) const;
  double fb_at(double b, double y, double x) const;
  double fy_at(double b, double y, double x) const;

  // Cell-average grid projections (exact when *_avg is supplied).
  GridFunction f_on(const Grid& g, double b, double y) const;
  GridFunction g_on(const Grid& g, double b, double y) const;
  GridFunction fb_on(const Grid& g, double b, double y) const;
  GridFunction fy_on(const Grid& g, double b, double y) const;
  GridFunction h_on(const Grid& g) const;
  GridFunction u0_on(const Grid& g) const;

  void validate() const;  // throws config_error naming the missing/invalid field
};

struct ModelParams {
  std::map<std::string, double> kv;
  double get(const std::string& key, double dflt) const {
    auto it = kv.find(key);
    return it == kv.end() ? dflt : it->second;
  }
};

// Built-in model specs:
//   "example-3-10"  — slow/first-order book: exp-tail kernel h, cubed-volume
//                     placement bias, quartic placement density on [-10,10]
//   "example-fast"  — fast-regime variant with symmetric limit intensities and
//                     the critical discrete tilt
//   "constant-test" — constant coefficients for exactness and calibration tests
ModelSpec make_builtin_model(const std::string& name, const ModelParams& params = {});

double normal_cdf(double y);
double normal_pdf(double y);

}  // namespace lob
