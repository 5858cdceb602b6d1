#pragma once

#include <string>
#include <vector>

#include "lobscale/fom.hpp"
#include "lobscale/grid.hpp"
#include "lobscale/scaling.hpp"
#include "lobscale/simulator.hpp"

namespace lob {

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  long n = 0, m = 0;
  double critical(double level) const;
};

// Two-sample Kolmogorov–Smirnov statistic with the asymptotic p-value.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);
double ks_critical_value(double level, long n, long m);

// Type-7 empirical quantile of a sorted sample.
double quantile_type7(const std::vector<double>& sorted, double p);

// Rescaled deviations of one discrete path from the limit path, sampled at a
// fixed time grid: ZB = (B^n - B)/sqrt(Delta), ZY likewise, plus pairings
// <Zu^n, phi_m> for the configured test functions.
struct FluctuationSample {
  Regime regime = Regime::Slow;
  std::vector<double> times;
  std::vector<double> ZB, ZY;
  std::vector<std::vector<double>> pairings;  // [time][phi]
};

// The SimPath must have been run with snapshot_times == times so the u
// snapshots align (left-constant cadlag interpolation: state floor(t/dt)).
FluctuationSample extract_fluctuations(const SimPath& sim, const LimitPath& limit,
                                       const ScalingRegime& reg, const GridFunction& h,
                                       std::span<const double> times,
                                       std::span<const GridFunction> phis);

// Marginal samples of one ensemble at a single fixed time.
struct MarginalSamples {
  std::vector<double> ZB, ZY;
  std::vector<std::vector<double>> pairings;  // [phi][path]
};

struct PairingComparison {
  std::string name;
  double mean_a = 0, mean_b = 0, mean_z = 0;            // z-score of the mean gap
  double var_a = 0, var_b = 0, var_rel_err = 0, var_z = 0;
};

struct MarginalReport {
  KsResult ks_zb, ks_zy;
  std::vector<PairingComparison> pairings;
};

// Two-sided comparison; refuses ensembles smaller than min_paths.
MarginalReport compare_marginals(const MarginalSamples& a, const MarginalSamples& b,
                                 const std::vector<std::string>& phi_names,
                                 long min_paths = 500);

// Fixed test-function family: five smooth compactly supported bumps at
// staggered locations plus the kernel h itself.
struct TestFunctions {
  std::vector<GridFunction> fns;
  std::vector<std::string> names;
};
TestFunctions default_test_functions(const Grid& grid, const GridFunction& h);

// Z-unit lattice spacing of B^n and the spec preflight: spacing must stay
// below a quarter of the KS critical distance.
double tick_lattice_spacing_z(const ScalingRegime& reg);
bool preflight_lattice_ok(const ScalingRegime& reg, double level, long n, long m,
                          double* spacing_out = nullptr, double* crit_out = nullptr);

}  // namespace lob
