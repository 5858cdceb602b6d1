#include "lobscale/clt.hpp"

#include <algorithm>
#include <cmath>

namespace lob {

double ks_critical_value(double level, long n, long m) {
  if (!(level > 0 && level < 1)) throw std::invalid_argument("ks_critical_value: level in (0,1)");
  double c = std::sqrt(-0.5 * std::log(level / 2.0));
  return c * std::sqrt(static_cast<double>(n + m) / (static_cast<double>(n) * m));
}

double KsResult::critical(double level) const { return ks_critical_value(level, n, m); }

namespace {
double ks_asymptotic_q(double lambda) {
  if (lambda < 1e-8) return 1.0;
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    double term = 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    s += term;
    if (std::abs(term) < 1e-12) break;
  }
  return std::clamp(s, 0.0, 1.0);
}
}  // namespace

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  KsResult r;
  r.statistic = d;
  r.n = static_cast<long>(a.size());
  r.m = static_cast<long>(b.size());
  double lambda = d * std::sqrt(na * nb / (na + nb));
  r.p_value = ks_asymptotic_q(lambda);
  return r;
}

double quantile_type7(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile_type7: empty sample");
  if (p <= 0) return sorted.front();
  if (p >= 1) return sorted.back();
  double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  size_t lo = static_cast<size_t>(std::floor(h));
  double w = h - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return (1.0 - w) * sorted[lo] + w * sorted[lo + 1];
}

FluctuationSample extract_fluctuations(const SimPath& sim, const LimitPath& limit,
                                       const ScalingRegime& reg, const GridFunction& h,
                                       std::span<const double> times,
                                       std::span<const GridFunction> phis) {
  if (sim.B.empty()) throw std::invalid_argument("extract_fluctuations: path has no recorded series");
  if (!phis.empty() && sim.time_u.size() != times.size())
    throw grid_mismatch_error("extract_fluctuations: path snapshots do not match requested times");
  (void)h;
  const double scale = reg.fluctuation_scale();
  FluctuationSample out;
  out.regime = reg.regime;
  out.times.assign(times.begin(), times.end());
  std::vector<double> urow(static_cast<size_t>(limit.grid.size()));
  for (size_t m = 0; m < times.size(); ++m) {
    double tt = times[m];
    long k = std::clamp<long>(static_cast<long>(std::floor(tt / reg.dt + 1e-9)), 0,
                              static_cast<long>(sim.B.size()) - 1);
    out.ZB.push_back((sim.B[static_cast<size_t>(k)] - limit.B_at(tt)) / scale);
    out.ZY.push_back((sim.Y[static_cast<size_t>(k)] - limit.Y_at(tt)) / scale);
    std::vector<double> row;
    if (!phis.empty()) {
      const GridFunction& un = sim.time_u[m];
      if (!(un.grid() == limit.grid))
        throw grid_mismatch_error("extract_fluctuations: simulator and limit grids differ");
      limit.u_row_at(tt, urow);
      for (const GridFunction& phi : phis) {
        const auto uv = un.values();
        const auto pv = phi.values();
        double s = 0.0;
        for (size_t c = 0; c < uv.size(); ++c) s += (uv[c] - urow[c]) * pv[c];
        row.push_back(limit.grid.tick * s / scale);
      }
    }
    out.pairings.push_back(std::move(row));
  }
  return out;
}

MarginalReport compare_marginals(const MarginalSamples& a, const MarginalSamples& b,
                                 const std::vector<std::string>& phi_names, long min_paths) {
  if (static_cast<long>(a.ZB.size()) < min_paths || static_cast<long>(b.ZB.size()) < min_paths)
    throw std::invalid_argument("compare_marginals: need at least " + std::to_string(min_paths) +
                                " paths per side");
  MarginalReport rep;
  rep.ks_zb = ks_two_sample(a.ZB, b.ZB);
  rep.ks_zy = ks_two_sample(a.ZY, b.ZY);
  auto moments = [](const std::vector<double>& v, double& mean, double& var) {
    double s = 0;
    for (double x : v) s += x;
    mean = s / static_cast<double>(v.size());
    double q = 0;
    for (double x : v) q += (x - mean) * (x - mean);
    var = q / std::max<double>(1.0, static_cast<double>(v.size()) - 1.0);
  };
  for (size_t p = 0; p < a.pairings.size() && p < b.pairings.size(); ++p) {
    PairingComparison pc;
    pc.name = p < phi_names.size() ? phi_names[p] : "phi" + std::to_string(p);
    double va, vb;
    moments(a.pairings[p], pc.mean_a, va);
    moments(b.pairings[p], pc.mean_b, vb);
    pc.var_a = va;
    pc.var_b = vb;
    double na = static_cast<double>(a.pairings[p].size());
    double nb = static_cast<double>(b.pairings[p].size());
    double se_mean = std::sqrt(va / na + vb / nb);
    pc.mean_z = se_mean > 0 ? (pc.mean_a - pc.mean_b) / se_mean : 0.0;
    pc.var_rel_err = vb != 0.0 ? std::abs(va - vb) / std::abs(vb) : std::abs(va);
    // asymptotic SE of a variance is var*sqrt(2/(n-1)) under normality
    double se_var = std::sqrt(2.0 * va * va / std::max(1.0, na - 1) +
                              2.0 * vb * vb / std::max(1.0, nb - 1));
    pc.var_z = se_var > 0 ? (va - vb) / se_var : 0.0;
    rep.pairings.push_back(pc);
  }
  return rep;
}

TestFunctions default_test_functions(const Grid& grid, const GridFunction& h) {
  auto bump = [](double center, double width) {
    return [center, width](double x) {
      double s = (x - center) / width;
      if (s <= -1.0 || s >= 1.0) return 0.0;
      return std::exp(1.0 - 1.0 / (1.0 - s * s));
    };
  };
  const double L = grid.truncation_bound();
  TestFunctions tf;
  struct Loc {
    double c, w;
  };
  const Loc locs[5] = {{-8.0, 2.0}, {-5.0, 2.0}, {-2.0, 2.0}, {-0.5, 1.5}, {1.5, 1.5}};
  int idx = 0;
  for (const auto& lc : locs) {
    double c = std::clamp(lc.c, -L + lc.w + grid.tick, L - lc.w - grid.tick);
    tf.fns.push_back(project_to_grid(bump(c, lc.w), grid, 16));
    tf.names.push_back("bump" + std::to_string(idx++));
  }
  tf.fns.push_back(h);
  tf.names.push_back("h");
  return tf;
}

double tick_lattice_spacing_z(const ScalingRegime& reg) {
  return reg.dx() / reg.fluctuation_scale();
}

bool preflight_lattice_ok(const ScalingRegime& reg, double level, long n, long m,
                          double* spacing_out, double* crit_out) {
  double spacing = tick_lattice_spacing_z(reg);
  double crit = ks_critical_value(level, n, m);
  if (spacing_out) *spacing_out = spacing;
  if (crit_out) *crit_out = crit;
  return spacing < 0.25 * crit;
}

}  // namespace lob
