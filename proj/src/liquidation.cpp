#include "lobscale/liquidation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lobscale/clt.hpp"
#include "lobscale/parallel.hpp"

namespace lob {

double LiquidationSchedule::total() const {
  double s = 0;
  for (double x : shares) s += x;
  return s;
}

void LiquidationSchedule::validate(double horizon) const {
  if (times.size() != shares.size())
    throw std::invalid_argument("schedule: times/shares length mismatch");
  for (size_t i = 0; i < times.size(); ++i) {
    if (shares[i] < 0) throw std::invalid_argument("schedule: negative share count at row " +
                                                   std::to_string(i));
    if (times[i] < 0 || times[i] > horizon)
      throw std::invalid_argument("schedule: trade time outside [0,T] at row " + std::to_string(i));
    if (i > 0 && times[i] < times[i - 1])
      throw std::invalid_argument("schedule: times must be nondecreasing");
  }
}

LiquidationSchedule LiquidationSchedule::uniform(double X, long slices, double t0, double t1) {
  LiquidationSchedule s;
  for (long i = 0; i < slices; ++i) {
    s.times.push_back(slices == 1 ? t0 : t0 + (t1 - t0) * static_cast<double>(i) / (slices - 1));
    s.shares.push_back(X / static_cast<double>(slices));
  }
  return s;
}

LiquidationSchedule LiquidationSchedule::from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("schedule: cannot open " + path);
  LiquidationSchedule s;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream row(line);
    std::string a, b;
    if (!std::getline(row, a, ',') || !std::getline(row, b))
      throw std::runtime_error("schedule: malformed row '" + line + "'");
    try {
      s.times.push_back(std::stod(a));
      s.shares.push_back(std::stod(b));
    } catch (const std::exception&) {
      if (s.times.empty() && a.find_first_of("0123456789") == std::string::npos)
        continue;  // header row
      throw std::runtime_error("schedule: malformed row '" + line + "'");
    }
  }
  return s;
}

double depth_for_shares(const GridFunction& u, double theta) {
  if (theta < 0) throw std::invalid_argument("depth_for_shares: negative share count");
  if (theta == 0) return 0.0;
  const Grid& g = u.grid();
  if (g.hi < 0 || g.lo > 0)
    throw infeasible_trade_error("depth_for_shares: grid does not cover x <= 0");
  double c0 = 0.0;   // depth walked so far
  double m0 = 0.0;   // cumulative integral up to -c0
  for (int j = 0; j >= g.lo; --j) {
    double uj = u[j];
    double r = theta - m0;
    if (uj != 0.0) {
      double cd = r / uj;
      if (cd >= 0.0 && cd <= g.tick) return c0 + cd;
    } else if (r == 0.0) {
      return c0;  // 0/0 := 0
    }
    m0 += g.tick * uj;
    c0 += g.tick;
  }
  if (theta - m0 == 0.0) return c0;
  throw infeasible_trade_error("depth_for_shares: requested " + std::to_string(theta) +
                               " shares but only " + std::to_string(m0) +
                               " available on x <= 0");
}

double book_value_integral(const GridFunction& u, double c) {
  if (c <= 0) return 0.0;
  const Grid& g = u.grid();
  double s = 0.0;
  for (int j = 0; j >= g.lo; --j) {
    double a = std::max(g.left_edge(j), -c);
    double b = std::min(g.right_edge(j), 0.0);
    if (b <= a) break;
    s += u[j] * 0.5 * (b * b - a * a);
  }
  // portion of [-c,0] below the window contributes nothing (u = 0 there)
  return s;
}

LiquidationValue value_nonpermanent(const LiquidationSchedule& sched, const LimitPath& path) {
  if (!path.price_constant(1e-12))
    throw std::invalid_argument(
        "value_nonpermanent: limit path must have constant price (fast / first-order regime)");
  LiquidationValue out;
  out.V = path.B0 * sched.total();
  for (size_t i = 0; i < sched.times.size(); ++i) {
    GridFunction u = path.u_at(sched.times[i]);
    double c;
    try {
      c = depth_for_shares(u, sched.shares[i]);
    } catch (const infeasible_trade_error& e) {
      throw infeasible_trade_error("trade " + std::to_string(i) + ": " + e.what());
    }
    out.depths.push_back(c);
    out.V += book_value_integral(u, c);
  }
  return out;
}

namespace {

ConfidenceInterval interval_from_corrections(double V, std::vector<double> corr, double scale,
                                             double level, const char* regime) {
  if (!(level > 0 && level < 1))
    throw std::invalid_argument("confidence level must lie in (0,1)");
  std::vector<double> vals(corr.size());
  for (size_t i = 0; i < corr.size(); ++i) vals[i] = V + scale * corr[i];
  std::sort(vals.begin(), vals.end());
  ConfidenceInterval ci;
  ci.V = V;
  ci.level = level;
  ci.paths = static_cast<long>(vals.size());
  ci.lo = quantile_type7(vals, 0.5 * (1.0 - level));
  ci.hi = quantile_type7(vals, 0.5 * (1.0 + level));
  ci.regime = regime;
  return ci;
}

}  // namespace

ConfidenceInterval ci_nonpermanent(const LiquidationSchedule& sched, const LimitPath& path,
                                   const FastSetup& fast, const ScalingRegime& reg,
                                   long mc_paths, std::uint64_t seed, double level,
                                   int parallelism) {
  LiquidationValue base = value_nonpermanent(sched, path);
  std::vector<double> corr(static_cast<size_t>(mc_paths), 0.0);
  run_fast_paths(fast, mc_paths, seed, sched.times, parallelism,
                 [&](long p, size_t i, const FastIntegrator& it) {
                   double j = book_value_integral(it.Zu(), base.depths[i]);
                   corr[static_cast<size_t>(p)] += it.ZB() * sched.shares[i] + j;
                 });
  return interval_from_corrections(base.V, std::move(corr), std::sqrt(reg.dt), level,
                                   "non-permanent");
}

LimitPath impacted_first_order(const LiquidationSchedule& sched, const ModelSpec& spec,
                               const ScalingRegime& reg, const Grid& grid,
                               const FomOptions& opt) {
  sched.validate(reg.horizon);
  if (sched.times.empty()) return solve_first_order(spec, reg, grid, opt);
  if (!reg.price_active())
    throw config_error(
        "impacted_first_order: permanent impact requires the critical case beta = 1 - alpha");

  // Piecewise solve: between trades the absolute-frame density obeys the same
  // cell ODE; at a trade the absolute frame is unchanged and B jumps by -c_i.
  LimitPath out;
  out.grid = grid;
  out.B0 = spec.B0;
  GridFunction h = spec.h_on(grid);
  GridFunction u0g = spec.u0_on(grid);
  const int n = grid.size();
  std::vector<double> v(u0g.values().begin(), u0g.values().end());
  double b = spec.B0;

  auto push_row = [&](double time) {
    out.t.push_back(time);
    out.B.push_back(b);
    std::vector<double> urow(static_cast<size_t>(n));
    double delta = b - spec.B0;
    for (int j = grid.lo; j <= grid.hi; ++j) {
      size_t idx = static_cast<size_t>(grid.index_of(j));
      urow[idx] = delta == 0.0 ? v[idx] : interp_centers(grid, v, grid.center(j) + delta);
    }
    std::vector<double> ux(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      double up = i + 1 < n ? urow[static_cast<size_t>(i + 1)] : 0.0;
      double dn = i - 1 >= 0 ? urow[static_cast<size_t>(i - 1)] : 0.0;
      ux[static_cast<size_t>(i)] = (up - dn) / (2.0 * grid.tick);
    }
    double y = 0;
    const auto hv = h.values();
    for (int i = 0; i < n; ++i) y += hv[static_cast<size_t>(i)] * urow[static_cast<size_t>(i)];
    out.Y.push_back(grid.tick * y);
    out.u.push_back(std::move(urow));
    out.ux.push_back(std::move(ux));
  };

  // RK4 on (b, v) between breakpoints; identical scheme to solve_first_order.
  auto rk4_until = [&](double t_from, double t_to) {
    if (t_to <= t_from) return;
    long steps = std::max<long>(1, static_cast<long>(std::ceil((t_to - t_from) / opt.solver_dt - 1e-9)));
    double dt = (t_to - t_from) / static_cast<double>(steps);
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
    double kb1, kb2, kb3, kb4;
    auto deriv = [&](double bb, std::span<const double> vv, double& dB, std::span<double> dv) {
      double delta = bb - spec.B0;
      double y = 0;
      const auto hv = h.values();
      (void)hv;
      for (int j = grid.lo; j <= grid.hi; ++j) {
        size_t idx = static_cast<size_t>(grid.index_of(j));
        if (vv[idx] != 0.0) y += spec.h(grid.center(j) - delta) * vv[idx];
      }
      y *= grid.tick;
      dB = spec.p_bma(bb, y);
      for (int j = grid.lo; j <= grid.hi; ++j)
        dv[static_cast<size_t>(grid.index_of(j))] = spec.f(bb, y, grid.center(j) + spec.B0 - bb);
    };
    for (long s = 0; s < steps; ++s) {
      deriv(b, v, kb1, k1);
      for (int i = 0; i < n; ++i) tmp[i] = v[i] + 0.5 * dt * k1[i];
      deriv(b + 0.5 * dt * kb1, tmp, kb2, k2);
      for (int i = 0; i < n; ++i) tmp[i] = v[i] + 0.5 * dt * k2[i];
      deriv(b + 0.5 * dt * kb2, tmp, kb3, k3);
      for (int i = 0; i < n; ++i) tmp[i] = v[i] + dt * k3[i];
      deriv(b + dt * kb3, tmp, kb4, k4);
      b += dt / 6.0 * (kb1 + 2 * kb2 + 2 * kb3 + kb4);
      for (int i = 0; i < n; ++i) v[i] += dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
      push_row(t_from + (s + 1) * dt);
    }
  };

  push_row(0.0);
  double t_now = 0.0;
  for (size_t i = 0; i < sched.times.size(); ++i) {
    rk4_until(t_now, sched.times[i]);
    t_now = sched.times[i];
    if (out.t.empty() || out.t.back() < t_now) push_row(t_now);
    // pre-jump row is the last stored row
    GridFunction upre(grid, out.u.back());
    double c;
    try {
      c = depth_for_shares(upre, sched.shares[i]);
    } catch (const infeasible_trade_error& e) {
      throw infeasible_trade_error("trade " + std::to_string(i) + ": " + e.what());
    }
    out.jump_times.push_back(t_now);
    out.jump_sizes.push_back(c);
    out.jump_rows.push_back(out.rows() - 1);
    b -= c;  // absolute-frame v unchanged; the relative frame shifts with B
    push_row(t_now);
  }
  rk4_until(t_now, reg.horizon);
  return out;
}

LiquidationValue value_permanent(const LiquidationSchedule& sched, const LimitPath& impacted) {
  if (impacted.jump_rows.size() != sched.times.size())
    throw std::invalid_argument("value_permanent: impacted path does not match the schedule");
  LiquidationValue out;
  for (size_t i = 0; i < sched.times.size(); ++i) {
    size_t row = impacted.jump_rows[i];
    GridFunction u(impacted.grid, impacted.u[row]);
    double c = impacted.jump_sizes[i];
    out.depths.push_back(c);
    out.V += impacted.B[row] * sched.shares[i] + book_value_integral(u, c);
  }
  return out;
}

ConfidenceInterval ci_permanent(const LiquidationSchedule& sched, const LimitPath& impacted,
                                const SlowSetup& slow, const ScalingRegime& reg, long mc_paths,
                                std::uint64_t seed, double level, int parallelism) {
  LiquidationValue base = value_permanent(sched, impacted);
  std::vector<double> corr(static_cast<size_t>(mc_paths), 0.0);
  run_slow_paths(slow, mc_paths, seed, sched.times, parallelism,
                 [&](long p, size_t i, const SlowIntegrator& it) {
                   double j = book_value_integral(it.Zu(), base.depths[i]);
                   corr[static_cast<size_t>(p)] += it.ZB() * sched.shares[i] + j;
                 });
  return interval_from_corrections(base.V, std::move(corr), std::sqrt(reg.dx()), level,
                                   "permanent");
}

}  // namespace lob
