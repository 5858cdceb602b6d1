#include "lobscale/fom.hpp"

#include <algorithm>
#include <cmath>

namespace lob {

size_t LimitPath::segment(double time) const {
  auto it = std::upper_bound(t.begin(), t.end(), time);
  if (it == t.begin()) return 0;
  return static_cast<size_t>(it - t.begin()) - 1;
}

double LimitPath::B_at(double time) const {
  size_t i = segment(time);
  if (i + 1 >= rows() || t[i + 1] <= t[i]) return B[i];
  double w = (time - t[i]) / (t[i + 1] - t[i]);
  w = std::clamp(w, 0.0, 1.0);
  return (1 - w) * B[i] + w * B[i + 1];
}

double LimitPath::Y_at(double time) const {
  size_t i = segment(time);
  if (i + 1 >= rows() || t[i + 1] <= t[i]) return Y[i];
  double w = (time - t[i]) / (t[i + 1] - t[i]);
  w = std::clamp(w, 0.0, 1.0);
  return (1 - w) * Y[i] + w * Y[i + 1];
}

void LimitPath::u_row_at(double time, std::span<double> out) const {
  size_t i = segment(time);
  if (i + 1 >= rows() || t[i + 1] <= t[i]) {
    std::copy(u[i].begin(), u[i].end(), out.begin());
    return;
  }
  double w = std::clamp((time - t[i]) / (t[i + 1] - t[i]), 0.0, 1.0);
  for (size_t c = 0; c < u[i].size(); ++c) out[c] = (1 - w) * u[i][c] + w * u[i + 1][c];
}

void LimitPath::ux_row_at(double time, std::span<double> out) const {
  size_t i = segment(time);
  if (i + 1 >= rows() || t[i + 1] <= t[i]) {
    std::copy(ux[i].begin(), ux[i].end(), out.begin());
    return;
  }
  double w = std::clamp((time - t[i]) / (t[i + 1] - t[i]), 0.0, 1.0);
  for (size_t c = 0; c < ux[i].size(); ++c) out[c] = (1 - w) * ux[i][c] + w * ux[i + 1][c];
}

GridFunction LimitPath::u_at(double time) const {
  GridFunction out(grid);
  u_row_at(time, out.values());
  return out;
}

GridFunction LimitPath::ux_at(double time) const {
  GridFunction out(grid);
  ux_row_at(time, out.values());
  return out;
}

bool LimitPath::price_constant(double tol) const {
  for (double b : B)
    if (std::abs(b - B0) > tol) return false;
  return true;
}

// ---------------------------------------------------------------------------
// First-order solver
// ---------------------------------------------------------------------------

namespace {

struct FomSystem {
  const ModelSpec* spec;
  const Grid* grid;
  const GridFunction* h;
  bool price_active;

  // Y = <h, u(t)> = tick sum_j h(center_j - delta) v_j in the absolute frame.
  // The kernel is evaluated analytically at the shifted centers: linear
  // interpolation of v here would put kinks into the ODE right-hand side and
  // spoil the RK4 order in time.
  double y_of(double b, std::span<const double> v) const {
    const Grid& g = *grid;
    double delta = b - spec->B0;
    double s = 0;
    for (int j = g.lo; j <= g.hi; ++j) {
      double vi = v[static_cast<size_t>(g.index_of(j))];
      if (vi != 0.0) s += spec->h(g.center(j) - delta) * vi;
    }
    return g.tick * s;
  }

  // dB and dv for state (b, v); Y is evaluated from the stage state.
  void deriv(double b, std::span<const double> v, double& dB, std::span<double> dv) const {
    const Grid& g = *grid;
    double y = y_of(b, v);
    dB = price_active ? spec->p_bma(b, y) : 0.0;
    double shift = spec->B0 - b;  // x_abs - B_t = center_j + B0 - b
    for (int j = g.lo; j <= g.hi; ++j) {
      double x = shift == 0.0 ? g.center(j) : g.center(j) + shift;
      double val = spec->f(b, y, x);
      if (!std::isfinite(val))
        throw numeric_error("solve_first_order: non-finite f at x=" + std::to_string(x));
      dv[static_cast<size_t>(g.index_of(j))] = val;
    }
  }
};

}  // namespace

LimitPath solve_first_order(const ModelSpec& spec, const ScalingRegime& reg, const Grid& grid,
                            const FomOptions& opt) {
  const int n = grid.size();
  LimitPath out;
  out.grid = grid;
  out.B0 = spec.B0;

  GridFunction h = spec.h_on(grid);
  FomSystem sys{&spec, &grid, &h, reg.price_active()};

  double b = spec.B0;
  GridFunction u0 = spec.u0_on(grid);
  std::vector<double> v(u0.values().begin(), u0.values().end());

  const double T = reg.horizon;
  long steps = std::max<long>(1, static_cast<long>(std::ceil(T / opt.solver_dt - 1e-9)));
  double dt = T / static_cast<double>(steps);

  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n), urow(n);
  double kb1, kb2, kb3, kb4;

  auto store = [&](double time) {
    out.t.push_back(time);
    out.B.push_back(b);
    // reconstruct the relative frame u(t, x) = v(t, x + B_t)
    double delta = b - spec.B0;
    if (delta == 0.0) {
      std::copy(v.begin(), v.end(), urow.begin());
    } else {
      for (int j = grid.lo; j <= grid.hi; ++j)
        urow[static_cast<size_t>(grid.index_of(j))] = interp_centers(grid, v, grid.center(j) + delta);
    }
    out.u.push_back(urow);
    std::vector<double> ux(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      double up = i + 1 < n ? urow[static_cast<size_t>(i + 1)] : 0.0;
      double dn = i - 1 >= 0 ? urow[static_cast<size_t>(i - 1)] : 0.0;
      ux[static_cast<size_t>(i)] = (up - dn) / (2.0 * grid.tick);
    }
    out.ux.push_back(std::move(ux));
    double y = 0;
    const auto hv = h.values();
    for (int i = 0; i < n; ++i) y += hv[static_cast<size_t>(i)] * urow[static_cast<size_t>(i)];
    out.Y.push_back(grid.tick * y);
  };

  store(0.0);
  for (long s = 1; s <= steps; ++s) {
    sys.deriv(b, v, kb1, k1);
    for (int i = 0; i < n; ++i) tmp[i] = v[i] + 0.5 * dt * k1[i];
    sys.deriv(b + 0.5 * dt * kb1, tmp, kb2, k2);
    for (int i = 0; i < n; ++i) tmp[i] = v[i] + 0.5 * dt * k2[i];
    sys.deriv(b + 0.5 * dt * kb2, tmp, kb3, k3);
    for (int i = 0; i < n; ++i) tmp[i] = v[i] + dt * k3[i];
    sys.deriv(b + dt * kb3, tmp, kb4, k4);
    b += dt / 6.0 * (kb1 + 2 * kb2 + 2 * kb3 + kb4);
    for (int i = 0; i < n; ++i) v[i] += dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    if (s % opt.store_every == 0 || s == steps) store(static_cast<double>(s) * dt);
  }
  return out;
}

DerivativeCheckReport discrete_derivative_check(const SimPath& sim, const LimitPath& limit,
                                                const ScalingRegime& reg,
                                                const GridFunction& phi) {
  if (!(limit.grid == phi.grid()))
    throw grid_mismatch_error("discrete_derivative_check: phi grid != limit grid");
  DerivativeCheckReport rep;
  std::vector<double> ux(static_cast<size_t>(limit.grid.size()));
  for (size_t s = 0; s < sim.snap_k.size(); ++s) {
    const GridFunction& un = sim.snap_u[s];
    if (!(un.grid() == limit.grid))
      throw grid_mismatch_error("discrete_derivative_check: simulator grid != limit grid");
    double time = static_cast<double>(sim.snap_k[s]) * reg.dt;
    GridFunction fwd = shift(un, ShiftDir::Plus);  // (T_+ u)(x) = u(x + dx)
    double lhs = (inner_product(fwd, phi) - inner_product(un, phi)) / reg.dx();
    limit.ux_row_at(time, ux);
    double rhs = 0;
    const auto pv = phi.values();
    for (size_t i = 0; i < ux.size(); ++i) rhs += ux[i] * pv[i];
    rhs *= limit.grid.tick;
    double d = std::abs(lhs - rhs);
    rep.times.push_back(time);
    rep.diffs.push_back(d);
    rep.sup_diff = std::max(rep.sup_diff, d);
  }
  return rep;
}

}  // namespace lob
