#include "lobscale/grid.hpp"

#include <algorithm>
#include <cmath>

namespace lob {

double interp_centers(const Grid& g, std::span<const double> v, double x) {
  const double c_lo = g.center(g.lo);
  const double c_hi = g.center(g.hi);
  if (x <= c_lo || x >= c_hi) {
    // exactly at an outermost center still returns that cell's value
    if (x == c_lo) return v.front();
    if (x == c_hi) return v.back();
    return 0.0;
  }
  double s = (x - c_lo) / g.tick;
  int i = static_cast<int>(std::floor(s));
  if (i < 0) i = 0;
  if (i >= g.size() - 1) i = g.size() - 2;
  double w = s - i;
  return (1.0 - w) * v[static_cast<size_t>(i)] + w * v[static_cast<size_t>(i + 1)];
}

double GridFunction::interp_at(double x) const { return interp_centers(grid_, v_, x); }

double GridFunction::total_mass() const {
  double s = 0;
  for (double x : v_) s += x;
  return grid_.tick * s;
}

double GridFunction::shift_in_place(ShiftDir d) {
  double lost = 0;
  if (d == ShiftDir::Minus) {  // new_j = old_{j-1}; old hi cell drops
    lost = std::abs(v_.back()) * grid_.tick;
    for (size_t i = v_.size() - 1; i > 0; --i) v_[i] = v_[i - 1];
    v_[0] = 0.0;
  } else {  // Plus: new_j = old_{j+1}; old lo cell drops
    lost = std::abs(v_.front()) * grid_.tick;
    for (size_t i = 0; i + 1 < v_.size(); ++i) v_[i] = v_[i + 1];
    v_.back() = 0.0;
  }
  return lost;
}

GridFunction GridFunction::shifted_by(double delta) const {
  GridFunction out(grid_);
  for (int j = grid_.lo; j <= grid_.hi; ++j) out[j] = interp_at(grid_.center(j) + delta);
  return out;
}

GridFunction& GridFunction::operator+=(const GridFunction& o) {
  if (!(grid_ == o.grid_)) throw grid_mismatch_error("GridFunction += : grid mismatch");
  for (size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
  return *this;
}

GridFunction& GridFunction::operator*=(double a) {
  for (double& x : v_) x *= a;
  return *this;
}

double inner_product(const GridFunction& a, const GridFunction& b) {
  if (!(a.grid() == b.grid())) throw grid_mismatch_error("inner_product: grid mismatch");
  const auto va = a.values();
  const auto vb = b.values();
  double s = 0;
  for (size_t i = 0; i < va.size(); ++i) s += va[i] * vb[i];
  return a.grid().tick * s;
}

double shifted_inner_product(const GridFunction& a, const GridFunction& b, double delta) {
  const Grid& g = a.grid();
  double s = 0;
  for (int j = g.lo; j <= g.hi; ++j) {
    double aj = a[j];
    if (aj != 0.0) s += aj * b.interp_at(g.center(j) + delta);
  }
  return g.tick * s;
}

GridFunction shift(const GridFunction& u, ShiftDir d) {
  GridFunction out = u;
  out.shift_in_place(d);
  return out;
}

GridFunction central_difference(const GridFunction& u) {
  const Grid& g = u.grid();
  GridFunction out(g);
  const auto v = u.values();
  const int n = g.size();
  for (int i = 0; i < n; ++i) {
    double up = (i + 1 < n) ? v[static_cast<size_t>(i + 1)] : 0.0;
    double dn = (i - 1 >= 0) ? v[static_cast<size_t>(i - 1)] : 0.0;
    out.values()[static_cast<size_t>(i)] = (up - dn) / (2.0 * g.tick);
  }
  return out;
}

GridFunction project_to_grid(const std::function<double(double)>& fn, const Grid& grid,
                             int points_per_cell) {
  if (points_per_cell < 3) points_per_cell = 3;
  GridFunction out(grid);
  for (int j = grid.lo; j <= grid.hi; ++j) {
    double a = grid.left_edge(j);
    double s = 0;
    for (int p = 0; p < points_per_cell; ++p) {
      double x = a + (p + 0.5) * grid.tick / points_per_cell;
      double y = fn(x);
      if (!std::isfinite(y)) throw numeric_error("project_to_grid: non-finite value at x=" + std::to_string(x));
      s += y;
    }
    out[j] = s / points_per_cell;
  }
  return out;
}

GridFunction project_cell_averages(const std::function<double(double, double)>& avg,
                                   const Grid& grid) {
  GridFunction out(grid);
  for (int j = grid.lo; j <= grid.hi; ++j) {
    double y = avg(grid.left_edge(j), grid.right_edge(j));
    if (!std::isfinite(y)) throw numeric_error("project_cell_averages: non-finite cell average");
    out[j] = y;
  }
  return out;
}

}  // namespace lob
