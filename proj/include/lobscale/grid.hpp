#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lob {

struct grid_mismatch_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Uniform tick grid. Cells are labelled j = lo..hi, cell j covers the
// half-open interval (x_{j-1}, x_j] with x_j = j*tick, so step functions on
// the grid are caglad (left-continuous with right limits).
struct Grid {
  double tick = 1.0;
  int lo = 0;  // label of the leftmost cell
  int hi = 0;  // label of the rightmost cell

  Grid() = default;
  Grid(double tick_, int lo_, int hi_) : tick(tick_), lo(lo_), hi(hi_) {
    if (!(tick > 0)) throw std::invalid_argument("Grid: tick must be positive");
    if (lo >= hi) throw std::invalid_argument("Grid: lo_index must be < hi_index");
  }

  // Window (-half_width, half_width] with lo < 0 < hi.
  static Grid centered(double tick, double half_width) {
    int n = static_cast<int>(std::ceil(half_width / tick - 1e-12));
    if (n < 1) n = 1;
    return Grid(tick, -n + 1, n);
  }

  int size() const { return hi - lo + 1; }
  int index_of(int j) const { return j - lo; }
  bool contains(int j) const { return j >= lo && j <= hi; }

  // Cell containing x: the smallest j with x <= x_j.
  int cell_of(double x) const { return static_cast<int>(std::ceil(x / tick)); }

  double right_edge(int j) const { return j * tick; }
  double left_edge(int j) const { return (j - 1) * tick; }
  double center(int j) const { return (j - 0.5) * tick; }
  double window_lo() const { return (lo - 1) * tick; }
  double window_hi() const { return hi * tick; }
  double truncation_bound() const {
    return tick * std::max(std::abs(static_cast<double>(lo)), static_cast<double>(hi));
  }

  bool operator==(const Grid&) const = default;
};

enum class ShiftDir { Plus, Minus };  // T_+: f(.+tick), T_-: f(.-tick)

// Step function on a Grid: one value per cell, integral over cell j equals
// tick * values[j].
class GridFunction {
 public:
  GridFunction() = default;
  explicit GridFunction(const Grid& g) : grid_(g), v_(static_cast<size_t>(g.size()), 0.0) {}
  GridFunction(const Grid& g, std::vector<double> values) : grid_(g), v_(std::move(values)) {
    if (v_.size() != static_cast<size_t>(g.size()))
      throw std::invalid_argument("GridFunction: value count != cell count");
  }

  const Grid& grid() const { return grid_; }
  std::span<const double> values() const { return v_; }
  std::span<double> values() { return v_; }
  int size() const { return grid_.size(); }

  double operator[](int j) const { return v_[static_cast<size_t>(grid_.index_of(j))]; }
  double& operator[](int j) { return v_[static_cast<size_t>(grid_.index_of(j))]; }

  // Step evaluation; zero outside the window.
  double value_at(double x) const {
    int j = grid_.cell_of(x);
    return grid_.contains(j) ? (*this)[j] : 0.0;
  }

  // Piecewise linear through the cell centers (center_j, v_j); zero outside
  // the outermost centers. Used for fractional-tick shifts and shifted inner
  // products; functions near the window edge are ~0 by the truncation design.
  double interp_at(double x) const;

  double total_mass() const;

  // Exact one-cell shift; the value pushed past the window edge is dropped
  // and its |mass| returned.
  double shift_in_place(ShiftDir d);

  // Fractional shift by delta: w(x) = this(x + delta), linear interpolation.
  GridFunction shifted_by(double delta) const;

  GridFunction& operator+=(const GridFunction& o);
  GridFunction& operator*=(double a);

 private:
  Grid grid_;
  std::vector<double> v_;
};

// Linear interpolation through cell centers of a raw value row; zero outside
// the outermost centers.
double interp_centers(const Grid& g, std::span<const double> v, double x);

// <a,b> = tick * sum_j a_j b_j — exact quadrature for step functions.
double inner_product(const GridFunction& a, const GridFunction& b);

// tick * sum_j a_j * b(center_j + delta) with linear interpolation of b.
double shifted_inner_product(const GridFunction& a, const GridFunction& b, double delta);

GridFunction shift(const GridFunction& u, ShiftDir d);

// Central difference (v_{j+1} - v_{j-1}) / (2 tick), zero beyond the window.
GridFunction central_difference(const GridFunction& u);

// Cell-average projection via composite midpoint rule (points_per_cell >= 3).
GridFunction project_to_grid(const std::function<double(double)>& fn, const Grid& grid,
                             int points_per_cell = 8);

// Cell averages supplied exactly: avg(xlo, xhi) = (1/(xhi-xlo)) ∫ fn.
GridFunction project_cell_averages(const std::function<double(double, double)>& avg,
                                   const Grid& grid);

}  // namespace lob
