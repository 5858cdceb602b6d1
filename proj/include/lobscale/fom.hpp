#pragma once

#include <span>
#include <vector>

#include "lobscale/grid.hpp"
#include "lobscale/model.hpp"
#include "lobscale/scaling.hpp"
#include "lobscale/simulator.hpp"

namespace lob {

// Deterministic first-order trajectory: stored rows (t_i, B_i, Y_i, u(t_i),
// du/dx(t_i)) with linear interpolation between rows. Impacted paths carry
// jump metadata; rows are duplicated at a jump time (pre- then post-jump), and
// interpolation at t returns the post-jump branch.
struct LimitPath {
  Grid grid;
  double B0 = 0.0;
  std::vector<double> t, B, Y;
  std::vector<std::vector<double>> u;   // relative-frame density values per row
  std::vector<std::vector<double>> ux;  // central-difference derivative per row

  std::vector<double> jump_times;
  std::vector<double> jump_sizes;       // depth c_i removed at each jump
  std::vector<size_t> jump_rows;        // row index of the pre-jump state

  size_t rows() const { return t.size(); }
  // Largest segment start i with t[i] <= time (post-jump branch at a jump time).
  size_t segment(double time) const;
  double B_at(double time) const;
  double Y_at(double time) const;
  void u_row_at(double time, std::span<double> out) const;
  void ux_row_at(double time, std::span<double> out) const;
  GridFunction u_at(double time) const;
  GridFunction ux_at(double time) const;
  bool price_constant(double tol = 0.0) const;
};

struct FomOptions {
  double solver_dt = 1e-3;
  int store_every = 1;
};

// Method-of-characteristics solve in the absolute frame: v(t,x) = u(t, x-B_t)
// satisfies a cell-wise ODE dv/dt = f(B,Y; x-B_t); B and Y close the system.
// RK4 in time, linear interpolation for the frame reconstruction.
LimitPath solve_first_order(const ModelSpec& spec, const ScalingRegime& reg, const Grid& grid,
                            const FomOptions& opt = {});

struct DerivativeCheckReport {
  double sup_diff = 0.0;
  std::vector<double> times;
  std::vector<double> diffs;
};

// sup_t |<(T_+ - I)u^(n)(t)/dx, phi> - <du/dx(t), phi>| over the path's stride
// snapshots, against the solver's derivative.
DerivativeCheckReport discrete_derivative_check(const SimPath& sim, const LimitPath& limit,
                                                const ScalingRegime& reg,
                                                const GridFunction& phi);

}  // namespace lob
