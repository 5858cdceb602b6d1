#include "lobscale/simulator.hpp"

#include <algorithm>
#include <cmath>

namespace lob {

EventDraw::Kind classify_event(double u01, double prob_a, double prob_b) {
  if (u01 < prob_a) return EventDraw::Kind::A;
  if (u01 < prob_a + prob_b) return EventDraw::Kind::B;
  return EventDraw::Kind::C;
}

EventDraw sample_event(const BookState& s, const ModelSpec& spec, const ScalingRegime& reg,
                       Rng& rng) {
  const double dp = reg.dp();
  const double pa = dp * spec.pA_n(s.B, s.Y, reg);
  const double pb = dp * spec.pB_n(s.B, s.Y, reg);
  if (pa + pb > 1.0)
    throw model_validity_error("event probabilities overflow: dp*(pA+pB) = " +
                               std::to_string(pa + pb) + " > 1");
  EventDraw ev;
  ev.kind = classify_event(rng.uniform01(), pa, pb);
  if (ev.kind == EventDraw::Kind::C) {
    ev.omega = spec.sample_omega(s.B, s.Y, rng);
    ev.pi = spec.sample_pi(s.B, s.Y, rng);
  }
  return ev;
}

void apply_event(BookState& s, const EventDraw& ev, const GridFunction& h,
                 const ScalingRegime& reg) {
  const Grid& grid = s.u.grid();
  switch (ev.kind) {
    case EventDraw::Kind::A: {
      s.B -= reg.dx();
      s.lost_mass += s.u.shift_in_place(ShiftDir::Minus);
      s.Y = inner_product(h, s.u);
      break;
    }
    case EventDraw::Kind::B: {
      s.B += reg.dx();
      s.lost_mass += s.u.shift_in_place(ShiftDir::Plus);
      s.Y = inner_product(h, s.u);
      break;
    }
    case EventDraw::Kind::C: {
      int j = grid.cell_of(ev.pi);
      if (grid.contains(j)) {
        s.u[j] += reg.dv() * ev.omega / reg.dx();
        s.Y += h[j] * reg.dv() * ev.omega;  // tick * h_j * dv*omega/dx with tick = dx
      } else {
        s.lost_mass += reg.dv() * std::abs(ev.omega);
      }
      s.sum_omega += ev.omega;
      break;
    }
  }
  s.k += 1;
}

SimSetup SimSetup::make(const ModelSpec& spec, const ScalingRegime& regime, const Grid& grid) {
  spec.validate();
  if (std::abs(grid.tick - regime.dx()) > 1e-12 * regime.dx())
    throw config_error("simulator grid tick must equal dx = dt^alpha");
  SimSetup su{spec, regime, grid, spec.h_on(grid), spec.u0_on(grid)};
  return su;
}

SimPath simulate_path(const SimSetup& setup, std::uint64_t seed, const SimOptions& opt) {
  const ScalingRegime& reg = setup.regime;
  const long T_n = reg.n_events();
  Rng rng(seed);

  SimPath out;
  BookState s;
  s.B = setup.spec.B0;
  s.u = setup.u0;
  s.Y = inner_product(setup.h, s.u);
  out.initial_mass = s.u.total_mass();

  long stride = opt.snapshot_stride;
  if (stride <= 0) stride = std::max<long>(1, T_n / 100);

  // requested time snapshots -> event indices floor(t/dt), kept sorted
  std::vector<long> want_k;
  want_k.reserve(opt.snapshot_times.size());
  for (double t : opt.snapshot_times)
    want_k.push_back(std::clamp<long>(static_cast<long>(std::floor(t / reg.dt + 1e-9)), 0, T_n));
  out.time_u.resize(want_k.size());

  if (opt.record_series) {
    out.B.reserve(T_n + 1);
    out.Y.reserve(T_n + 1);
  }
  const double abort_mass = opt.abort_lost_mass_rel * std::max(out.initial_mass, 1e-300);

  auto record = [&](long k) {
    if (opt.record_series) {
      out.B.push_back(s.B);
      out.Y.push_back(s.Y);
    }
    if (k % stride == 0 || k == T_n) {
      out.snap_k.push_back(k);
      out.snap_u.push_back(s.u);
    }
    for (size_t m = 0; m < want_k.size(); ++m)
      if (want_k[m] == k) out.time_u[m] = s.u;
  };

  record(0);
  for (long k = 1; k <= T_n; ++k) {
    EventDraw ev = sample_event(s, setup.spec, reg, rng);
    apply_event(s, ev, setup.h, reg);
    if (opt.y_resync_every > 0 && k % opt.y_resync_every == 0) {
      double y_full = inner_product(setup.h, s.u);
      double drift = std::abs(s.Y - y_full) / std::max(1.0, std::abs(y_full));
      out.max_y_drift = std::max(out.max_y_drift, drift);
      s.Y = y_full;
    }
    record(k);
    if (s.lost_mass > abort_mass) {
      out.aborted = true;
      out.abort_k = k;
      break;
    }
  }
  double y_full = inner_product(setup.h, s.u);
  out.max_y_drift = std::max(out.max_y_drift,
                             std::abs(s.Y - y_full) / std::max(1.0, std::abs(y_full)));
  s.Y = y_full;
  out.final_state = std::move(s);
  return out;
}

Grid default_grid(const ModelSpec& spec, const ScalingRegime& reg, double L_override,
                  double tick_override) {
  double tick = tick_override > 0 ? tick_override : reg.dx();
  double L = L_override;
  if (L <= 0) {
    // |p^B - p^A| <= 1 bounds the first-order excursion by T; one extra unit
    // covers fluctuations, five ticks cover shift slack.
    double excursion = reg.price_active() ? reg.horizon : 0.25;
    L = spec.M + excursion + 1.0 + 5.0 * tick;
  }
  return Grid::centered(tick, L);
}

}  // namespace lob
