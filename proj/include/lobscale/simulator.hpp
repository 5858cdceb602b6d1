#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "lobscale/grid.hpp"
#include "lobscale/model.hpp"
#include "lobscale/rng.hpp"
#include "lobscale/scaling.hpp"

namespace lob {

struct model_validity_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EventDraw {
  enum class Kind { A, B, C };
  Kind kind = Kind::C;
  double omega = 0.0;  // C only
  double pi = 0.0;     // C only
};

// One microscopic state S_k = (B_k, u_k) with the cached volume indicator.
struct BookState {
  double B = 0.0;
  GridFunction u;
  double Y = 0.0;
  long k = 0;
  double lost_mass = 0.0;  // cumulative |mass| dropped at the window edge
  double sum_omega = 0.0;  // running sum of C-event sizes (mass bookkeeping)
};

// Partition of a single uniform draw: [0,a) -> A, [a,a+b) -> B, else C.
EventDraw::Kind classify_event(double u01, double prob_a, double prob_b);

EventDraw sample_event(const BookState& s, const ModelSpec& spec, const ScalingRegime& reg,
                       Rng& rng);

// In-place state transition; h supplies the incremental Y update.
void apply_event(BookState& s, const EventDraw& ev, const GridFunction& h,
                 const ScalingRegime& reg);

// Read-only bundle shared by all paths of one ensemble.
struct SimSetup {
  ModelSpec spec;
  ScalingRegime regime;
  Grid grid;
  GridFunction h;   // kernel projected once per run
  GridFunction u0;  // initial density projected once per run

  static SimSetup make(const ModelSpec& spec, const ScalingRegime& regime, const Grid& grid);
};

struct SimOptions {
  bool record_series = true;      // store (B_k, Y_k) for every event
  long snapshot_stride = 0;       // 0 -> about 100 snapshots per path
  std::vector<double> snapshot_times;  // extra u snapshots at state floor(t/dt)
  double abort_lost_mass_rel = 1e-9;   // abort when boundary loss exceeds this fraction
  long y_resync_every = 4096;          // full Y recomputation cadence
};

struct SimPath {
  std::vector<double> B, Y;            // index k = 0..T_n when record_series
  std::vector<long> snap_k;
  std::vector<GridFunction> snap_u;    // stride snapshots
  std::vector<GridFunction> time_u;    // snapshots at SimOptions::snapshot_times
  BookState final_state;
  double initial_mass = 0.0;
  double max_y_drift = 0.0;            // worst incremental-vs-recomputed Y gap (relative)
  bool aborted = false;
  long abort_k = -1;
};

// Deterministic given the seed; paths are independent under seed = master ^ index.
SimPath simulate_path(const SimSetup& setup, std::uint64_t seed, const SimOptions& opt = {});

// Default simulation window: [-L, L] with L = M + price excursion budget + margin.
Grid default_grid(const ModelSpec& spec, const ScalingRegime& reg, double L_override = 0.0,
                  double tick_override = 0.0);

}  // namespace lob
