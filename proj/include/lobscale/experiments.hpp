#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "lobscale/clt.hpp"
#include "lobscale/config.hpp"
#include "lobscale/liquidation.hpp"

namespace lob {

// Orchestrated experiments shared by the CLI and the acceptance suite. Each
// returns structured results plus a JSON report; CSV emission happens in the
// CLI layer.

struct FirstOrderLevel {
  double dt = 0;
  long paths = 0, aborted = 0;
  double med_sup_B = 0, med_sup_Y = 0;
  double max_lost_mass_rel = 0;
  double deriv_check_sup = 0;  // Lemma-3.2-style discrete-derivative gap (one path)
};

struct FirstOrderResult {
  std::vector<FirstOrderLevel> levels;
  bool monotone_B = false, monotone_Y = false, deriv_monotone = false;
  // limit trajectory of the last level for emission: (t, B, Y)
  std::vector<double> limit_t, limit_B, limit_Y;
  nlohmann::json to_json() const;
};
FirstOrderResult run_first_order(const RunConfig& cfg);

struct VarianceCheck {
  std::string phi;
  double var_discrete = 0, var_limit = 0, rel_err = 0;
};

struct OuLevel {
  double dt_sde = 0;
  double med_gap = 0;
};

struct FastCltResult {
  double lattice_spacing = 0, ks_crit = 0;
  bool preflight_ok = false;
  KsResult ks_zb_T;
  std::vector<KsResult> ks_zb_marks;
  std::vector<double> marks;
  std::vector<VarianceCheck> variances;  // three bumps at T
  double kernel_psd_delta = 0;
  int kernel_clamped = 0;
  long kernel_rebuilds = 0;
  std::vector<OuLevel> ou_levels;
  std::vector<double> ou_ratios;
  bool ou_ok = false;
  long discrete_aborted = 0;
  nlohmann::json to_json() const;
};
FastCltResult run_fast_clt(const RunConfig& cfg);

struct IwLevel {
  double dt_sde = 0, tick = 0;
  double med_gap = 0, c_constant = 0;  // C = gap / (dt_sde + tick)
};

struct SlowCltResult {
  KsResult ks_zb_T, ks_zy_T;
  double ks_crit = 0;
  double lattice_spacing = 0;
  bool preflight_ok = false;
  std::vector<double> marks;
  std::vector<IwLevel> iw_levels;
  bool iw_ok = false;
  double zy_consistency_gap = 0;  // |ZY_volterra - <Zu,h>| at T, median
  long discrete_aborted = 0;
  nlohmann::json to_json() const;
};
SlowCltResult run_slow_clt(const RunConfig& cfg);

struct LiquidationResult {
  std::string impact;
  ConfidenceInterval ci;
  double coverage = 0;
  long covered = 0, total = 0;
  double width = 0;
  std::vector<double> depths;
  nlohmann::json to_json() const;
};
LiquidationResult run_liquidation(const RunConfig& cfg);

// Builds the schedule from the config (CSV file, or a uniform default worth
// 10% of the initial bid-side mass across liq_slices trades on [0, 0.9 T]).
LiquidationSchedule schedule_from_config(const RunConfig& cfg, const ModelSpec& spec);

std::uint64_t seed_stream(std::uint64_t master, std::uint64_t tag);

}  // namespace lob
