#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lobscale/model.hpp"
#include "lobscale/scaling.hpp"

namespace lob {

// Run configuration: INI-style file with [scaling], [grid], [model] and
// [experiment] sections; overridden by LOBSCALE_* environment variables, then
// by CLI flags (flag > env > file). Fully serializable: canonical() is a
// deterministic dump and hash() identifies a run.
struct RunConfig {
  // [scaling]
  double dt = 1e-3;
  double alpha = 0.4;
  double beta = 0.6;
  double horizon = 1.0;
  std::string regime = "slow";

  // [grid]
  double tick_override = 0.0;  // 0 -> dt^alpha
  double L_override = 0.0;     // 0 -> auto window

  // [model]
  std::string model = "example-3-10";
  std::map<std::string, double> model_params;

  // [experiment]
  std::string experiment = "first-order";  // first-order | fast-clt | slow-clt | liquidation
  long paths = 100;
  long mc_paths = 2000;
  std::uint64_t seed = 12345;
  std::string out_dir = "out";
  bool assert_mode = false;
  long stride = 0;
  int parallelism = 0;
  std::vector<double> dt_levels;  // sweep levels; empty -> {dt}
  double dt_sde = 2e-3;
  double solver_dt = 1e-3;
  double ci_level = 0.9;
  std::string schedule_file;          // liquidation input CSV (t,shares)
  std::string impact = "non-permanent";  // non-permanent | permanent
  double liq_total = 0.0;             // fallback uniform schedule when no file given
  long liq_slices = 10;

  ScalingRegime scaling() const;
  ModelSpec model_spec() const;
  std::string canonical() const;
  std::string hash_hex() const;
  void validate() const;  // cross-field checks with precise field paths
};

RunConfig parse_config_file(const std::string& path);
void apply_env_overrides(RunConfig& cfg);
// single "section.key=value" override (also used by the CLI layer)
void apply_override(RunConfig& cfg, const std::string& key, const std::string& value);

}  // namespace lob
