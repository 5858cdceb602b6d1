#include "lobscale/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace lob {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw config_error(key + ": expected a number, got '" + v + "'");
  }
}

long to_long(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw config_error(key + ": expected an integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw config_error(key + ": expected a boolean, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::istringstream is(v);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    tok = trim(tok);
    if (!tok.empty()) out.push_back(to_double(key, tok));
  }
  return out;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

void apply_override(RunConfig& c, const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (key == "scaling.dt") c.dt = to_double(key, v);
  else if (key == "scaling.alpha") c.alpha = to_double(key, v);
  else if (key == "scaling.beta") c.beta = to_double(key, v);
  else if (key == "scaling.T") c.horizon = to_double(key, v);
  else if (key == "scaling.regime") c.regime = v;
  else if (key == "grid.tick") c.tick_override = to_double(key, v);
  else if (key == "grid.L") c.L_override = to_double(key, v);
  else if (key == "model.name") c.model = v;
  else if (key.rfind("model.", 0) == 0) c.model_params[key.substr(6)] = to_double(key, v);
  else if (key == "experiment.name") c.experiment = v;
  else if (key == "experiment.paths") c.paths = to_long(key, v);
  else if (key == "experiment.mc_paths") c.mc_paths = to_long(key, v);
  else if (key == "experiment.seed") c.seed = static_cast<std::uint64_t>(to_long(key, v));
  else if (key == "experiment.out") c.out_dir = v;
  else if (key == "experiment.assert") c.assert_mode = to_bool(key, v);
  else if (key == "experiment.stride") c.stride = to_long(key, v);
  else if (key == "experiment.parallelism") c.parallelism = static_cast<int>(to_long(key, v));
  else if (key == "experiment.dt_levels") c.dt_levels = to_list(key, v);
  else if (key == "experiment.dt_sde") c.dt_sde = to_double(key, v);
  else if (key == "experiment.solver_dt") c.solver_dt = to_double(key, v);
  else if (key == "experiment.level") c.ci_level = to_double(key, v);
  else if (key == "experiment.schedule") c.schedule_file = v;
  else if (key == "experiment.impact") c.impact = v;
  else if (key == "experiment.liq_total") c.liq_total = to_double(key, v);
  else if (key == "experiment.liq_slices") c.liq_slices = to_long(key, v);
  else throw config_error(key + ": unknown configuration key");
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("config: cannot open '" + path + "'");
  RunConfig cfg;
  std::string line, section;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[' && s.back() == ']') {
      section = trim(s.substr(1, s.size() - 2));
      continue;
    }
    size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw config_error("config:" + std::to_string(line_no) + ": expected key = value");
    std::string key = trim(s.substr(0, eq));
    std::string val = trim(s.substr(eq + 1));
    if (section.empty()) throw config_error("config:" + std::to_string(line_no) +
                                            ": key outside of a [section]");
    apply_override(cfg, section + "." + key, val);
  }
  return cfg;
}

void apply_env_overrides(RunConfig& cfg) {
  static const std::pair<const char*, const char*> envs[] = {
      {"LOBSCALE_EXPERIMENT", "experiment.name"}, {"LOBSCALE_DT", "scaling.dt"},
      {"LOBSCALE_ALPHA", "scaling.alpha"},        {"LOBSCALE_BETA", "scaling.beta"},
      {"LOBSCALE_PATHS", "experiment.paths"},     {"LOBSCALE_SEED", "experiment.seed"},
      {"LOBSCALE_OUT", "experiment.out"},         {"LOBSCALE_ASSERT", "experiment.assert"},
      {"LOBSCALE_STRIDE", "experiment.stride"},   {"LOBSCALE_PARALLELISM", "experiment.parallelism"},
  };
  for (const auto& [env, key] : envs) {
    const char* v = std::getenv(env);
    if (v && *v) apply_override(cfg, key, v);
  }
}

ScalingRegime RunConfig::scaling() const {
  return ScalingRegime::make(dt, alpha, beta, horizon, regime_from_string(regime));
}

ModelSpec RunConfig::model_spec() const {
  ModelParams p;
  p.kv = model_params;
  return make_builtin_model(model, p);
}

std::string RunConfig::canonical() const {
  std::ostringstream os;
  os << "scaling.dt=" << fmt(dt) << "\nscaling.alpha=" << fmt(alpha)
     << "\nscaling.beta=" << fmt(beta) << "\nscaling.T=" << fmt(horizon)
     << "\nscaling.regime=" << regime << "\ngrid.tick=" << fmt(tick_override)
     << "\ngrid.L=" << fmt(L_override) << "\nmodel.name=" << model;
  for (const auto& [k, v] : model_params) os << "\nmodel." << k << "=" << fmt(v);
  os << "\nexperiment.name=" << experiment << "\nexperiment.paths=" << paths
     << "\nexperiment.mc_paths=" << mc_paths << "\nexperiment.seed=" << seed
     << "\nexperiment.stride=" << stride << "\nexperiment.dt_sde=" << fmt(dt_sde)
     << "\nexperiment.solver_dt=" << fmt(solver_dt) << "\nexperiment.level=" << fmt(ci_level)
     << "\nexperiment.impact=" << impact << "\nexperiment.schedule=" << schedule_file
     << "\nexperiment.liq_total=" << fmt(liq_total)
     << "\nexperiment.liq_slices=" << liq_slices << "\nexperiment.dt_levels=";
  for (size_t i = 0; i < dt_levels.size(); ++i) os << (i ? "," : "") << fmt(dt_levels[i]);
  os << "\n";
  return os.str();
}

std::string RunConfig::hash_hex() const {
  // FNV-1a 64
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : canonical()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void RunConfig::validate() const {
  ScalingRegime reg = scaling();  // validates the scaling block
  (void)model_spec();             // validates the model name/params
  if (experiment == "fast-clt") {
    if (reg.regime != Regime::Fast)
      throw config_error("experiment: fast-clt requires scaling.regime=fast (got " + regime + ")");
  } else if (experiment == "slow-clt") {
    if (reg.regime != Regime::Slow)
      throw config_error("experiment: slow-clt requires scaling.regime=slow (got " + regime + ")");
  } else if (experiment == "liquidation") {
    if (impact == "non-permanent") {
      if (reg.regime == Regime::Slow)
        throw config_error(
            "experiment.impact: non-permanent liquidation requires a constant-price regime "
            "(scaling.regime=fast or first-order-only)");
    } else if (impact == "permanent") {
      if (!reg.price_active())
        throw config_error(
            "experiment.impact: permanent liquidation requires the critical case beta = 1-alpha");
    } else {
      throw config_error("experiment.impact: expected non-permanent | permanent, got '" + impact +
                         "'");
    }
  } else if (experiment != "first-order") {
    throw config_error("experiment.name: unknown experiment '" + experiment + "'");
  }
  if (paths < 1) throw config_error("experiment.paths: must be >= 1");
  if (!(ci_level > 0 && ci_level < 1)) throw config_error("experiment.level: must lie in (0,1)");
  for (double lv : dt_levels)
    if (!(lv > 0)) throw config_error("experiment.dt_levels: levels must be positive");
}

}  // namespace lob
