#include "g2t/config.hpp"

#include "g2t/scene_io.hpp"

namespace g2t {

namespace {

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "1" || v == "true" || v == "on") return true;
  if (v == "0" || v == "false" || v == "off") return false;
  throw UsageError("setting '" + key + "' expects a boolean, got '" + v + "'");
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw UsageError("setting '" + key + "' expects a number, got '" + v + "'");
  }
}

long parse_long(const std::string& v, const std::string& key) {
  try {
    size_t used = 0;
    const long n = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw UsageError("setting '" + key + "' expects an integer, got '" + v + "'");
  }
}

}  // namespace

void apply_setting(TrainConfig& cfg, const std::string& key,
                   const std::string& value) {
  if (key == "seed") cfg.seed = static_cast<uint64_t>(parse_long(value, key));
  else if (key == "iters") cfg.iters = parse_long(value, key);
  else if (key == "stride") cfg.stride = static_cast<int>(parse_long(value, key));
  else if (key == "iters_kf") cfg.iters_kf = static_cast<int>(parse_long(value, key));
  else if (key == "iters_cand") cfg.iters_cand = static_cast<int>(parse_long(value, key));
  else if (key == "kf_only") cfg.kf_only = parse_bool(value, key);
  else if (key == "no_budget") cfg.no_budget = parse_bool(value, key);
  else if (key == "use_priors") cfg.use_priors = parse_bool(value, key);
  else if (key == "cand_update_opacity") cfg.cand_update_opacity = parse_bool(value, key);
  else if (key == "threads") cfg.threads = static_cast<int>(parse_long(value, key));
  else if (key == "lr") cfg.lr = parse_double(value, key);
  else if (key == "init_points") cfg.init_points = static_cast<int>(parse_long(value, key));
  else if (key == "holdout") cfg.holdout = static_cast<int>(parse_long(value, key));
  else if (key == "checkpoint_interval") cfg.checkpoint_interval = static_cast<int>(parse_long(value, key));
  else if (key == "t_sigma_min") cfg.t_sigma_min = parse_double(value, key);
  else if (key == "sh_degree") cfg.sh_degree = static_cast<int>(parse_long(value, key));
  else if (key == "lambda_si0") cfg.sched.lambda_si0 = parse_double(value, key);
  else if (key == "lambda_grad0") cfg.sched.lambda_grad0 = parse_double(value, key);
  else if (key == "t_warm") cfg.sched.t_warm = static_cast<int>(parse_long(value, key));
  else if (key == "w_max") cfg.sched.w_max = parse_double(value, key);
  else if (key == "lambda_dssim") cfg.sched.lambda_dssim = parse_double(value, key);
  else if (key == "beta") cfg.sched.beta = parse_double(value, key);
  else if (key == "epsilon") cfg.sched.epsilon = parse_double(value, key);
  else if (key == "lambda_ent") cfg.sched.lambda_ent = parse_double(value, key);
  else if (key == "lambda_vel") cfg.sched.lambda_vel = parse_double(value, key);
  else if (key == "k_nn") cfg.sched.k_nn = static_cast<int>(parse_long(value, key));
  else if (key == "vel_subsample") cfg.sched.vel_subsample = static_cast<int>(parse_long(value, key));
  else if (key == "g_max") cfg.budget.g_max = static_cast<int>(parse_long(value, key));
  else if (key == "densify_grad_threshold") cfg.budget.densify_grad_threshold = parse_double(value, key);
  else if (key == "prune_opacity_threshold") cfg.budget.prune_opacity_threshold = parse_double(value, key);
  else if (key == "densify_interval") cfg.budget.densify_interval = static_cast<int>(parse_long(value, key));
  else throw UsageError("unknown setting '" + key + "'");
}

TrainConfig load_train_config(const std::string& config_path,
                              const std::vector<std::string>& overrides) {
  TrainConfig cfg;
  if (!config_path.empty())
    for (const auto& [k, v] : read_key_values(config_path))
      apply_setting(cfg, k, v);
  for (const std::string& ov : overrides) {
    const size_t eq = ov.find('=');
    if (eq == std::string::npos || eq == 0)
      throw UsageError("--set expects key=value, got '" + ov + "'");
    apply_setting(cfg, ov.substr(0, eq), ov.substr(eq + 1));
  }
  validate(cfg);
  return cfg;
}

void validate(const TrainConfig& cfg) {
  if (cfg.iters < 1) throw UsageError("iters must be >= 1");
  if (cfg.stride < 1) throw UsageError("stride must be >= 1");
  if (cfg.iters_kf < 1) throw UsageError("iters_kf must be >= 1");
  if (cfg.iters_cand < 1) throw UsageError("iters_cand must be >= 1");
  if (cfg.threads < 1) throw UsageError("threads must be >= 1");
  if (cfg.lr <= 0) throw UsageError("lr must be positive");
  if (cfg.init_points < 1) throw UsageError("init_points must be >= 1");
  if (cfg.holdout < 0) throw UsageError("holdout must be >= 0");
  if (cfg.t_sigma_min <= 0) throw UsageError("t_sigma_min must be positive");
  if (cfg.sh_degree != 0 && cfg.sh_degree != 1)
    throw UsageError("sh_degree must be 0 or 1");
  if (cfg.sched.t_warm <= 0) throw UsageError("t_warm must be positive");
  if (cfg.sched.w_max <= 0 || cfg.sched.w_max > 1)
    throw UsageError("w_max must be in (0, 1]");
  if (cfg.sched.lambda_dssim < 0 || cfg.sched.lambda_dssim > 1)
    throw UsageError("lambda_dssim must be in [0, 1]");
  if (cfg.sched.beta <= 0) throw UsageError("beta must be positive");
  if (cfg.sched.epsilon <= 0) throw UsageError("epsilon must be positive");
  if (cfg.sched.lambda_si0 < 0 || cfg.sched.lambda_grad0 < 0 ||
      cfg.sched.lambda_ent < 0 || cfg.sched.lambda_vel < 0)
    throw UsageError("loss weights must be >= 0");
  if (cfg.sched.k_nn < 1) throw UsageError("k_nn must be >= 1");
  if (cfg.sched.vel_subsample < 2)
    throw UsageError("vel_subsample must be >= 2");
  if (cfg.budget.g_max < 1) throw UsageError("g_max must be >= 1");
  if (cfg.budget.densify_interval < 1)
    throw UsageError("densify_interval must be >= 1");
}

}  // namespace g2t
