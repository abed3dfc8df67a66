#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "g2t/losses.hpp"

namespace g2t {

struct BudgetPolicy {
  int g_max = 2000;
  double densify_grad_threshold = 2e-4;
  double prune_opacity_threshold = 0.005;
  int densify_interval = 100;
};

struct TrainConfig {
  uint64_t seed = 1;
  long iters = 2000;       // total optimizer steps across all frames
  int stride = 5;          // keyframe stride w
  int iters_kf = 10;       // inner steps per keyframe visit
  int iters_cand = 3;      // inner steps per candidate visit
  bool kf_only = false;
  bool no_budget = false;
  bool use_priors = true;
  bool cand_update_opacity = true;  // candidates may touch opacity/timing
  int threads = 1;
  double lr = 1.6e-3;
  int init_points = 400;
  int holdout = 8;  // every holdout-th frame is excluded from training
  int checkpoint_interval = 0;  // steps between checkpoints; 0 = final only
  double t_sigma_min = 1e-3;
  int sh_degree = 1;
  ScheduleConfig sched;
  BudgetPolicy budget;
};

// Applies one "key=value" setting; unknown keys raise UsageError listing the
// key. Shared by config files and --set overrides.
void apply_setting(TrainConfig& cfg, const std::string& key,
                   const std::string& value);

// defaults, then the config file (if non-empty), then overrides, in order.
TrainConfig load_train_config(const std::string& config_path,
                              const std::vector<std::string>& overrides);

void validate(const TrainConfig& cfg);

}  // namespace g2t
