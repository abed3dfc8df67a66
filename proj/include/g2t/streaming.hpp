#pragma once

#include <functional>
#include <vector>

#include "g2t/adam.hpp"
#include "g2t/config.hpp"
#include "g2t/objective.hpp"
#include "g2t/scene_io.hpp"

namespace g2t {

struct StreamPlan {
  int frames = 0;
  int stride = 1;
  std::vector<int> keyframes;   // ascending, 1-based
  std::vector<int> candidates;  // ascending, 1-based

  bool is_keyframe(int f) const { return (f - 1) % stride == 0; }
};

StreamPlan keyframe_partition(int frames, int stride);

// Clone/prune result plus, per surviving primitive, its index in the input
// field (-1 for freshly cloned children). The mapping lets optimizer moments
// follow survivors.
struct FieldEdit {
  GaussianField field;
  std::vector<int> source;
};

// Clone high-gradient primitives (child offset one stddev along the dominant
// covariance axis, scales shrunk, opacity shared), prune transparent ones,
// then enforce the budget at time t.
FieldEdit densify_and_prune(const GaussianField& field,
                            const std::vector<double>& grad_norms,
                            const BudgetPolicy& policy, double t);

// Drop the lowest-effective-opacity primitives (ties: higher index goes
// first) until count <= g_max.
FieldEdit enforce_budget_tracked(const GaussianField& field,
                                 const BudgetPolicy& policy, double t);
GaussianField enforce_budget(const GaussianField& field,
                             const BudgetPolicy& policy, double t);

struct StepInfo {
  long step = 0;
  int frame = 0;
  bool keyframe = false;
  int count = 0;
  LossReport report;
};

using StepCallback = std::function<void(const StepInfo&)>;

struct TrainResult {
  GaussianField field;
  AdamState adam{0};
  std::vector<StepInfo> log;
};

// Streaming loop: epochs over frames 1..F in order, full optimization with
// densify/prune at keyframes, appearance-only steps at candidates, budget
// enforced after every mutation. Held-out frames (cfg.holdout) are skipped.
TrainResult train_sequence(const Dataset& ds, const GaussianField& init,
                           const TrainConfig& cfg,
                           const StepCallback& on_step = nullptr);

// Seeded initial field: random points in the viewing volume of the first
// camera, colors sampled from the first frame.
GaussianField init_field(const Dataset& ds, const TrainConfig& cfg);

}  // namespace g2t
