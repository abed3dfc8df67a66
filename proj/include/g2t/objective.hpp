#pragma once

#include <vector>

#include "g2t/adam.hpp"
#include "g2t/camera.hpp"
#include "g2t/losses.hpp"
#include "g2t/param_vector.hpp"
#include "g2t/rasterizer.hpp"
#include "g2t/threading.hpp"

namespace g2t {

struct ObjectiveConfig {
  ScheduleConfig sched;
  RenderConfig render;
  bool use_priors = true;
};

// Total per-frame objective: photometric + warm-up-weighted depth-prior terms
// + opacity entropy + velocity coherence, as a pure function of the flattened
// parameter vector. Everything not differentiated (valid mask, normalized
// prior map, the velocity neighbor graph, schedule weights) is frozen at
// construction so repeated evaluations see one fixed function; that keeps
// finite differences of value() meaningful.
class TrainingObjective {
 public:
  // `prior` may be null (photometric-only training). `dt` is the frame
  // interval used to turn stored velocities into per-frame displacements.
  TrainingObjective(const Image& ref, const PriorFrame* prior,
                    const Camera& cam, double t, double dt, int step,
                    const GaussianField& proto, const ObjectiveConfig& cfg,
                    ThreadPool* pool = nullptr);

  double value(const std::vector<double>& x) const;
  // Returns the objective; fills `grad` (resized to layout().total()).
  double value_and_grad(const std::vector<double>& x,
                        std::vector<double>& grad,
                        LossReport* report = nullptr) const;

  // Re-freezes only the schedule weights; the trainer shares one objective
  // across a frame visit while the global step keeps advancing.
  void set_step(int step);

  const ParamLayout& layout() const { return layout_; }
  // Screen-space positional gradient norms from the last value_and_grad call.
  const std::vector<double>& screen_grad_norms() const { return screen_norms_; }

 private:
  double run(const std::vector<double>& x, std::vector<double>* grad,
             LossReport* report) const;

  Image ref_;
  Camera cam_;
  double t_;
  double dt_;
  ObjectiveConfig cfg_;
  ThreadPool* pool_;
  ParamLayout layout_;
  GaussianField scratch_proto_;

  bool priors_usable_ = false;  // gate + degeneracy checks passed
  double valid_fraction_ = 0;
  Image mask_;
  Image prior_norm_;  // normalized D*, frozen
  double w_si_ = 0;
  double w_grad_ = 0;

  VelocityGraph vel_graph_;
  mutable std::vector<double> screen_norms_;
};

}  // namespace g2t
