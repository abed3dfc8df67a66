#include "g2t/streaming.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <memory>
#include <numeric>

#include "g2t/quat.hpp"
#include "g2t/rng.hpp"
#include "g2t/synth.hpp"

namespace g2t {

StreamPlan keyframe_partition(int frames, int stride) {
  if (stride < 1) throw UsageError("keyframe stride must be >= 1");
  if (frames < 1) throw UsageError("frame count must be >= 1");
  StreamPlan plan;
  plan.frames = frames;
  plan.stride = stride;
  for (int f = 1; f <= frames; ++f) {
    if ((f - 1) % stride == 0)
      plan.keyframes.push_back(f);
    else
      plan.candidates.push_back(f);
  }
  return plan;
}

FieldEdit enforce_budget_tracked(const GaussianField& field,
                                 const BudgetPolicy& policy, double t) {
  FieldEdit out;
  const int n = field.count();
  if (n <= policy.g_max) {
    out.field = field;
    out.source.resize(n);
    std::iota(out.source.begin(), out.source.end(), 0);
    return out;
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> eff(n);
  for (int i = 0; i < n; ++i)
    eff[i] = temporal_opacity(field.primitives[i], t);
  // removal order: weakest first, ties shed the higher index first
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (eff[a] != eff[b]) return eff[a] < eff[b];
    return a > b;
  });
  std::vector<char> drop(n, 0);
  for (int i = 0; i < n - policy.g_max; ++i) drop[order[i]] = 1;
  out.field.step = field.step;
  for (int i = 0; i < n; ++i) {
    if (drop[i]) continue;
    out.field.primitives.push_back(field.primitives[i]);
    out.source.push_back(i);
  }
  return out;
}

GaussianField enforce_budget(const GaussianField& field,
                             const BudgetPolicy& policy, double t) {
  return enforce_budget_tracked(field, policy, t).field;
}

FieldEdit densify_and_prune(const GaussianField& field,
                            const std::vector<double>& grad_norms,
                            const BudgetPolicy& policy, double t) {
  if (static_cast<int>(grad_norms.size()) != field.count())
    throw DataError("densify_and_prune: gradient stats length mismatch");

  GaussianField grown;
  grown.step = field.step;
  std::vector<int> source;
  for (int i = 0; i < field.count(); ++i) {
    grown.primitives.push_back(field.primitives[i]);
    source.push_back(i);
  }
  for (int i = 0; i < field.count(); ++i) {
    if (!(grad_norms[i] > policy.densify_grad_threshold)) continue;
    const GaussianPrimitive& parent = field.primitives[i];
    GaussianPrimitive child = parent;
    int dominant = 0;
    for (int k = 1; k < 3; ++k)
      if (parent.log_scale[k] > parent.log_scale[dominant]) dominant = k;
    const Eigen::Matrix3d rot = quat_to_mat(quat_normalize(parent.rotation));
    child.center += rot.col(dominant) * std::exp(parent.log_scale[dominant]);
    for (int k = 0; k < 3; ++k) child.log_scale[k] += std::log(0.8);
    grown.primitives.push_back(std::move(child));
    source.push_back(-1);
  }

  FieldEdit pruned;
  pruned.field.step = field.step;
  for (size_t i = 0; i < grown.primitives.size(); ++i) {
    if (sigmoid(grown.primitives[i].opacity_logit) <
        policy.prune_opacity_threshold)
      continue;
    pruned.field.primitives.push_back(grown.primitives[i]);
    pruned.source.push_back(source[i]);
  }

  FieldEdit final = enforce_budget_tracked(pruned.field, policy, t);
  // compose the two source maps back to the input field
  for (int& s : final.source) s = pruned.source[s];
  return final;
}

GaussianField init_field(const Dataset& ds, const TrainConfig& cfg) {
  if (ds.frame_count() < 1) throw DataError("init_field: empty dataset");
  std::mt19937_64 rng(cfg.seed);
  const Camera& cam = ds.cameras[0];
  const Image& frame = ds.frames[0];
  const int sh_dim = cfg.sh_degree == 1 ? 4 : 1;

  // Depth range for seeding: the dataset's plausible bounds when priors are
  // in play, a generic near-field volume otherwise.
  double z_lo = 2.0, z_hi = 5.0;
  if (cfg.use_priors && !ds.priors.empty() &&
      ds.priors[0].d_min < ds.priors[0].d_max && ds.priors[0].d_min > 0) {
    z_lo = ds.priors[0].d_min;
    z_hi = ds.priors[0].d_max;
  }

  GaussianField field;
  field.primitives.reserve(cfg.init_points);
  for (int i = 0; i < cfg.init_points; ++i) {
    GaussianPrimitive p;
    const int px = static_cast<int>(uniform_index(rng, cam.width));
    const int py = static_cast<int>(uniform_index(rng, cam.height));
    const double z = uniform_range(rng, z_lo, z_hi);
    const Eigen::Vector3d x_c((px - cam.cx) / cam.fx * z,
                              (py - cam.cy) / cam.fy * z, z);
    p.center = cam.rot_wc * x_c + cam.t_wc;
    // a few pixels of screen footprint at seeding depth
    const double sigma = 3.0 * z / cam.fx;
    p.log_scale = Eigen::Vector3d::Constant(std::log(sigma));
    p.opacity_logit = logit(0.1);
    p.sh_coeffs.assign(sh_dim, Eigen::Vector3d::Zero());
    for (int c = 0; c < 3; ++c)
      p.sh_coeffs[0][c] = (frame.at(py, px, c) - 0.5) / kShC0;
    p.t_center = 0.5;
    p.t_sigma = 1.0;
    field.primitives.push_back(std::move(p));
  }
  return field;
}

namespace {

// Remaps optimizer moments through a field edit; new primitives start cold.
AdamState remap_adam(const AdamState& old, const FieldEdit& edit,
                     const ParamLayout& new_layout) {
  AdamState next(new_layout.total());
  next.step_count = old.step_count;
  next.lr = old.lr;
  next.beta1 = old.beta1;
  next.beta2 = old.beta2;
  next.eps_adam = old.eps_adam;
  const int stride = new_layout.stride();
  for (int j = 0; j < new_layout.count; ++j) {
    const int src = edit.source[j];
    if (src < 0) continue;
    for (int c = 0; c < stride; ++c) {
      next.m[j * stride + c] = old.m[src * stride + c];
      next.v[j * stride + c] = old.v[src * stride + c];
    }
  }
  return next;
}

std::vector<uint8_t> candidate_mask(const ParamLayout& layout,
                                    bool update_opacity) {
  std::vector<uint8_t> active(layout.total(), 0);
  for (int i = 0; i < layout.count; ++i) {
    for (int k = 0; k < layout.sh_dim; ++k)
      for (int c = 0; c < 3; ++c) active[layout.sh(i, k) + c] = 1;
    if (update_opacity) {
      active[layout.opacity(i)] = 1;
      active[layout.t_center(i)] = 1;
      active[layout.t_sigma(i)] = 1;
    }
  }
  return active;
}

// Renormalizing an already-unit quaternion can still flip low bits
// (quat_normalize is not an exact fixpoint), so rotation projection must be
// skipped on candidate steps where rotations are frozen; otherwise frozen
// state would drift with the step count.
void project_constraints(std::vector<double>& x, const ParamLayout& layout,
                         double t_sigma_min, bool rotations_updated) {
  for (int i = 0; i < layout.count; ++i) {
    if (rotations_updated) {
      Eigen::Vector4d q(x[layout.rotation(i)], x[layout.rotation(i) + 1],
                        x[layout.rotation(i) + 2], x[layout.rotation(i) + 3]);
      q = quat_normalize(q);
      for (int c = 0; c < 4; ++c) x[layout.rotation(i) + c] = q[c];
    }
    x[layout.t_sigma(i)] = std::max(x[layout.t_sigma(i)], t_sigma_min);
    x[layout.t_center(i)] = std::clamp(x[layout.t_center(i)], 0.0, 1.0);
  }
}

}  // namespace

TrainResult train_sequence(const Dataset& ds, const GaussianField& init,
                           const TrainConfig& cfg, const StepCallback& on_step) {
  const int F = ds.frame_count();
  if (F < 1) throw DataError("train_sequence: empty dataset");
  if (static_cast<int>(ds.priors.size()) != F ||
      static_cast<int>(ds.cameras.size()) != F)
    throw DataError("train_sequence: frames, priors, cameras must align");
  validate(cfg);

  const StreamPlan plan = keyframe_partition(F, cfg.stride);
  std::vector<int> visit;
  for (int f = 1; f <= F; ++f) {
    if (cfg.holdout > 0 && f % cfg.holdout == 0) continue;  // held out
    if (cfg.kf_only && !plan.is_keyframe(f)) continue;
    visit.push_back(f);
  }
  if (visit.empty())
    throw DataError("train_sequence: no trainable frames after holdout");

  BudgetPolicy policy = cfg.budget;
  if (cfg.no_budget) policy.g_max = std::numeric_limits<int>::max();

  std::unique_ptr<ThreadPool> pool;
  if (cfg.threads > 1) pool = std::make_unique<ThreadPool>(cfg.threads);

  ObjectiveConfig ocfg;
  ocfg.sched = cfg.sched;
  ocfg.use_priors = cfg.use_priors;

  TrainResult result;
  result.field = enforce_budget(init, policy, frame_time(1, F));
  ParamLayout layout = layout_of(result.field);
  result.adam = AdamState(layout.total());
  result.adam.lr = cfg.lr;
  std::vector<double> x = flatten(result.field);
  std::vector<double> lr_scales = field_lr_scales(layout);
  std::vector<uint8_t> cand_active =
      candidate_mask(layout, cfg.cand_update_opacity);

  const double dt = F > 1 ? 1.0 / (F - 1) : 0.0;
  std::vector<double> grad_acc(layout.count, 0.0);
  long grad_acc_n = 0;

  long step = 0;
  while (step < cfg.iters) {
    for (size_t vi = 0; vi < visit.size() && step < cfg.iters; ++vi) {
      const int f = visit[vi];
      const bool kf = plan.is_keyframe(f);
      const double t = frame_time(f, F);
      const int inner = kf ? cfg.iters_kf : cfg.iters_cand;

      result.field.step = step;
      auto objective = std::make_unique<TrainingObjective>(
          ds.frames[f - 1], &ds.priors[f - 1], ds.cameras[f - 1], t, dt,
          static_cast<int>(step) + 1, result.field, ocfg, pool.get());

      for (int j = 0; j < inner && step < cfg.iters; ++j) {
        ++step;
        objective->set_step(static_cast<int>(step));
        std::vector<double> grad;
        LossReport report;
        objective->value_and_grad(x, grad, &report);
        const bool applied =
            adam_step(result.adam, x, grad, &lr_scales,
                      kf ? nullptr : &cand_active);
        if (!applied)
          std::cerr << "warning: non-finite gradient at step " << step
                    << ", update skipped\n";
        project_constraints(x, layout, cfg.t_sigma_min, kf);
        unflatten(x, result.field);

        if (kf) {
          const std::vector<double>& norms = objective->screen_grad_norms();
          for (int i = 0; i < layout.count; ++i) grad_acc[i] += norms[i];
          ++grad_acc_n;
          if (step % policy.densify_interval == 0) {
            std::vector<double> mean_norms(layout.count, 0.0);
            for (int i = 0; i < layout.count; ++i)
              mean_norms[i] = grad_acc[i] / std::max<long>(grad_acc_n, 1);
            const FieldEdit edit =
                densify_and_prune(result.field, mean_norms, policy, t);
            const ParamLayout new_layout = layout_of(edit.field);
            result.adam = remap_adam(result.adam, edit, new_layout);
            result.field = edit.field;
            layout = new_layout;
            x = flatten(result.field);
            lr_scales = field_lr_scales(layout);
            cand_active = candidate_mask(layout, cfg.cand_update_opacity);
            grad_acc.assign(layout.count, 0.0);
            grad_acc_n = 0;
            result.field.step = step;
            objective = std::make_unique<TrainingObjective>(
                ds.frames[f - 1], &ds.priors[f - 1], ds.cameras[f - 1], t, dt,
                static_cast<int>(step), result.field, ocfg, pool.get());
          }
        }

        if (!cfg.no_budget && result.field.count() > policy.g_max)
          throw NumericalError("budget invariant violated");  // unreachable

        StepInfo info;
        info.step = step;
        info.frame = f;
        info.keyframe = kf;
        info.count = result.field.count();
        info.report = report;
        result.log.push_back(info);
        if (on_step) on_step(info);
      }
    }
  }
  return result;
}

}  // namespace g2t
