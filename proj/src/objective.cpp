#include "g2t/objective.hpp"

#include <cmath>

namespace g2t {

TrainingObjective::TrainingObjective(const Image& ref, const PriorFrame* prior,
                                     const Camera& cam, double t, double dt,
                                     int step, const GaussianField& proto,
                                     const ObjectiveConfig& cfg,
                                     ThreadPool* pool)
    : ref_(ref), cam_(cam), t_(t), dt_(dt), cfg_(cfg), pool_(pool),
      layout_(layout_of(proto)), scratch_proto_(proto) {
  if (prior && cfg.use_priors) {
    const ValidMask vm = valid_mask(*prior);
    valid_fraction_ = vm.fraction;
    if (vm.fraction >= 0.1) {
      NormalizedDepth ns = normalize_depth(prior->depth_star, vm.mask);
      if (!ns.degenerate) {
        priors_usable_ = true;
        mask_ = vm.mask;
        prior_norm_ = std::move(ns.map);
      }
    }
  }
  set_step(step);

  std::vector<Eigen::Vector3d> positions(proto.count());
  for (int i = 0; i < proto.count(); ++i)
    positions[i] = position_at(proto.primitives[i], t);
  vel_graph_ = build_velocity_graph(positions, cfg.sched.k_nn,
                                    cfg.sched.vel_subsample,
                                    proto.step * 0x9e3779b9u + 17);
}

void TrainingObjective::set_step(int step) {
  w_si_ = schedule_weight(cfg_.sched.lambda_si0, step, cfg_.sched.t_warm,
                          cfg_.sched.w_max);
  w_grad_ = schedule_weight(cfg_.sched.lambda_grad0, step, cfg_.sched.t_warm,
                            cfg_.sched.w_max);
}

double TrainingObjective::value(const std::vector<double>& x) const {
  return run(x, nullptr, nullptr);
}

double TrainingObjective::value_and_grad(const std::vector<double>& x,
                                         std::vector<double>& grad,
                                         LossReport* report) const {
  return run(x, &grad, report);
}

double TrainingObjective::run(const std::vector<double>& x,
                              std::vector<double>* grad,
                              LossReport* report) const {
  GaussianField field = scratch_proto_;
  unflatten(x, field);
  const int n = field.count();

  LossReport rep;
  rep.valid_fraction = valid_fraction_;
  rep.priors_active = priors_usable_;
  rep.w_si = w_si_;
  rep.w_grad = w_grad_;

  const RenderOutput ro = rasterize(field, cam_, t_, cfg_.render, pool_);
  rep.photo = photometric_loss(ref_, ro.rgb, cfg_.sched.lambda_dssim);
  double total = std::isfinite(rep.photo) ? rep.photo : 0.0;

  NormalizedDepth nh;
  bool depth_terms = false;
  if (priors_usable_ && (w_si_ > 0 || w_grad_ > 0)) {
    nh = normalize_depth(ro.depth, mask_);
    if (!nh.degenerate) {
      depth_terms = true;
      rep.silog = silog_loss(nh.map, prior_norm_, mask_, cfg_.sched.beta,
                             cfg_.sched.epsilon);
      rep.grad = grad_loss(nh.map, prior_norm_, mask_);
      if (std::isfinite(rep.silog)) total += w_si_ * rep.silog;
      if (std::isfinite(rep.grad)) total += w_grad_ * rep.grad;
    }
  }

  std::vector<double> alphas(n);
  for (int i = 0; i < n; ++i)
    alphas[i] = temporal_opacity(field.primitives[i], t_);
  rep.entropy = opacity_entropy(alphas);
  if (std::isfinite(rep.entropy)) total += cfg_.sched.lambda_ent * rep.entropy;

  std::vector<Eigen::Vector3d> velocities(n);
  for (int i = 0; i < n; ++i)
    velocities[i] = field.primitives[i].velocity * dt_;
  rep.velocity = velocity_coherence_eval(vel_graph_, velocities);
  if (std::isfinite(rep.velocity)) total += cfg_.sched.lambda_vel * rep.velocity;

  rep.total = total;
  if (report) *report = rep;
  if (!std::isfinite(total))
    throw NumericalError("objective is non-finite");
  if (!grad) return total;

  // ---- reverse pass ----
  grad->assign(layout_.total(), 0.0);

  const Image d_rgb =
      photometric_backward(ref_, ro.rgb, cfg_.sched.lambda_dssim, 1.0);
  Image d_depth;
  if (depth_terms) {
    Image dn = silog_backward(nh.map, prior_norm_, mask_, cfg_.sched.beta,
                              cfg_.sched.epsilon, w_si_);
    const Image dg =
        grad_loss_backward(nh.map, prior_norm_, mask_, w_grad_);
    for (size_t i = 0; i < dn.size(); ++i) dn.data[i] += dg.data[i];
    d_depth = normalize_depth_backward(ro.depth, mask_, nh, dn);
  }

  const RasterBackward rb =
      rasterize_backward(field, cam_, t_, cfg_.render, d_rgb, d_depth, pool_);
  for (int i = 0; i < n; ++i) accumulate(layout_, rb.prim[i], i, *grad);
  screen_norms_ = rb.screen_grad_norm;

  const std::vector<double> d_alpha =
      opacity_entropy_backward(alphas, cfg_.sched.lambda_ent);
  for (int i = 0; i < n; ++i) {
    if (d_alpha[i] == 0) continue;
    const GaussianPrimitive& p = field.primitives[i];
    const double base = sigmoid(p.opacity_logit);
    const double dtc = t_ - p.t_center;
    const double win = std::exp(-dtc * dtc / (2.0 * p.t_sigma * p.t_sigma));
    const double a_eff = base * win;
    (*grad)[layout_.opacity(i)] += d_alpha[i] * win * base * (1.0 - base);
    (*grad)[layout_.t_center(i)] +=
        d_alpha[i] * a_eff * dtc / (p.t_sigma * p.t_sigma);
    (*grad)[layout_.t_sigma(i)] +=
        d_alpha[i] * a_eff * dtc * dtc / (p.t_sigma * p.t_sigma * p.t_sigma);
  }

  const std::vector<Eigen::Vector3d> d_vel = velocity_coherence_backward(
      vel_graph_, velocities, cfg_.sched.lambda_vel);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c)
      (*grad)[layout_.velocity(i) + c] += d_vel[i][c] * dt_;

  return total;
}

}  // namespace g2t
