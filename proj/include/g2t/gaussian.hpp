#pragma once

#include <Eigen/Dense>
#include <vector>

#include "g2t/quat.hpp"
#include "g2t/types.hpp"

namespace g2t {

// One time-embedded splat. Parameters are stored unconstrained (log scales,
// opacity logit, raw quaternion) so the optimizer works on plain reals.
// (t_center, t_sigma) is a Gaussian temporal window: the primitive's stored
// center/rotation describe its state at t_center and evolve linearly with
// velocity / rotor_rate away from it.
struct GaussianPrimitive {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d log_scale = Eigen::Vector3d::Zero();
  Eigen::Vector4d rotation = Eigen::Vector4d(1, 0, 0, 0);  // (w,x,y,z)
  double opacity_logit = 0.0;
  std::vector<Eigen::Vector3d> sh_coeffs = {Eigen::Vector3d::Zero()};  // (deg+1)^2
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Eigen::Vector3d rotor_rate = Eigen::Vector3d::Zero();  // axis-angle rate
  double t_center = 0.5;
  double t_sigma = 1.0;

  int sh_dim() const { return static_cast<int>(sh_coeffs.size()); }
};

struct GaussianField {
  std::vector<GaussianPrimitive> primitives;
  long step = 0;

  int count() const { return static_cast<int>(primitives.size()); }
};

// Sigma = R S^2 R^T with S = diag(exp(log_scale)). Symmetric positive
// definite for any finite inputs.
Eigen::Matrix3d covariance(const Eigen::Vector4d& rotation,
                           const Eigen::Vector3d& log_scale);

// One explicit evolution step: center moves with velocity, rotation composes
// with the integrated rotor, result renormalized. Everything else unchanged.
GaussianPrimitive advance(const GaussianPrimitive& p, double dt);

// sigmoid(opacity_logit) * exp(-(t - t_center)^2 / (2 t_sigma^2))
double temporal_opacity(const GaussianPrimitive& p, double t);

// State of the primitive at normalized time t (reference point t_center).
Eigen::Vector3d position_at(const GaussianPrimitive& p, double t);
Eigen::Vector4d rotation_at(const GaussianPrimitive& p, double t);

// Real SH evaluation, degree 0 or 1, with the conventional +0.5 offset.
// Unclamped; the rasterizer clamps to [0,1].
Eigen::Vector3d sh_color(const std::vector<Eigen::Vector3d>& sh_coeffs,
                         const Eigen::Vector3d& view_dir);

constexpr double kShC0 = 0.28209479177387814;
constexpr double kShC1 = 0.4886025119029199;

}  // namespace g2t
