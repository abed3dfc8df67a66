#include "g2t/gaussian.hpp"

namespace g2t {

Eigen::Matrix3d covariance(const Eigen::Vector4d& rotation,
                           const Eigen::Vector3d& log_scale) {
  if (!rotation.allFinite() || !log_scale.allFinite())
    throw NumericalError("non-finite parameter");
  const Eigen::Matrix3d r = quat_to_mat(rotation);
  const Eigen::Vector3d s2 = (2.0 * log_scale).array().exp();
  return r * s2.asDiagonal() * r.transpose();
}

GaussianPrimitive advance(const GaussianPrimitive& p, double dt) {
  if (!std::isfinite(dt)) throw NumericalError("non-finite parameter");
  GaussianPrimitive out = p;
  out.center = p.center + p.velocity * dt;
  out.rotation = quat_normalize(quat_mul(exp_quat(p.rotor_rate * dt), p.rotation));
  return out;
}

double temporal_opacity(const GaussianPrimitive& p, double t) {
  const double dt = t - p.t_center;
  return sigmoid(p.opacity_logit) *
         std::exp(-dt * dt / (2.0 * p.t_sigma * p.t_sigma));
}

Eigen::Vector3d position_at(const GaussianPrimitive& p, double t) {
  return p.center + p.velocity * (t - p.t_center);
}

Eigen::Vector4d rotation_at(const GaussianPrimitive& p, double t) {
  return quat_mul(exp_quat(p.rotor_rate * (t - p.t_center)),
                  quat_normalize(p.rotation));
}

Eigen::Vector3d sh_color(const std::vector<Eigen::Vector3d>& sh_coeffs,
                         const Eigen::Vector3d& view_dir) {
  const size_t n = sh_coeffs.size();
  if (n != 1 && n != 4)
    throw DataError("unsupported SH degree (coefficient count " +
                    std::to_string(n) + ")");
  Eigen::Vector3d c = kShC0 * sh_coeffs[0];
  if (n == 4) {
    c += kShC1 * (-view_dir.y() * sh_coeffs[1] + view_dir.z() * sh_coeffs[2] -
                  view_dir.x() * sh_coeffs[3]);
  }
  return c.array() + 0.5;
}

}  // namespace g2t
