#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace g2t {

// Quaternions are Vector4d in (w, x, y, z) order. Stored rotation parameters
// may drift off the unit sphere during optimization; normalization happens
// explicitly where needed so the objective stays smooth in the raw 4-vector.

inline Eigen::Vector4d quat_mul(const Eigen::Vector4d& a, const Eigen::Vector4d& b) {
  return Eigen::Vector4d(
      a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
      a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
      a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
      a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]);
}

inline Eigen::Vector4d quat_normalize(const Eigen::Vector4d& q) {
  return q / q.norm();
}

// Rotation matrix from a unit quaternion (plain quadratic form, no internal
// renormalization so derivatives w.r.t. the 4 components are well defined).
inline Eigen::Matrix3d quat_to_mat(const Eigen::Vector4d& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Eigen::Matrix3d r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
       2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
       2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

// Axis-angle -> unit quaternion. sin(t/2)/t is series-expanded below the
// crossover so the map and its derivative stay smooth through omega = 0.
inline Eigen::Vector4d exp_quat(const Eigen::Vector3d& omega) {
  const double theta = omega.norm();
  double s;  // sin(theta/2) / theta
  if (theta < 1e-4) {
    const double t2 = theta * theta;
    s = 0.5 - t2 / 48.0 + t2 * t2 / 3840.0;
  } else {
    s = std::sin(0.5 * theta) / theta;
  }
  Eigen::Vector4d q;
  q[0] = std::cos(0.5 * theta);
  q.tail<3>() = s * omega;
  return q;
}

// --- adjoints -----------------------------------------------------------

// d(quat_mul)/d(a), d(quat_mul)/d(b) contracted with an upstream gradient.
inline void quat_mul_backward(const Eigen::Vector4d& a, const Eigen::Vector4d& b,
                              const Eigen::Vector4d& dq, Eigen::Vector4d& da,
                              Eigen::Vector4d& db) {
  // q = L(a) b with L the left-multiplication matrix; da = R(b)^T dq, db = L(a)^T dq.
  da[0] = dq[0] * b[0] + dq[1] * b[1] + dq[2] * b[2] + dq[3] * b[3];
  da[1] = -dq[0] * b[1] + dq[1] * b[0] - dq[2] * b[3] + dq[3] * b[2];
  da[2] = -dq[0] * b[2] + dq[1] * b[3] + dq[2] * b[0] - dq[3] * b[1];
  da[3] = -dq[0] * b[3] - dq[1] * b[2] + dq[2] * b[1] + dq[3] * b[0];

  db[0] = dq[0] * a[0] + dq[1] * a[1] + dq[2] * a[2] + dq[3] * a[3];
  db[1] = -dq[0] * a[1] + dq[1] * a[0] + dq[2] * a[3] - dq[3] * a[2];
  db[2] = -dq[0] * a[2] - dq[1] * a[3] + dq[2] * a[0] + dq[3] * a[1];
  db[3] = -dq[0] * a[3] + dq[1] * a[2] - dq[2] * a[1] + dq[3] * a[0];
}

inline Eigen::Vector4d quat_normalize_backward(const Eigen::Vector4d& q,
                                               const Eigen::Vector4d& dn) {
  const double norm = q.norm();
  const Eigen::Vector4d n = q / norm;
  return (dn - n * n.dot(dn)) / norm;
}

// Contract dR (3x3 upstream gradient) with dR/dq of the quadratic form.
inline Eigen::Vector4d quat_to_mat_backward(const Eigen::Vector4d& q,
                                            const Eigen::Matrix3d& dr) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Eigen::Vector4d dq;
  dq[0] = 2 * (-z * dr(0, 1) + y * dr(0, 2) + z * dr(1, 0) - x * dr(1, 2) -
               y * dr(2, 0) + x * dr(2, 1));
  dq[1] = 2 * (y * dr(0, 1) + z * dr(0, 2) + y * dr(1, 0) - 2 * x * dr(1, 1) -
               w * dr(1, 2) + z * dr(2, 0) + w * dr(2, 1) - 2 * x * dr(2, 2));
  dq[2] = 2 * (-2 * y * dr(0, 0) + x * dr(0, 1) + w * dr(0, 2) + x * dr(1, 0) +
               z * dr(1, 2) - w * dr(2, 0) + z * dr(2, 1) - 2 * y * dr(2, 2));
  dq[3] = 2 * (-2 * z * dr(0, 0) - w * dr(0, 1) + x * dr(0, 2) + w * dr(1, 0) -
               2 * z * dr(1, 1) + y * dr(1, 2) + x * dr(2, 0) + y * dr(2, 1));
  return dq;
}

inline Eigen::Vector3d exp_quat_backward(const Eigen::Vector3d& omega,
                                         const Eigen::Vector4d& dq) {
  const double theta = omega.norm();
  double s, r;  // s = sin(t/2)/t, r = s'(t)/t
  if (theta < 1e-4) {
    const double t2 = theta * theta;
    s = 0.5 - t2 / 48.0 + t2 * t2 / 3840.0;
    r = -1.0 / 24.0 + t2 / 960.0;
  } else {
    s = std::sin(0.5 * theta) / theta;
    r = (0.5 * theta * std::cos(0.5 * theta) - std::sin(0.5 * theta)) /
        (theta * theta * theta);
  }
  // dqw/domega = -(s/2) omega; d(s*omega_j)/domega_i = s delta_ij + r omega_i omega_j
  Eigen::Vector3d dv = dq.tail<3>();
  return -0.5 * s * dq[0] * omega + s * dv + r * omega * omega.dot(dv);
}

}  // namespace g2t
