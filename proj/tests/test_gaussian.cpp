#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include "g2t/gaussian.hpp"
#include "g2t/quat.hpp"
#include "test_support.hpp"

using namespace g2t;

TEST_CASE("covariance with identity rotation is the squared scale diagonal") {
  const Eigen::Vector4d q(1, 0, 0, 0);
  const Eigen::Vector3d ls(std::log(2.0), std::log(3.0), std::log(4.0));
  const Eigen::Matrix3d sigma = covariance(q, ls);
  Eigen::Matrix3d expect = Eigen::Vector3d(4, 9, 16).asDiagonal();
  CHECK((sigma - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("covariance permutes axes under a 90-degree z rotation") {
  const double s = std::sqrt(0.5);
  const Eigen::Vector4d q(s, 0, 0, s);  // 90 deg about z
  const Eigen::Vector3d ls(0.0, std::log(2.0), 0.0);
  const Eigen::Matrix3d sigma = covariance(q, ls);
  Eigen::Matrix3d expect = Eigen::Vector3d(4, 1, 1).asDiagonal();
  CHECK((sigma - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("covariance matches an independent quaternion-to-matrix oracle") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::Vector4d q;
    for (int c = 0; c < 4; ++c) q[c] = normal_unit(rng);
    q = quat_normalize(q);
    const Eigen::Vector3d ls(0.1, -0.2, 0.3);

    // oracle path: Eigen's own quaternion algebra, explicit triple product
    const Eigen::Quaterniond eq(q[0], q[1], q[2], q[3]);
    const Eigen::Matrix3d r = eq.toRotationMatrix();
    const Eigen::Matrix3d s2 =
        (2.0 * ls).array().exp().matrix().asDiagonal();
    const Eigen::Matrix3d expect = r * s2 * r.transpose();

    const Eigen::Matrix3d got = covariance(q, ls);
    CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("covariance is symmetric positive definite with the right spectrum") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::Vector4d q;
    for (int c = 0; c < 4; ++c) q[c] = normal_unit(rng);
    q = quat_normalize(q);
    Eigen::Vector3d ls;
    for (int c = 0; c < 3; ++c) ls[c] = uniform_range(rng, -1.0, 1.0);
    const Eigen::Matrix3d sigma = covariance(q, ls);
    CHECK((sigma - sigma.transpose()).cwiseAbs().maxCoeff() < 1e-12);

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(sigma);
    CHECK(es.eigenvalues().minCoeff() > 0);
    Eigen::Vector3d expect = (2.0 * ls).array().exp();
    std::sort(expect.data(), expect.data() + 3);
    CHECK((es.eigenvalues() - expect).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("covariance rejects non-finite input") {
  Eigen::Vector4d q(1, 0, 0, 0);
  Eigen::Vector3d ls(0, 0, std::numeric_limits<double>::quiet_NaN());
  CHECK_THROWS_AS(covariance(q, ls), NumericalError);
}

TEST_CASE("advance shifts the center and leaves rotation alone without rotor") {
  GaussianPrimitive p;
  p.velocity = Eigen::Vector3d(1, 0, 0);
  const GaussianPrimitive q = advance(p, 0.5);
  CHECK(q.center.isApprox(Eigen::Vector3d(0.5, 0, 0)));
  CHECK(q.rotation.isApprox(Eigen::Vector4d(1, 0, 0, 0)));
}

TEST_CASE("advance composes a 90-degree z rotation from a pi rotor") {
  GaussianPrimitive p;
  p.rotor_rate = Eigen::Vector3d(0, 0, M_PI);
  const GaussianPrimitive q = advance(p, 0.5);
  const double s = std::sqrt(0.5);
  CHECK(std::abs(q.rotation[0] - s) < 1e-12);
  CHECK(std::abs(q.rotation[3] - s) < 1e-12);
}

TEST_CASE("two half steps equal one full step for a fixed-axis rotor") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    GaussianPrimitive p;
    Eigen::Vector4d q;
    for (int c = 0; c < 4; ++c) q[c] = normal_unit(rng);
    p.rotation = quat_normalize(q);
    for (int c = 0; c < 3; ++c) p.rotor_rate[c] = uniform_range(rng, -2, 2);
    const double dt = uniform_range(rng, 0.05, 0.4);
    const Eigen::Vector4d two_step = advance(advance(p, dt), dt).rotation;
    const Eigen::Vector4d one_step = advance(p, 2 * dt).rotation;
    CHECK((two_step - one_step).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("advance with velocity and its negation returns home") {
  GaussianPrimitive p;
  p.center = Eigen::Vector3d(0.3, -0.2, 3.0);
  p.velocity = Eigen::Vector3d(0.7, -0.4, 0.2);
  GaussianPrimitive q = advance(p, 0.25);
  q.velocity = -q.velocity;
  q = advance(q, 0.25);
  CHECK((q.center - p.center).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("rotation norm survives many advance steps") {
  std::mt19937_64 rng(14);
  GaussianPrimitive p;
  for (int i = 0; i < 10000; ++i) {
    for (int c = 0; c < 3; ++c) p.rotor_rate[c] = uniform_range(rng, -3, 3);
    p = advance(p, 0.01);
  }
  CHECK(std::abs(p.rotation.norm() - 1.0) < 1e-9);
}

TEST_CASE("temporal opacity hits base value at the window center") {
  GaussianPrimitive p;
  p.opacity_logit = 0.37;
  p.t_center = 0.42;
  p.t_sigma = 0.2;
  CHECK(temporal_opacity(p, 0.42) == doctest::Approx(sigmoid(0.37)).epsilon(1e-12));
  CHECK(temporal_opacity(p, 0.62) ==
        doctest::Approx(sigmoid(0.37) * std::exp(-0.5)).epsilon(1e-12));
}

TEST_CASE("temporal opacity closed form at two sigma") {
  GaussianPrimitive p;
  p.opacity_logit = 0.0;  // alpha = 0.5
  p.t_center = 0.5;
  p.t_sigma = 0.1;
  CHECK(temporal_opacity(p, 0.7) ==
        doctest::Approx(0.5 * std::exp(-2.0)).epsilon(1e-12));
}

TEST_CASE("temporal opacity decreases away from the center") {
  GaussianPrimitive p;
  p.t_center = 0.5;
  p.t_sigma = 0.3;
  double prev = temporal_opacity(p, 0.5);
  for (double d = 0.05; d <= 0.5; d += 0.05) {
    const double cur = temporal_opacity(p, 0.5 + d);
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("degree-0 color reaches white at the documented coefficient") {
  std::vector<Eigen::Vector3d> sh = {Eigen::Vector3d::Constant(1.7725)};
  const Eigen::Vector3d rgb = sh_color(sh, Eigen::Vector3d(0, 0, 1));
  CHECK(rgb[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(rgb[1] == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("zero band-1 coefficients reduce degree 1 to degree 0") {
  std::mt19937_64 rng(15);
  std::vector<Eigen::Vector3d> sh0 = {Eigen::Vector3d(0.3, -0.1, 0.6)};
  std::vector<Eigen::Vector3d> sh1 = {sh0[0], Eigen::Vector3d::Zero(),
                                      Eigen::Vector3d::Zero(),
                                      Eigen::Vector3d::Zero()};
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::Vector3d dir;
    for (int c = 0; c < 3; ++c) dir[c] = normal_unit(rng);
    dir.normalize();
    CHECK(sh_color(sh0, dir).isApprox(sh_color(sh1, dir), 1e-14));
  }
}

TEST_CASE("band-1 contribution flips sign with the view direction") {
  std::mt19937_64 rng(16);
  std::vector<Eigen::Vector3d> sh(4);
  for (auto& c : sh)
    for (int k = 0; k < 3; ++k) c[k] = uniform_range(rng, -0.5, 0.5);
  const Eigen::Vector3d base = sh[0] * kShC0 + Eigen::Vector3d::Constant(0.5);
  const Eigen::Vector3d up = sh_color(sh, Eigen::Vector3d(0, 0, 1));
  const Eigen::Vector3d down = sh_color(sh, Eigen::Vector3d(0, 0, -1));
  CHECK(((up - base) + (down - base)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("unsupported coefficient counts are rejected") {
  std::vector<Eigen::Vector3d> sh(2, Eigen::Vector3d::Zero());
  CHECK_THROWS_AS(sh_color(sh, Eigen::Vector3d(0, 0, 1)), DataError);
}

TEST_CASE("exp_quat agrees with the closed form away from zero") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::Vector3d w;
    for (int c = 0; c < 3; ++c) w[c] = uniform_range(rng, -3, 3);
    const double angle = w.norm();
    const Eigen::Vector4d q = exp_quat(w);
    CHECK(std::abs(q[0] - std::cos(angle / 2)) < 1e-12);
    const Eigen::Vector3d v = std::sin(angle / 2) * w / angle;
    CHECK(std::abs(q[1] - v[0]) < 1e-12);
    CHECK(std::abs(q.norm() - 1.0) < 1e-12);
  }
}

TEST_CASE("exp_quat is smooth and unit through the small-angle branch") {
  for (double mag : {1e-3, 1e-6, 1e-9, 1e-12, 0.0}) {
    const Eigen::Vector4d q = exp_quat(Eigen::Vector3d(mag, 0, 0));
    CHECK(std::abs(q.norm() - 1.0) < 1e-14);
    CHECK(std::abs(q[1] - std::sin(0.5 * mag)) < 1e-15);
  }
}

TEST_CASE("quaternion product matches Eigen") {
  std::mt19937_64 rng(18);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::Vector4d a, b;
    for (int c = 0; c < 4; ++c) {
      a[c] = normal_unit(rng);
      b[c] = normal_unit(rng);
    }
    const Eigen::Quaterniond ea(a[0], a[1], a[2], a[3]);
    const Eigen::Quaterniond eb(b[0], b[1], b[2], b[3]);
    const Eigen::Quaterniond ec = ea * eb;
    const Eigen::Vector4d got = quat_mul(a, b);
    CHECK(std::abs(got[0] - ec.w()) < 1e-12);
    CHECK(std::abs(got[1] - ec.x()) < 1e-12);
    CHECK(std::abs(got[2] - ec.y()) < 1e-12);
    CHECK(std::abs(got[3] - ec.z()) < 1e-12);
  }
}

TEST_CASE("position and rotation sampling reference the temporal center") {
  GaussianPrimitive p;
  p.center = Eigen::Vector3d(1, 2, 5);
  p.velocity = Eigen::Vector3d(0.5, 0, -0.25);
  p.t_center = 0.4;
  CHECK(position_at(p, 0.4).isApprox(p.center));
  CHECK(position_at(p, 0.8).isApprox(p.center + 0.4 * p.velocity));
  p.rotor_rate = Eigen::Vector3d(0, 0, M_PI);
  const Eigen::Vector4d r = rotation_at(p, 0.9);  // half the rotor from t_center
  const Eigen::Vector4d expect = exp_quat(Eigen::Vector3d(0, 0, M_PI * 0.5));
  CHECK((r - expect).cwiseAbs().maxCoeff() < 1e-12);
}
