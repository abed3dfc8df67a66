#include "g2t/rasterizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "g2t/image_io.hpp"

namespace g2t {

namespace {

// Chain-rule scratch shared by projection and its reverse pass.
struct ProjectionChain {
  Eigen::Vector3d pos_w;      // world position at t
  Eigen::Vector3d x_c;        // camera-space position
  Eigen::Matrix<double, 2, 3> jac;
  Eigen::Matrix3d sigma;      // world-space covariance at t
  Eigen::Matrix3d rot;        // R(t)
  Eigen::Vector4d q_t;        // exp_quat(omega) * normalize(rotation)
  Eigen::Vector4d e;          // exp_quat(omega)
  Eigen::Vector4d nq;         // normalized stored rotation
  Eigen::Vector3d omega;      // rotor_rate * (t - t_center)
  Eigen::Vector3d view_raw;   // pos_w - camera position
  Eigen::Vector3d view_dir;
  double dt_c = 0;            // t - t_center
  double temporal = 0;        // exp window
  double base_alpha = 0;      // sigmoid(opacity_logit)
};

void check_finite(const GaussianPrimitive& p) {
  const bool ok = p.center.allFinite() && p.log_scale.allFinite() &&
                  p.rotation.allFinite() && std::isfinite(p.opacity_logit) &&
                  p.velocity.allFinite() && p.rotor_rate.allFinite() &&
                  std::isfinite(p.t_center) && std::isfinite(p.t_sigma);
  if (!ok) throw NumericalError("non-finite parameter");
  for (const auto& c : p.sh_coeffs)
    if (!c.allFinite()) throw NumericalError("non-finite parameter");
}

SplatProjection project_full(const GaussianPrimitive& p, const Camera& cam,
                             double t, const RenderConfig& cfg,
                             ProjectionChain* chain) {
  check_finite(p);
  SplatProjection out;

  ProjectionChain local;
  ProjectionChain& c = chain ? *chain : local;
  c.dt_c = t - p.t_center;
  c.pos_w = p.center + p.velocity * c.dt_c;
  c.x_c = cam.to_camera(c.pos_w);
  if (!(c.x_c.z() > cfg.z_near)) return out;

  const double z = c.x_c.z();
  out.depth = z;
  out.mean2d = Eigen::Vector2d(cam.fx * c.x_c.x() / z + cam.cx,
                               cam.fy * c.x_c.y() / z + cam.cy);

  c.omega = p.rotor_rate * c.dt_c;
  c.e = exp_quat(c.omega);
  c.nq = quat_normalize(p.rotation);
  c.q_t = quat_mul(c.e, c.nq);
  c.rot = quat_to_mat(c.q_t);
  const Eigen::Vector3d s2 = (2.0 * p.log_scale).array().exp();
  c.sigma = c.rot * s2.asDiagonal() * c.rot.transpose();

  c.jac << cam.fx / z, 0, -cam.fx * c.x_c.x() / (z * z),
           0, cam.fy / z, -cam.fy * c.x_c.y() / (z * z);
  const Eigen::Matrix<double, 2, 3> m = c.jac * cam.cam_from_world_rot();
  out.cov2d = m * c.sigma * m.transpose();
  out.cov2d(0, 0) += cfg.aa_floor;
  out.cov2d(1, 1) += cfg.aa_floor;

  const double det = out.cov2d(0, 0) * out.cov2d(1, 1) -
                     out.cov2d(0, 1) * out.cov2d(1, 0);
  if (!(det > cfg.det_eps)) return out;
  out.cov2d_inv << out.cov2d(1, 1) / det, -out.cov2d(0, 1) / det,
                   -out.cov2d(1, 0) / det, out.cov2d(0, 0) / det;

  c.base_alpha = sigmoid(p.opacity_logit);
  c.temporal = std::exp(-c.dt_c * c.dt_c / (2.0 * p.t_sigma * p.t_sigma));
  out.alpha_eff = c.base_alpha * c.temporal;

  c.view_raw = c.pos_w - cam.position();
  const double vn = c.view_raw.norm();
  c.view_dir = vn > 1e-12 ? Eigen::Vector3d(c.view_raw / vn)
                          : Eigen::Vector3d(0, 0, 1);
  const Eigen::Vector3d raw = sh_color(p.sh_coeffs, c.view_dir);
  for (int ch = 0; ch < 3; ++ch) {
    out.color[ch] = std::clamp(raw[ch], 0.0, 1.0);
    out.color_clamped[ch] = raw[ch] < 0.0 || raw[ch] > 1.0;
  }

  const double rx = cfg.bbox_sigma * std::sqrt(std::max(out.cov2d(0, 0), 0.0));
  const double ry = cfg.bbox_sigma * std::sqrt(std::max(out.cov2d(1, 1), 0.0));
  out.x0 = std::max(0, static_cast<int>(std::ceil(out.mean2d.x() - rx)));
  out.x1 = std::min(cam.width - 1, static_cast<int>(std::floor(out.mean2d.x() + rx)));
  out.y0 = std::max(0, static_cast<int>(std::ceil(out.mean2d.y() - ry)));
  out.y1 = std::min(cam.height - 1, static_cast<int>(std::floor(out.mean2d.y() + ry)));
  if (out.x0 > out.x1 || out.y0 > out.y1) return out;

  out.visible = true;
  return out;
}

struct Contribution {
  int idx;
  double w;
  double g;  // exp(-q/2) before opacity
  double t_before;
};

// Front-to-back walk for one pixel. Shared by the forward and reverse passes
// so both see identical contribution sets.
void collect_pixel(int px, int py, const std::vector<int>& row,
                   const std::vector<SplatProjection>& proj,
                   const RenderConfig& cfg, std::vector<Contribution>& out) {
  out.clear();
  double trans = 1.0;
  for (int idx : row) {
    const SplatProjection& s = proj[idx];
    if (px < s.x0 || px > s.x1) continue;
    const Eigen::Vector2d d(px - s.mean2d.x(), py - s.mean2d.y());
    const double q = d.dot(s.cov2d_inv * d);
    const double g = std::exp(-0.5 * q);
    const double w = std::min(s.alpha_eff * g, cfg.alpha_clamp);
    if (w < cfg.weight_skip) continue;
    out.push_back({idx, w, g, trans});
    trans *= 1.0 - w;
    if (trans < cfg.term_threshold) break;
  }
}

struct OrderedSplats {
  std::vector<SplatProjection> proj;
  std::vector<std::vector<int>> rows;  // per image row, depth-sorted indices
};

OrderedSplats prepare(const GaussianField& field, const Camera& cam, double t,
                      const RenderConfig& cfg, ThreadPool* pool) {
  cam.validate();
  OrderedSplats out;
  const int n = field.count();
  out.proj.resize(n);
  auto project_one = [&](int i) {
    out.proj[i] = project_full(field.primitives[i], cam, t, cfg, nullptr);
  };
  if (pool)
    pool->parallel_for(0, n, project_one);
  else
    for (int i = 0; i < n; ++i) project_one(i);

  std::vector<int> order;
  order.reserve(n);
  for (int i = 0; i < n; ++i)
    if (out.proj[i].visible) order.push_back(i);
  // Stable sort on depth keeps ties in index order, making the compositing
  // order independent of insertion history.
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return out.proj[a].depth < out.proj[b].depth;
  });

  out.rows.resize(cam.height);
  for (int idx : order)
    for (int y = out.proj[idx].y0; y <= out.proj[idx].y1; ++y)
      out.rows[y].push_back(idx);
  return out;
}

}  // namespace

SplatProjection project(const GaussianPrimitive& p, const Camera& cam, double t,
                        const RenderConfig& cfg) {
  return project_full(p, cam, t, cfg, nullptr);
}

RenderOutput rasterize(const GaussianField& field, const Camera& cam, double t,
                       const RenderConfig& cfg, ThreadPool* pool) {
  OrderedSplats os = prepare(field, cam, t, cfg, pool);
  RenderOutput out;
  out.rgb = Image(cam.height, cam.width, 3);
  out.depth = Image(cam.height, cam.width, 1);
  out.alpha = Image(cam.height, cam.width, 1);

  auto render_row = [&](int y) {
    std::vector<Contribution> contribs;
    contribs.reserve(64);
    for (int x = 0; x < cam.width; ++x) {
      collect_pixel(x, y, os.rows[y], os.proj, cfg, contribs);
      Eigen::Vector3d rgb = Eigen::Vector3d::Zero();
      double alpha = 0, dsum = 0;
      for (const Contribution& c : contribs) {
        const SplatProjection& s = os.proj[c.idx];
        const double tw = c.t_before * c.w;
        rgb += tw * s.color;
        alpha += tw;
        dsum += tw * s.depth;
      }
      for (int ch = 0; ch < 3; ++ch) out.rgb.at(y, x, ch) = rgb[ch];
      out.alpha.at(y, x) = alpha;
      out.depth.at(y, x) = dsum / std::max(alpha, cfg.depth_alpha_floor);
    }
  };
  if (pool)
    pool->parallel_for(0, cam.height, render_row);
  else
    for (int y = 0; y < cam.height; ++y) render_row(y);
  return out;
}

namespace {

// Intermediate (screen-space) gradients accumulated per primitive.
struct SplatGrad {
  Eigen::Vector2d mean2d = Eigen::Vector2d::Zero();
  // dL/d cov2d_inv, symmetric
  double si00 = 0, si01 = 0, si11 = 0;
  double depth = 0;
  double alpha_eff = 0;
  Eigen::Vector3d color = Eigen::Vector3d::Zero();

  void add(const SplatGrad& o) {
    mean2d += o.mean2d;
    si00 += o.si00;
    si01 += o.si01;
    si11 += o.si11;
    depth += o.depth;
    alpha_eff += o.alpha_eff;
    color += o.color;
  }
};

}  // namespace

RasterBackward rasterize_backward(const GaussianField& field, const Camera& cam,
                                  double t, const RenderConfig& cfg,
                                  const Image& d_rgb, const Image& d_depth,
                                  ThreadPool* pool) {
  OrderedSplats os = prepare(field, cam, t, cfg, pool);
  const int n = field.count();

  // Per-row sparse scatter, merged in fixed row order below. This keeps the
  // per-primitive accumulation order independent of the thread count.
  std::vector<std::unordered_map<int, SplatGrad>> row_grads(cam.height);

  auto backward_row = [&](int y) {
    std::vector<Contribution> contribs;
    contribs.reserve(64);
    auto& sink = row_grads[y];
    for (int x = 0; x < cam.width; ++x) {
      collect_pixel(x, y, os.rows[y], os.proj, cfg, contribs);
      if (contribs.empty()) continue;

      double alpha = 0, dsum = 0;
      for (const Contribution& c : contribs) {
        alpha += c.t_before * c.w;
        dsum += c.t_before * c.w * os.proj[c.idx].depth;
      }
      const Eigen::Vector3d dc(d_rgb.at(y, x, 0), d_rgb.at(y, x, 1),
                               d_rgb.at(y, x, 2));
      const double dd = d_depth.channels ? d_depth.at(y, x) : 0.0;
      // depth = dsum / max(alpha, floor)
      const double denom = std::max(alpha, cfg.depth_alpha_floor);
      double d_dsum = dd / denom;
      double d_alpha = alpha > cfg.depth_alpha_floor
                           ? -dd * dsum / (denom * denom)
                           : 0.0;

      Eigen::Vector3d suffix_c = Eigen::Vector3d::Zero();
      double suffix_a = 0, suffix_d = 0;
      for (size_t k = contribs.size(); k-- > 0;) {
        const Contribution& c = contribs[k];
        const SplatProjection& s = os.proj[c.idx];
        const double om = 1.0 - c.w;
        const double gw = dc.dot(c.t_before * s.color - suffix_c / om) +
                          d_alpha * (c.t_before - suffix_a / om) +
                          d_dsum * (c.t_before * s.depth - suffix_d / om);
        SplatGrad& acc = sink[c.idx];
        const double tw = c.t_before * c.w;
        acc.color += tw * dc;
        acc.depth += tw * d_dsum;
        if (s.alpha_eff * c.g < cfg.alpha_clamp) {  // not clamped
          acc.alpha_eff += gw * c.g;
          const double dq = -0.5 * c.g * (gw * s.alpha_eff);
          const Eigen::Vector2d d(x - s.mean2d.x(), y - s.mean2d.y());
          const Eigen::Vector2d sid = s.cov2d_inv * d;
          acc.mean2d += dq * (-2.0 * sid);
          acc.si00 += dq * d.x() * d.x();
          acc.si01 += dq * 2.0 * d.x() * d.y();
          acc.si11 += dq * d.y() * d.y();
        }
        suffix_c += tw * s.color;
        suffix_a += tw;
        suffix_d += tw * s.depth;
      }
    }
  };
  if (pool)
    pool->parallel_for(0, cam.height, backward_row);
  else
    for (int y = 0; y < cam.height; ++y) backward_row(y);

  std::vector<SplatGrad> merged(n);
  for (int y = 0; y < cam.height; ++y)
    for (const auto& [idx, g] : row_grads[y]) merged[idx].add(g);

  RasterBackward out;
  out.prim.resize(n);
  out.screen_grad_norm.assign(n, 0.0);
  const int sh_dim = n > 0 ? field.primitives[0].sh_dim() : 1;
  for (auto& pg : out.prim)
    pg.sh.assign(sh_dim, Eigen::Vector3d::Zero());

  auto chain_one = [&](int i) {
    const GaussianPrimitive& p = field.primitives[i];
    const SplatGrad& g = merged[i];
    ProjectionChain ch;
    SplatProjection s = project_full(p, cam, t, cfg, &ch);
    if (!s.visible) return;
    PrimitiveParamGrad& pg = out.prim[i];
    out.screen_grad_norm[i] = g.mean2d.norm();

    Eigen::Vector3d d_xc = Eigen::Vector3d::Zero();
    Eigen::Vector3d d_posw = Eigen::Vector3d::Zero();

    // color -> SH coefficients and view direction
    Eigen::Vector3d dc_pass;
    for (int chn = 0; chn < 3; ++chn)
      dc_pass[chn] = s.color_clamped[chn] ? 0.0 : g.color[chn];
    pg.sh[0] += kShC0 * dc_pass;
    if (sh_dim == 4) {
      const Eigen::Vector3d& v = ch.view_dir;
      pg.sh[1] += -kShC1 * v.y() * dc_pass;
      pg.sh[2] += kShC1 * v.z() * dc_pass;
      pg.sh[3] += -kShC1 * v.x() * dc_pass;
      Eigen::Vector3d dview(-kShC1 * dc_pass.dot(p.sh_coeffs[3]),
                            -kShC1 * dc_pass.dot(p.sh_coeffs[1]),
                            kShC1 * dc_pass.dot(p.sh_coeffs[2]));
      const double vn = ch.view_raw.norm();
      if (vn > 1e-12)
        d_posw += (dview - ch.view_dir * ch.view_dir.dot(dview)) / vn;
    }

    // depth output
    d_xc.z() += g.depth;

    // mean2d
    d_xc += ch.jac.transpose() * g.mean2d;

    // cov2d (through its inverse), then J and Sigma
    Eigen::Matrix2d d_sinv;
    d_sinv << g.si00, g.si01 / 2, g.si01 / 2, g.si11;
    const Eigen::Matrix2d d_cov2d =
        -s.cov2d_inv * d_sinv * s.cov2d_inv;  // symmetric
    const Eigen::Matrix<double, 2, 3> m = ch.jac * cam.cam_from_world_rot();
    const Eigen::Matrix3d d_sigma = m.transpose() * d_cov2d * m;
    const Eigen::Matrix<double, 2, 3> d_m = 2.0 * d_cov2d * m * ch.sigma;
    const Eigen::Matrix<double, 2, 3> d_jac =
        d_m * cam.cam_from_world_rot().transpose();
    const double z = ch.x_c.z(), z2 = z * z, z3 = z2 * z;
    d_xc.x() += d_jac(0, 2) * (-cam.fx / z2);
    d_xc.y() += d_jac(1, 2) * (-cam.fy / z2);
    d_xc.z() += d_jac(0, 0) * (-cam.fx / z2) + d_jac(1, 1) * (-cam.fy / z2) +
                d_jac(0, 2) * (2.0 * cam.fx * ch.x_c.x() / z3) +
                d_jac(1, 2) * (2.0 * cam.fy * ch.x_c.y() / z3);

    // Sigma -> rotation and log scales
    const Eigen::Vector3d s2 = (2.0 * p.log_scale).array().exp();
    const Eigen::Matrix3d d_rot = 2.0 * d_sigma * ch.rot * s2.asDiagonal();
    const Eigen::Matrix3d rtgr = ch.rot.transpose() * d_sigma * ch.rot;
    for (int k = 0; k < 3; ++k)
      pg.log_scale[k] += 2.0 * s2[k] * rtgr(k, k);

    // rotation chain: R <- q_t <- (exp_quat(omega), normalize(rotation))
    const Eigen::Vector4d d_qt = quat_to_mat_backward(ch.q_t, d_rot);
    Eigen::Vector4d d_e, d_nq;
    quat_mul_backward(ch.e, ch.nq, d_qt, d_e, d_nq);
    const Eigen::Vector3d d_omega = exp_quat_backward(ch.omega, d_e);
    pg.rotor_rate += d_omega * ch.dt_c;
    pg.t_center += -p.rotor_rate.dot(d_omega);
    pg.rotation += quat_normalize_backward(p.rotation, d_nq);

    // effective opacity
    const double dsig = ch.base_alpha * (1.0 - ch.base_alpha);
    pg.opacity_logit += g.alpha_eff * ch.temporal * dsig;
    pg.t_center += g.alpha_eff * s.alpha_eff * ch.dt_c / (p.t_sigma * p.t_sigma);
    pg.t_sigma += g.alpha_eff * s.alpha_eff * ch.dt_c * ch.dt_c /
                  (p.t_sigma * p.t_sigma * p.t_sigma);

    // camera-space -> world -> stored center / velocity / t_center
    d_posw += cam.rot_wc * d_xc;
    pg.center += d_posw;
    pg.velocity += d_posw * ch.dt_c;
    pg.t_center += -p.velocity.dot(d_posw);
  };
  if (pool)
    pool->parallel_for(0, n, chain_one);
  else
    for (int i = 0; i < n; ++i) chain_one(i);
  return out;
}

BenchResult bench_raster(const GaussianField& field, const Camera& cam,
                         const std::vector<double>& times, int repeats,
                         const RenderConfig& cfg, ThreadPool* pool) {
  if (repeats < 1) throw UsageError("bench repeats must be >= 1");
  if (times.empty()) throw UsageError("bench needs at least one timestamp");
  BenchResult res;
  res.run_fps.reserve(repeats);
  const long io_before = io_op_count();
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    for (double t : times) {
      RenderOutput ro = rasterize(field, cam, t, cfg, pool);
      res.checksum += ro.rgb.at(cam.height / 2, cam.width / 2, 0);
    }
    const auto t1 = std::chrono::steady_clock::now();
    const double secs = std::chrono::duration<double>(t1 - t0).count();
    res.run_fps.push_back(times.size() / std::max(secs, 1e-12));
  }
  res.io_ops_during = io_op_count() - io_before;
  res.frames = static_cast<long>(times.size()) * repeats;
  const double mean =
      std::accumulate(res.run_fps.begin(), res.run_fps.end(), 0.0) / repeats;
  double var = 0;
  for (double f : res.run_fps) var += (f - mean) * (f - mean);
  res.fps_mean = mean;
  res.fps_std = std::sqrt(var / repeats);
  return res;
}

}  // namespace g2t
