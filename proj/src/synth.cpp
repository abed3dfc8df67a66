#include "g2t/synth.hpp"

#include <algorithm>
#include <cmath>

#include "g2t/rasterizer.hpp"
#include "g2t/rng.hpp"

namespace g2t {

namespace {

Camera make_camera(const SceneSpec& spec) {
  Camera cam;
  cam.width = spec.width;
  cam.height = spec.height;
  cam.fx = cam.fy = spec.focal > 0 ? spec.focal : 1.1 * spec.width;
  cam.cx = (spec.width - 1) / 2.0;
  cam.cy = (spec.height - 1) / 2.0;
  return cam;  // identity pose, looking down +z
}

GaussianField make_blobs(const SceneSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  const int sh_dim = spec.sh_degree == 1 ? 4 : 1;
  GaussianField field;
  field.primitives.reserve(spec.n_blobs);
  const Eigen::Vector3d pivot(0, 0, 3.5);
  for (int i = 0; i < spec.n_blobs; ++i) {
    GaussianPrimitive p;
    const double z = uniform_range(rng, 2.5, 4.5);
    // keep the lateral spread proportional to depth so blobs stay in frame
    const double spread = 0.22 * z;
    p.center = Eigen::Vector3d(uniform_range(rng, -spread, spread),
                               uniform_range(rng, -spread, spread), z);
    for (int c = 0; c < 3; ++c)
      p.log_scale[c] = std::log(uniform_range(rng, 0.15, 0.35));
    Eigen::Vector4d q;
    for (int c = 0; c < 4; ++c) q[c] = normal_unit(rng);
    p.rotation = quat_normalize(q);
    p.opacity_logit = logit(uniform_range(rng, 0.65, 0.9));
    p.sh_coeffs.resize(sh_dim, Eigen::Vector3d::Zero());
    for (int c = 0; c < 3; ++c)
      p.sh_coeffs[0][c] = (uniform_range(rng, 0.27, 0.73) - 0.5) / kShC0;
    for (int k = 1; k < sh_dim; ++k)
      for (int c = 0; c < 3; ++c)
        p.sh_coeffs[k][c] = uniform_range(rng, -0.2, 0.2);
    p.t_center = 0.5;
    p.t_sigma = 1.0;  // wide window: present at every frame

    const double per_time = spec.frames > 1 ? spec.frames - 1 : 0.0;
    switch (spec.motion) {
      case Motion::kStatic:
        // window so wide the temporal factor rounds to exactly 1 at every
        // frame (exp of ~1e-19 is 1.0 in double), so renders of a static
        // scene are bit-identical across time
        p.t_sigma = 1e9;
        break;
      case Motion::kLinear:
        p.velocity = spec.linear_drift_per_frame * per_time;
        break;
      case Motion::kOrbit: {
        // first-order tangential motion about the pivot's vertical axis
        const Eigen::Vector3d arm = p.center - pivot;
        p.velocity = spec.orbit_rate * Eigen::Vector3d(0, 0, 1).cross(arm);
        p.rotor_rate = Eigen::Vector3d(0, 0, spec.orbit_rate);
        break;
      }
    }
    field.primitives.push_back(std::move(p));
  }
  return field;
}

}  // namespace

Motion motion_from_string(const std::string& s) {
  if (s == "static") return Motion::kStatic;
  if (s == "linear") return Motion::kLinear;
  if (s == "orbit") return Motion::kOrbit;
  throw UsageError("unknown motion '" + s + "' (static|linear|orbit)");
}

std::string motion_to_string(Motion m) {
  switch (m) {
    case Motion::kStatic: return "static";
    case Motion::kLinear: return "linear";
    case Motion::kOrbit: return "orbit";
  }
  return "linear";
}

double frame_time(int f, int total) {
  return total > 1 ? static_cast<double>(f - 1) / (total - 1) : 0.0;
}

Image instrument_mask(const SceneSpec& spec, int frame_index) {
  Image mask(spec.height, spec.width, 1);
  const double u = spec.frames > 1
                       ? static_cast<double>(frame_index - 1) / (spec.frames - 1)
                       : 0.0;
  const int mw = std::max(1, static_cast<int>(spec.mask_w_frac * spec.width));
  const int mh = std::max(1, static_cast<int>(spec.mask_h_frac * spec.height));
  const int x0 = static_cast<int>(u * (spec.width - mw) * 0.8 + 0.05 * spec.width);
  const int y0 = (spec.height - mh) / 2;
  for (int y = y0; y < std::min(spec.height, y0 + mh); ++y)
    for (int x = x0; x < std::min(spec.width, x0 + mw); ++x)
      if (y >= 0 && x >= 0) mask.at(y, x) = 1.0;
  return mask;
}

PriorFrame simulate_prior(const Image& true_depth, const SceneSpec& spec,
                          int frame_index) {
  std::mt19937_64 rng(spec.seed * 1000003 + 7919 * frame_index + 3);
  PriorFrame prior;
  prior.instrument_mask = instrument_mask(spec, frame_index);
  const int h = true_depth.height, w = true_depth.width;

  prior.depth_star = Image(h, w, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double affine =
          spec.prior_scale * true_depth.at(y, x) + spec.prior_shift;
      const double noise = 1.0 + spec.depth_noise_sigma * normal_unit(rng);
      prior.depth_star.at(y, x) = affine * noise;
    }

  // Confidence: strongest in the center, decayed toward the border, near the
  // instrument rectangle, and at occlusion boundaries (where a real depth
  // estimator is least reliable).
  prior.confidence = Image(h, w, 1);
  const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
  const double rmax = std::sqrt(cx * cx + cy * cy);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double r = std::sqrt((x - cx) * (x - cx) + (y - cy) * (y - cy));
      const double radial = 1.0 - 0.3 * (r / rmax) * (r / rmax);
      const int border = std::min({x, y, w - 1 - x, h - 1 - y});
      const double edge = std::min(1.0, (border + 1) / 6.0);
      // Local depth range over a 5x5 window; a silhouette (depth cliff)
      // anywhere nearby makes the estimate at this pixel untrustworthy.
      double range = 0.0;
      for (int dy = -2; dy <= 2; ++dy)
        for (int dx = -2; dx <= 2; ++dx) {
          const int ny = y + dy, nx = x + dx;
          if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
          range = std::max(
              range, std::abs(true_depth.at(y, x) - true_depth.at(ny, nx)));
        }
      const double occlusion = 1.0 / (1.0 + spec.conf_edge_kappa * range);
      double near_mask = 1.0;
      if (prior.instrument_mask.at(y, x) != 0.0) {
        near_mask = 0.3;
      } else {
        // distance to the rectangle within a small window
        for (int d = 1; d <= 3 && near_mask == 1.0; ++d)
          for (int dy = -d; dy <= d && near_mask == 1.0; ++dy)
            for (int dx = -d; dx <= d; ++dx) {
              const int ny = y + dy, nx = x + dx;
              if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
              if (prior.instrument_mask.at(ny, nx) != 0.0) {
                near_mask = 0.55 + 0.15 * d;
                break;
              }
            }
      }
      prior.confidence.at(y, x) = std::clamp(
          spec.conf_base * radial * edge * occlusion * near_mask, 0.0, 1.0);
    }

  // Plausible range from the prior's own covered values, so the unknown
  // affine (a, b) never invalidates in-range true-surface pixels.
  double lo = 0, hi = 0;
  bool any = false;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (true_depth.at(y, x) <= 0) continue;
      const double v = prior.depth_star.at(y, x);
      if (!any) {
        lo = hi = v;
        any = true;
      } else {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  if (!any) {
    lo = 0;
    hi = 1;
  }
  prior.d_min = lo >= 0 ? 0.9 * lo : 1.1 * lo;
  prior.d_max = hi >= 0 ? 1.1 * hi : 0.9 * hi;
  if (prior.d_min >= prior.d_max) prior.d_max = prior.d_min + 1e-6;
  return prior;
}

SynthResult generate_scene(const SceneSpec& spec) {
  if (spec.frames < 1) throw UsageError("frames must be >= 1");
  if (spec.width < 1 || spec.height < 1) throw UsageError("size must be >= 1x1");
  if (spec.n_blobs < 1) throw UsageError("blobs must be >= 1");
  if (spec.depth_noise_sigma < 0) throw UsageError("noise sigma must be >= 0");

  SynthResult out;
  out.gt_field = make_blobs(spec);
  const Camera cam = make_camera(spec);
  const RenderConfig rcfg;

  for (int f = 1; f <= spec.frames; ++f) {
    const double t = frame_time(f, spec.frames);
    RenderOutput ro = rasterize(out.gt_field, cam, t, rcfg);
    out.dataset.frames.push_back(std::move(ro.rgb));
    out.dataset.priors.push_back(simulate_prior(ro.depth, spec, f));
    out.dataset.depth_true.push_back(std::move(ro.depth));
    out.dataset.cameras.push_back(cam);
  }
  out.dataset.spec = scene_spec_to_key_values(spec);
  return out;
}

KeyValues scene_spec_to_key_values(const SceneSpec& spec) {
  KeyValues kv;
  kv["seed"] = std::to_string(spec.seed);
  kv["blobs"] = std::to_string(spec.n_blobs);
  kv["motion"] = motion_to_string(spec.motion);
  kv["noise"] = std::to_string(spec.depth_noise_sigma);
  kv["prior_scale"] = std::to_string(spec.prior_scale);
  kv["prior_shift"] = std::to_string(spec.prior_shift);
  kv["conf_edge_kappa"] = std::to_string(spec.conf_edge_kappa);
  kv["sh_degree"] = std::to_string(spec.sh_degree);
  kv["frames"] = std::to_string(spec.frames);
  kv["width"] = std::to_string(spec.width);
  kv["height"] = std::to_string(spec.height);
  return kv;
}

SceneSpec scene_spec_from_key_values(const KeyValues& kv) {
  SceneSpec spec;
  const auto get = [&](const char* k) -> const std::string* {
    auto it = kv.find(k);
    return it == kv.end() ? nullptr : &it->second;
  };
  if (auto* v = get("seed")) spec.seed = std::stoull(*v);
  if (auto* v = get("blobs")) spec.n_blobs = std::stoi(*v);
  if (auto* v = get("motion")) spec.motion = motion_from_string(*v);
  if (auto* v = get("noise")) spec.depth_noise_sigma = std::stod(*v);
  if (auto* v = get("prior_scale")) spec.prior_scale = std::stod(*v);
  if (auto* v = get("prior_shift")) spec.prior_shift = std::stod(*v);
  if (auto* v = get("sh_degree")) spec.sh_degree = std::stoi(*v);
  if (auto* v = get("frames")) spec.frames = std::stoi(*v);
  if (auto* v = get("width")) spec.width = std::stoi(*v);
  if (auto* v = get("height")) spec.height = std::stoi(*v);
  return spec;
}

}  // namespace g2t
