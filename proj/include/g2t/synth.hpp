#pragma once

#include <cstdint>
#include <string>

#include "g2t/scene_io.hpp"

namespace g2t {

enum class Motion { kStatic, kLinear, kOrbit };

Motion motion_from_string(const std::string& s);
std::string motion_to_string(Motion m);

struct SceneSpec {
  uint64_t seed = 1;
  int n_blobs = 6;
  Motion motion = Motion::kLinear;
  int frames = 20;
  int height = 64;
  int width = 64;
  double focal = 0;  // 0 -> 1.1 * width
  // linear motion: image-space-pleasant world drift per frame
  Eigen::Vector3d linear_drift_per_frame = Eigen::Vector3d(0.1, 0, 0);
  double orbit_rate = 0.35;  // rad per unit time about the z axis
  double depth_noise_sigma = 0.02;
  double prior_scale = 1.0;  // a in D* = (a D + b)(1 + sigma xi)
  double prior_shift = 0.0;  // b
  double conf_base = 0.9;
  // Confidence attenuation per unit of local depth range; a depth estimator
  // is least reliable at occlusion boundaries, so confidence collapses there.
  double conf_edge_kappa = 2.0;
  double mask_w_frac = 0.18;  // moving instrument rectangle
  double mask_h_frac = 0.35;
  int sh_degree = 1;
};

struct SynthResult {
  GaussianField gt_field;
  Dataset dataset;
};

// Normalized time of 1-based frame f in an F-frame sequence.
double frame_time(int f, int total);

// Seeded blob field + per-frame renders + simulated priors. Pure in (spec).
SynthResult generate_scene(const SceneSpec& spec);

// Moving tool rectangle for one frame, 1 inside the rectangle.
Image instrument_mask(const SceneSpec& spec, int frame_index);

// Affine-corrupted noisy depth with confidence decayed near the border and
// the masked region. Deterministic in (spec.seed, frame_index).
PriorFrame simulate_prior(const Image& true_depth, const SceneSpec& spec,
                          int frame_index);

SceneSpec scene_spec_from_key_values(const KeyValues& kv);
KeyValues scene_spec_to_key_values(const SceneSpec& spec);

}  // namespace g2t
