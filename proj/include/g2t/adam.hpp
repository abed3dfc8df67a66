#pragma once

#include <string>
#include <vector>

#include "g2t/param_vector.hpp"
#include "g2t/types.hpp"

namespace g2t {

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step_count = 0;
  double lr = 1.6e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_adam = 1e-8;

  explicit AdamState(size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

// One bias-corrected Adam update, in place. `lr_scale` (optional, same length
// as x) multiplies the step per coordinate; it carries the per-field factors.
// Coordinates with active = 0 are fully frozen: no moment decay, no movement.
// A non-finite gradient skips the update but still advances the counter and
// returns false so the caller can log it.
bool adam_step(AdamState& state, std::vector<double>& x,
               const std::vector<double>& g,
               const std::vector<double>* lr_scale = nullptr,
               const std::vector<uint8_t>* active = nullptr);

// Per-coordinate learning-rate factors for one field layout.
std::vector<double> field_lr_scales(const ParamLayout& layout);

// Sidecar checkpoint: 8-byte magic "G2TADAM1", then step_count and the
// hyperparameters, then m and v, all little-endian f64.
void write_adam(const std::string& path, const AdamState& state);
AdamState read_adam(const std::string& path);

}  // namespace g2t
