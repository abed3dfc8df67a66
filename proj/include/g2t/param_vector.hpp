#pragma once

#include <vector>

#include "g2t/gaussian.hpp"
#include "g2t/rasterizer.hpp"
#include "g2t/types.hpp"

namespace g2t {

// Flat layout of one primitive's trainable fields, in storage order:
//   center(3) log_scale(3) rotation(4) opacity(1) sh(3*sh_dim)
//   velocity(3) rotor_rate(3) t_center(1) t_sigma(1)
struct ParamLayout {
  int sh_dim = 1;
  int count = 0;

  int stride() const { return 19 + 3 * sh_dim; }
  int total() const { return count * stride(); }

  int center(int i) const { return i * stride(); }
  int log_scale(int i) const { return i * stride() + 3; }
  int rotation(int i) const { return i * stride() + 6; }
  int opacity(int i) const { return i * stride() + 10; }
  int sh(int i, int coeff) const { return i * stride() + 11 + 3 * coeff; }
  int velocity(int i) const { return i * stride() + 11 + 3 * sh_dim; }
  int rotor(int i) const { return i * stride() + 14 + 3 * sh_dim; }
  int t_center(int i) const { return i * stride() + 17 + 3 * sh_dim; }
  int t_sigma(int i) const { return i * stride() + 18 + 3 * sh_dim; }
};

inline ParamLayout layout_of(const GaussianField& field) {
  ParamLayout l;
  l.count = field.count();
  l.sh_dim = l.count > 0 ? field.primitives[0].sh_dim() : 1;
  return l;
}

inline std::vector<double> flatten(const GaussianField& field) {
  const ParamLayout l = layout_of(field);
  std::vector<double> x(l.total());
  for (int i = 0; i < l.count; ++i) {
    const GaussianPrimitive& p = field.primitives[i];
    if (p.sh_dim() != l.sh_dim)
      throw DataError("flatten: mixed SH degrees in one field");
    for (int c = 0; c < 3; ++c) {
      x[l.center(i) + c] = p.center[c];
      x[l.log_scale(i) + c] = p.log_scale[c];
      x[l.velocity(i) + c] = p.velocity[c];
      x[l.rotor(i) + c] = p.rotor_rate[c];
    }
    for (int c = 0; c < 4; ++c) x[l.rotation(i) + c] = p.rotation[c];
    x[l.opacity(i)] = p.opacity_logit;
    for (int k = 0; k < l.sh_dim; ++k)
      for (int c = 0; c < 3; ++c) x[l.sh(i, k) + c] = p.sh_coeffs[k][c];
    x[l.t_center(i)] = p.t_center;
    x[l.t_sigma(i)] = p.t_sigma;
  }
  return x;
}

// Writes values back into an existing field (which supplies sh_dim/count).
inline void unflatten(const std::vector<double>& x, GaussianField& field) {
  const ParamLayout l = layout_of(field);
  if (static_cast<int>(x.size()) != l.total())
    throw DataError("unflatten: length mismatch");
  for (int i = 0; i < l.count; ++i) {
    GaussianPrimitive& p = field.primitives[i];
    for (int c = 0; c < 3; ++c) {
      p.center[c] = x[l.center(i) + c];
      p.log_scale[c] = x[l.log_scale(i) + c];
      p.velocity[c] = x[l.velocity(i) + c];
      p.rotor_rate[c] = x[l.rotor(i) + c];
    }
    for (int c = 0; c < 4; ++c) p.rotation[c] = x[l.rotation(i) + c];
    p.opacity_logit = x[l.opacity(i)];
    p.sh_coeffs.resize(l.sh_dim);
    for (int k = 0; k < l.sh_dim; ++k)
      for (int c = 0; c < 3; ++c) p.sh_coeffs[k][c] = x[l.sh(i, k) + c];
    p.t_center = x[l.t_center(i)];
    p.t_sigma = x[l.t_sigma(i)];
  }
}

inline void accumulate(const ParamLayout& l, const PrimitiveParamGrad& g, int i,
                       std::vector<double>& out) {
  for (int c = 0; c < 3; ++c) {
    out[l.center(i) + c] += g.center[c];
    out[l.log_scale(i) + c] += g.log_scale[c];
    out[l.velocity(i) + c] += g.velocity[c];
    out[l.rotor(i) + c] += g.rotor_rate[c];
  }
  for (int c = 0; c < 4; ++c) out[l.rotation(i) + c] += g.rotation[c];
  out[l.opacity(i)] += g.opacity_logit;
  for (int k = 0; k < static_cast<int>(g.sh.size()) && k < l.sh_dim; ++k)
    for (int c = 0; c < 3; ++c) out[l.sh(i, k) + c] += g.sh[k][c];
  out[l.t_center(i)] += g.t_center;
  out[l.t_sigma(i)] += g.t_sigma;
}

}  // namespace g2t
