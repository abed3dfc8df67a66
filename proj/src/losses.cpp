#include "g2t/losses.hpp"

#include <algorithm>
#include <cmath>

#include "g2t/rng.hpp"
#include "g2t/ssim.hpp"

namespace g2t {

namespace {

double sign(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

bool in_mask(const Image& mask, int y, int x) { return mask.at(y, x) != 0.0; }

}  // namespace

double photometric_loss(const Image& ref, const Image& rendered,
                        double lambda_dssim) {
  require_same_shape(ref, rendered, "photometric_loss");
  double l1 = 0;
  for (size_t i = 0; i < ref.size(); ++i)
    l1 += std::abs(ref.data[i] - rendered.data[i]);
  l1 /= static_cast<double>(ref.size());
  if (lambda_dssim == 0.0) return l1;
  return (1.0 - lambda_dssim) * l1 +
         lambda_dssim * (1.0 - ssim_mean(ref, rendered));
}

Image photometric_backward(const Image& ref, const Image& rendered,
                           double lambda_dssim, double upstream) {
  require_same_shape(ref, rendered, "photometric_loss");
  Image out = lambda_dssim != 0.0
                  ? ssim_backward(ref, rendered, -lambda_dssim * upstream)
                  : Image(ref.height, ref.width, ref.channels);
  const double s = (1.0 - lambda_dssim) * upstream / static_cast<double>(ref.size());
  for (size_t i = 0; i < ref.size(); ++i)
    out.data[i] += s * sign(rendered.data[i] - ref.data[i]);
  return out;
}

ValidMask valid_mask(const PriorFrame& prior) {
  require_same_shape(prior.depth_star, prior.confidence, "valid_mask");
  require_same_shape(prior.depth_star, prior.instrument_mask, "valid_mask");
  ValidMask out;
  double cmax = 0;
  for (double v : prior.confidence.data) cmax = std::max(cmax, v);
  out.tau = std::max(0.01, 0.5 * cmax);
  out.mask = Image(prior.depth_star.height, prior.depth_star.width, 1);
  long set = 0;
  for (int y = 0; y < out.mask.height; ++y)
    for (int x = 0; x < out.mask.width; ++x) {
      const double d = prior.depth_star.at(y, x);
      const bool ok = prior.confidence.at(y, x) >= out.tau &&
                      d >= prior.d_min && d <= prior.d_max &&
                      prior.instrument_mask.at(y, x) == 0.0;
      out.mask.at(y, x) = ok ? 1.0 : 0.0;
      set += ok;
    }
  out.fraction = static_cast<double>(set) / static_cast<double>(out.mask.size());
  return out;
}

NormalizedDepth normalize_depth(const Image& depth, const Image& mask) {
  require_same_shape(depth, mask, "normalize_depth");
  NormalizedDepth out;
  for (int y = 0; y < depth.height; ++y)
    for (int x = 0; x < depth.width; ++x) {
      if (!in_mask(mask, y, x)) continue;
      const double v = depth.at(y, x);
      const int flat = y * depth.width + x;
      if (out.argmin < 0 || v < out.min_val) {
        out.min_val = v;
        out.argmin = flat;
      }
      if (out.argmax < 0 || v > out.max_val) {
        out.max_val = v;
        out.argmax = flat;
      }
    }
  if (out.argmin < 0 || out.max_val == out.min_val) {
    out.degenerate = true;
    out.map = Image(depth.height, depth.width, 1);
    return out;
  }
  out.map = Image(depth.height, depth.width, 1);
  const double range = out.max_val - out.min_val;
  for (int y = 0; y < depth.height; ++y)
    for (int x = 0; x < depth.width; ++x) {
      const double n = (depth.at(y, x) - out.min_val) / range;
      out.map.at(y, x) = in_mask(mask, y, x) ? n : std::clamp(n, 0.0, 1.0);
    }
  return out;
}

Image normalize_depth_backward(const Image& depth, const Image& mask,
                               const NormalizedDepth& result, const Image& dn) {
  Image out(depth.height, depth.width, 1);
  if (result.degenerate) return out;
  const double range = result.max_val - result.min_val;
  double s0 = 0, s1 = 0;  // sums of dn and dn * normalized over live pixels
  for (int y = 0; y < depth.height; ++y)
    for (int x = 0; x < depth.width; ++x) {
      const double g = dn.at(y, x);
      if (g == 0) continue;
      const double n = (depth.at(y, x) - result.min_val) / range;
      // Out-of-mask pixels saturated by the clamp are constant in the inputs.
      if (!in_mask(mask, y, x) && (n <= 0.0 || n >= 1.0)) continue;
      out.at(y, x) += g / range;
      s0 += g;
      s1 += g * n;
    }
  out.data[result.argmin] += (s1 - s0) / range;
  out.data[result.argmax] -= s1 / range;
  return out;
}

double silog_loss(const Image& dhat_n, const Image& dstar_n, const Image& mask,
                  double beta, double epsilon) {
  require_same_shape(dhat_n, dstar_n, "silog_loss");
  require_same_shape(dhat_n, mask, "silog_loss");
  double sum = 0, sum2 = 0;
  long n = 0;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) {
      if (!in_mask(mask, y, x)) continue;
      const double g = std::log(dhat_n.at(y, x) + epsilon) -
                       std::log(dstar_n.at(y, x) + epsilon);
      sum += g;
      sum2 += g * g;
      ++n;
    }
  if (n == 0) throw DataError("silog_loss: no valid pixels");
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  return 10.0 * std::sqrt(std::max(var + beta * mean * mean, 0.0));
}

Image silog_backward(const Image& dhat_n, const Image& dstar_n,
                     const Image& mask, double beta, double epsilon,
                     double upstream) {
  double sum = 0, sum2 = 0;
  long n = 0;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) {
      if (!in_mask(mask, y, x)) continue;
      const double g = std::log(dhat_n.at(y, x) + epsilon) -
                       std::log(dstar_n.at(y, x) + epsilon);
      sum += g;
      sum2 += g * g;
      ++n;
    }
  Image out(mask.height, mask.width, 1);
  if (n == 0) return out;
  const double mean = sum / n;
  const double inner = std::max(sum2 / n - mean * mean + beta * mean * mean, 0.0);
  if (inner < 1e-24) return out;  // flat at the minimum
  const double front = upstream * 10.0 / (std::sqrt(inner) * n);
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) {
      if (!in_mask(mask, y, x)) continue;
      const double g = std::log(dhat_n.at(y, x) + epsilon) -
                       std::log(dstar_n.at(y, x) + epsilon);
      out.at(y, x) = front * ((g - mean) + beta * mean) / (dhat_n.at(y, x) + epsilon);
    }
  return out;
}

double grad_loss(const Image& dhat, const Image& dstar, const Image& mask) {
  require_same_shape(dhat, dstar, "grad_loss");
  require_same_shape(dhat, mask, "grad_loss");
  double sum = 0;
  long n = 0;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) {
      if (!in_mask(mask, y, x)) continue;
      // forward differences; the last row/column difference is defined as 0
      const double gxh = x + 1 < mask.width ? dhat.at(y, x + 1) - dhat.at(y, x) : 0;
      const double gxs = x + 1 < mask.width ? dstar.at(y, x + 1) - dstar.at(y, x) : 0;
      const double gyh = y + 1 < mask.height ? dhat.at(y + 1, x) - dhat.at(y, x) : 0;
      const double gys = y + 1 < mask.height ? dstar.at(y + 1, x) - dstar.at(y, x) : 0;
      sum += std::abs(gxh - gxs) + std::abs(gyh - gys);
      ++n;
    }
  if (n == 0) throw DataError("grad_loss: no valid pixels");
  return sum / n;
}

Image grad_loss_backward(const Image& dhat, const Image& dstar,
                         const Image& mask, double upstream) {
  long n = 0;
  for (double v : mask.data) n += v != 0.0;
  Image out(mask.height, mask.width, 1);
  if (n == 0) return out;
  const double s = upstream / n;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) {
      if (!in_mask(mask, y, x)) continue;
      if (x + 1 < mask.width) {
        const double d = (dhat.at(y, x + 1) - dhat.at(y, x)) -
                         (dstar.at(y, x + 1) - dstar.at(y, x));
        const double g = s * sign(d);
        out.at(y, x + 1) += g;
        out.at(y, x) -= g;
      }
      if (y + 1 < mask.height) {
        const double d = (dhat.at(y + 1, x) - dhat.at(y, x)) -
                         (dstar.at(y + 1, x) - dstar.at(y, x));
        const double g = s * sign(d);
        out.at(y + 1, x) += g;
        out.at(y, x) -= g;
      }
    }
  return out;
}

double schedule_weight(double base, int t, int t_warm, double w_max) {
  if (t_warm <= 0) throw UsageError("schedule_weight: t_warm must be positive");
  const double ramp = std::min(1.0, static_cast<double>(t) / t_warm);
  return base * ramp * w_max;
}

LossReport geo_loss(const Image& ref, const Image& rendered_rgb,
                    const Image& rendered_depth, const PriorFrame& prior,
                    const ScheduleConfig& cfg, int t) {
  LossReport rep;
  rep.photo = photometric_loss(ref, rendered_rgb, cfg.lambda_dssim);
  double total = 0;
  if (std::isfinite(rep.photo)) total += rep.photo;

  const ValidMask vm = valid_mask(prior);
  rep.valid_fraction = vm.fraction;
  rep.priors_active = vm.fraction >= 0.1;
  rep.w_si = schedule_weight(cfg.lambda_si0, t, cfg.t_warm, cfg.w_max);
  rep.w_grad = schedule_weight(cfg.lambda_grad0, t, cfg.t_warm, cfg.w_max);
  if (rep.priors_active) {
    const NormalizedDepth nh = normalize_depth(rendered_depth, vm.mask);
    const NormalizedDepth ns = normalize_depth(prior.depth_star, vm.mask);
    if (!nh.degenerate && !ns.degenerate) {
      rep.silog = silog_loss(nh.map, ns.map, vm.mask, cfg.beta, cfg.epsilon);
      rep.grad = grad_loss(nh.map, ns.map, vm.mask);
      if (std::isfinite(rep.silog)) total += rep.w_si * rep.silog;
      if (std::isfinite(rep.grad)) total += rep.w_grad * rep.grad;
    }
  }
  rep.total = total;
  return rep;
}

double opacity_entropy(const std::vector<double>& alphas) {
  if (alphas.empty()) return 0;
  double sum = 0;
  for (double a : alphas) {
    const double c = std::clamp(a, 1e-6, 1.0 - 1e-6);
    sum += c * std::log(c) + (1.0 - c) * std::log(1.0 - c);
  }
  return -sum / static_cast<double>(alphas.size());
}

std::vector<double> opacity_entropy_backward(const std::vector<double>& alphas,
                                             double upstream) {
  std::vector<double> out(alphas.size(), 0.0);
  if (alphas.empty()) return out;
  const double s = -upstream / static_cast<double>(alphas.size());
  for (size_t i = 0; i < alphas.size(); ++i) {
    const double a = alphas[i];
    if (a < 1e-6 || a > 1.0 - 1e-6) continue;  // clamp plateau
    out[i] = s * (std::log(a) - std::log(1.0 - a));
  }
  return out;
}

VelocityGraph build_velocity_graph(const std::vector<Eigen::Vector3d>& positions,
                                   int k, int subsample, uint64_t seed) {
  VelocityGraph graph;
  const int n = static_cast<int>(positions.size());
  if (n < 2 || k < 1) return graph;
  k = std::min(k, n - 1);

  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  if (subsample > 0 && n > subsample) {
    std::mt19937_64 rng(seed);
    for (int i = 0; i < subsample; ++i) {
      const int j = i + static_cast<int>(uniform_index(rng, n - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(subsample);
    std::sort(idx.begin(), idx.end());
  }
  graph.eval = std::move(idx);

  graph.neighbors.resize(graph.eval.size());
  std::vector<std::pair<double, int>> dist;
  dist.reserve(n - 1);
  for (size_t e = 0; e < graph.eval.size(); ++e) {
    const int i = graph.eval[e];
    dist.clear();
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      dist.emplace_back((positions[i] - positions[j]).squaredNorm(), j);
    }
    // ties resolved toward the lower index so the graph is reproducible
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    graph.neighbors[e].resize(k);
    for (int j = 0; j < k; ++j) graph.neighbors[e][j] = dist[j].second;
  }
  return graph;
}

double velocity_coherence_eval(const VelocityGraph& graph,
                               const std::vector<Eigen::Vector3d>& velocities) {
  if (graph.eval.empty()) return 0;
  double total = 0;
  for (size_t e = 0; e < graph.eval.size(); ++e) {
    const Eigen::Vector3d& vi = velocities[graph.eval[e]];
    double inner = 0;
    for (int j : graph.neighbors[e])
      inner += (vi - velocities[j]).cwiseAbs().sum();
    total += inner / static_cast<double>(graph.neighbors[e].size());
  }
  return total / static_cast<double>(graph.eval.size());
}

std::vector<Eigen::Vector3d> velocity_coherence_backward(
    const VelocityGraph& graph, const std::vector<Eigen::Vector3d>& velocities,
    double upstream) {
  std::vector<Eigen::Vector3d> out(velocities.size(), Eigen::Vector3d::Zero());
  if (graph.eval.empty()) return out;
  const double outer = upstream / static_cast<double>(graph.eval.size());
  for (size_t e = 0; e < graph.eval.size(); ++e) {
    const int i = graph.eval[e];
    const double s = outer / static_cast<double>(graph.neighbors[e].size());
    for (int j : graph.neighbors[e])
      for (int c = 0; c < 3; ++c) {
        const double g = s * sign(velocities[i][c] - velocities[j][c]);
        out[i][c] += g;
        out[j][c] -= g;
      }
  }
  return out;
}

double velocity_coherence(const std::vector<Eigen::Vector3d>& centers_t,
                          const std::vector<Eigen::Vector3d>& centers_prev,
                          int k, int subsample, uint64_t seed) {
  if (centers_t.size() != centers_prev.size())
    throw DataError("velocity_coherence: center sets differ in length");
  if (centers_t.size() < 2) return 0;
  std::vector<Eigen::Vector3d> v(centers_t.size());
  for (size_t i = 0; i < v.size(); ++i) v[i] = centers_t[i] - centers_prev[i];
  const VelocityGraph graph =
      build_velocity_graph(centers_t, k, subsample, seed);
  return velocity_coherence_eval(graph, v);
}

}  // namespace g2t
