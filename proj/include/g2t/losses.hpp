#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "g2t/types.hpp"

namespace g2t {

// Per-frame external depth prior: estimated depth, its confidence, and the
// instrument mask (1 marks tool pixels to exclude).
struct PriorFrame {
  Image depth_star;
  Image confidence;
  Image instrument_mask;
  double d_min = 0;
  double d_max = 0;
};

struct ScheduleConfig {
  double lambda_si0 = 0.3;
  double lambda_grad0 = 0.1;
  int t_warm = 300;
  double w_max = 1.0;
  double lambda_dssim = 0.2;
  double beta = 0.15;
  // Floor inside the depth logs. Normalized maps put their minimum at exactly
  // 0, so the curvature of log(n + epsilon) near that pixel is ~1/epsilon^2;
  // 1e-2 keeps central differences at h=1e-4 inside the gradient contract
  // while still only acting as a guard for log(0).
  double epsilon = 1e-2;
  double lambda_ent = 0.01;
  double lambda_vel = 0.01;
  int k_nn = 4;
  int vel_subsample = 512;
};

struct LossReport {
  double photo = 0;
  double silog = 0;
  double grad = 0;
  double entropy = 0;
  double velocity = 0;
  double w_si = 0;
  double w_grad = 0;
  double valid_fraction = 0;
  bool priors_active = false;
  double total = 0;
};

struct ValidMask {
  Image mask;  // 1-channel, values 0/1
  double tau = 0;
  double fraction = 0;
};

struct NormalizedDepth {
  Image map;
  bool degenerate = false;
  // flat indices of the masked extrema, first occurrence in scan order
  int argmin = -1;
  int argmax = -1;
  double min_val = 0;
  double max_val = 0;
};

double photometric_loss(const Image& ref, const Image& rendered,
                        double lambda_dssim);
// d(upstream * photometric) / d rendered
Image photometric_backward(const Image& ref, const Image& rendered,
                           double lambda_dssim, double upstream);

ValidMask valid_mask(const PriorFrame& prior);

NormalizedDepth normalize_depth(const Image& depth, const Image& mask);
// Adjoint of the min-max map. `dn` is dL/d normalized; clamp-saturated
// out-of-mask pixels pass nothing through.
Image normalize_depth_backward(const Image& depth, const Image& mask,
                               const NormalizedDepth& result, const Image& dn);

double silog_loss(const Image& dhat_n, const Image& dstar_n, const Image& mask,
                  double beta, double epsilon);
Image silog_backward(const Image& dhat_n, const Image& dstar_n,
                     const Image& mask, double beta, double epsilon,
                     double upstream);

double grad_loss(const Image& dhat, const Image& dstar, const Image& mask);
Image grad_loss_backward(const Image& dhat, const Image& dstar,
                         const Image& mask, double upstream);

double schedule_weight(double base, int t, int t_warm, double w_max);

// Photometric plus warm-up-weighted depth-prior terms, with the 10%
// valid-pixel gate and non-finite terms dropped. entropy/velocity stay 0;
// the trainer folds them in on top.
LossReport geo_loss(const Image& ref, const Image& rendered_rgb,
                    const Image& rendered_depth, const PriorFrame& prior,
                    const ScheduleConfig& cfg, int t);

double opacity_entropy(const std::vector<double>& alphas);
std::vector<double> opacity_entropy_backward(const std::vector<double>& alphas,
                                             double upstream);

// Neighborhoods for the velocity-coherence term, frozen so an objective can
// be re-evaluated (finite differences) against a fixed graph.
struct VelocityGraph {
  std::vector<int> eval;                    // ascending primitive indices
  std::vector<std::vector<int>> neighbors;  // parallel to eval
};

VelocityGraph build_velocity_graph(const std::vector<Eigen::Vector3d>& positions,
                                   int k, int subsample, uint64_t seed);
double velocity_coherence_eval(const VelocityGraph& graph,
                               const std::vector<Eigen::Vector3d>& velocities);
std::vector<Eigen::Vector3d> velocity_coherence_backward(
    const VelocityGraph& graph, const std::vector<Eigen::Vector3d>& velocities,
    double upstream);

// Convenience wrapper matching the published operation: velocities are the
// per-primitive displacements between the two center sets.
double velocity_coherence(const std::vector<Eigen::Vector3d>& centers_t,
                          const std::vector<Eigen::Vector3d>& centers_prev,
                          int k, int subsample, uint64_t seed);

}  // namespace g2t
