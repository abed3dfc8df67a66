#include "g2t/ssim.hpp"

#include <array>
#include <cmath>
#include <vector>

namespace g2t {

namespace {

constexpr int kRadius = 5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::array<double, 2 * kRadius + 1> window() {
  std::array<double, 2 * kRadius + 1> w{};
  double sum = 0;
  for (int i = -kRadius; i <= kRadius; ++i) {
    w[i + kRadius] = std::exp(-i * i / (2.0 * 1.5 * 1.5));
    sum += w[i + kRadius];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Mirror indexing without edge repetition: -1 -> 1, n -> n-2.
int reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

// One channel as a dense row-major plane.
using Plane = std::vector<double>;

Plane extract(const Image& img, int ch) {
  Plane p(static_cast<size_t>(img.height) * img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      p[static_cast<size_t>(y) * img.width + x] = img.at(y, x, ch);
  return p;
}

Plane blur(const Plane& in, int h, int w) {
  const auto k = window();
  Plane tmp(in.size()), out(in.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0;
      for (int d = -kRadius; d <= kRadius; ++d)
        s += k[d + kRadius] * in[static_cast<size_t>(y) * w + reflect(x + d, w)];
      tmp[static_cast<size_t>(y) * w + x] = s;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0;
      for (int d = -kRadius; d <= kRadius; ++d)
        s += k[d + kRadius] * tmp[static_cast<size_t>(reflect(y + d, h)) * w + x];
      out[static_cast<size_t>(y) * w + x] = s;
    }
  return out;
}

// Adjoint of blur(): scatter through the vertical pass first, then the
// horizontal one (reverse of the forward composition).
Plane blur_adjoint(const Plane& g, int h, int w) {
  const auto k = window();
  Plane tmp(g.size(), 0.0), out(g.size(), 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double v = g[static_cast<size_t>(y) * w + x];
      if (v == 0) continue;
      for (int d = -kRadius; d <= kRadius; ++d)
        tmp[static_cast<size_t>(reflect(y + d, h)) * w + x] += k[d + kRadius] * v;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double v = tmp[static_cast<size_t>(y) * w + x];
      if (v == 0) continue;
      for (int d = -kRadius; d <= kRadius; ++d)
        out[static_cast<size_t>(y) * w + reflect(x + d, w)] += k[d + kRadius] * v;
    }
  return out;
}

struct ChannelStats {
  Plane mu_x, mu_y, x2, y2, xy;  // x2/y2/xy are blurred second moments
};

ChannelStats stats(const Plane& x, const Plane& y, int h, int w) {
  ChannelStats s;
  Plane xx(x.size()), yy(x.size()), xy(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  s.mu_x = blur(x, h, w);
  s.mu_y = blur(y, h, w);
  s.x2 = blur(xx, h, w);
  s.y2 = blur(yy, h, w);
  s.xy = blur(xy, h, w);
  return s;
}

}  // namespace

double ssim_mean(const Image& x, const Image& y) {
  require_same_shape(x, y, "ssim");
  const int h = x.height, w = x.width;
  double total = 0;
  for (int ch = 0; ch < x.channels; ++ch) {
    const Plane px = extract(x, ch), py = extract(y, ch);
    const ChannelStats s = stats(px, py, h, w);
    for (size_t i = 0; i < px.size(); ++i) {
      const double mx = s.mu_x[i], my = s.mu_y[i];
      const double vx = s.x2[i] - mx * mx;
      const double vy = s.y2[i] - my * my;
      const double cxy = s.xy[i] - mx * my;
      const double a1 = 2 * mx * my + kC1, a2 = 2 * cxy + kC2;
      const double b1 = mx * mx + my * my + kC1, b2 = vx + vy + kC2;
      total += (a1 * a2) / (b1 * b2);
    }
  }
  return total / (static_cast<double>(h) * w * x.channels);
}

Image ssim_backward(const Image& x, const Image& y, double upstream) {
  require_same_shape(x, y, "ssim");
  const int h = x.height, w = x.width;
  const double scale = upstream / (static_cast<double>(h) * w * x.channels);
  Image out(h, w, x.channels);
  for (int ch = 0; ch < x.channels; ++ch) {
    const Plane px = extract(x, ch), py = extract(y, ch);
    const ChannelStats s = stats(px, py, h, w);
    // Per-pixel partials of the SSIM value w.r.t. mu_y, var_y, cov_xy.
    Plane f_mu(px.size()), f_var(px.size()), f_cov(px.size());
    for (size_t i = 0; i < px.size(); ++i) {
      const double mx = s.mu_x[i], my = s.mu_y[i];
      const double vx = s.x2[i] - mx * mx;
      const double vy = s.y2[i] - my * my;
      const double cxy = s.xy[i] - mx * my;
      const double a1 = 2 * mx * my + kC1, a2 = 2 * cxy + kC2;
      const double b1 = mx * mx + my * my + kC1, b2 = vx + vy + kC2;
      const double ssim = (a1 * a2) / (b1 * b2);
      f_mu[i] = 2 * mx * a2 / (b1 * b2) - ssim * 2 * my / b1;
      f_var[i] = -ssim / b2;
      f_cov[i] = 2 * a1 / (b1 * b2);
    }
    // mu_y = B y;   var_y = B(y^2) - mu_y^2;   cov = B(xy) - mu_x mu_y
    // dy = B^T(f_mu - 2 mu_y f_var - mu_x f_cov) + 2 y B^T(f_var) + x B^T(f_cov)
    Plane direct(px.size());
    for (size_t i = 0; i < px.size(); ++i)
      direct[i] = f_mu[i] - 2 * s.mu_y[i] * f_var[i] - s.mu_x[i] * f_cov[i];
    const Plane t1 = blur_adjoint(direct, h, w);
    const Plane t2 = blur_adjoint(f_var, h, w);
    const Plane t3 = blur_adjoint(f_cov, h, w);
    for (int yy = 0; yy < h; ++yy)
      for (int xx = 0; xx < w; ++xx) {
        const size_t i = static_cast<size_t>(yy) * w + xx;
        out.at(yy, xx, ch) = scale * (t1[i] + 2 * py[i] * t2[i] + px[i] * t3[i]);
      }
  }
  return out;
}

}  // namespace g2t
