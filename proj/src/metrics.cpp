#include "g2t/metrics.hpp"

#include <cmath>

#include "g2t/ssim.hpp"

namespace g2t {

double psnr(const Image& a, const Image& b) {
  require_same_shape(a, b, "psnr");
  double mse = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.size());
  if (mse < 1e-12) return 120.0;
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Image& a, const Image& b) { return ssim_mean(a, b); }

}  // namespace g2t
