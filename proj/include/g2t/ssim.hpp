#pragma once

#include "g2t/types.hpp"

namespace g2t {

// Mean SSIM over pixels and channels. 11x11 Gaussian window (sigma 1.5),
// C1 = 0.01^2, C2 = 0.03^2, mirror padding at the borders.
double ssim_mean(const Image& x, const Image& y);

// d(upstream * ssim_mean(x, y)) / dy. x is the fixed reference.
Image ssim_backward(const Image& x, const Image& y, double upstream);

}  // namespace g2t
