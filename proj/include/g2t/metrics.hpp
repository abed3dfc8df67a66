#pragma once

#include "g2t/types.hpp"

namespace g2t {

// 10*log10(1/MSE) over all pixels and channels; MSE below 1e-12 reports the
// 120 dB cap.
double psnr(const Image& a, const Image& b);

// Re-export of the shared SSIM so metric users need not pull in the losses.
double ssim(const Image& a, const Image& b);

}  // namespace g2t
