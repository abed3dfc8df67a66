#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace g2t {

// Exit-code mapping: UsageError -> 2, DataError -> 3, NumericalError -> 4.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Row-major H x W x C raster of doubles, C in {1, 3}.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;

  Image() = default;
  Image(int h, int w, int c, double fill = 0.0)
      : height(h), width(w), channels(c),
        data(static_cast<size_t>(h) * w * c, fill) {}

  double& at(int y, int x, int c = 0) {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  double at(int y, int x, int c = 0) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  size_t size() const { return data.size(); }
  bool same_shape(const Image& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

inline void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b))
    throw DataError(std::string(what) + ": shape mismatch (" +
                    std::to_string(a.height) + "x" + std::to_string(a.width) + "x" +
                    std::to_string(a.channels) + " vs " + std::to_string(b.height) +
                    "x" + std::to_string(b.width) + "x" + std::to_string(b.channels) +
                    ")");
}

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace g2t
