#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "faceflow/error.hpp"

namespace faceflow {

/// Dense row-major 2-D array. The backing store always holds exactly
/// width * height elements.
template <typename T>
class Raster {
 public:
  using value_type = T;

  Raster() = default;

  Raster(int width, int height, T fill = T{})
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(checked_area(width, height)), fill) {}

  Raster(int width, int height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (data_.size() != static_cast<std::size_t>(checked_area(width, height)))
      throw Error(ErrorKind::DimensionMismatch,
                  "raster data length " + std::to_string(data_.size()) + " != " +
                      std::to_string(width) + "x" + std::to_string(height));
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }

  /// Replicate-border access: coordinates are clamped into the raster.
  const T& clamped(int x, int y) const {
    return data_[index(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1))];
  }

  std::span<T> pixels() noexcept { return data_; }
  std::span<const T> pixels() const noexcept { return data_; }
  std::span<T> row(int y) { return {data_.data() + index(0, y), static_cast<std::size_t>(width_)}; }
  std::span<const T> row(int y) const {
    return {data_.data() + index(0, y), static_cast<std::size_t>(width_)};
  }

  const std::vector<T>& data() const noexcept { return data_; }

  bool same_shape(const auto& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  static long long checked_area(int width, int height) {
    if (width < 0 || height < 0)
      throw Error(ErrorKind::InvalidParams, "negative raster dimensions");
    return static_cast<long long>(width) * height;
  }

  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Single-channel intensity image, values normalized to [0, 1].
using Image = Raster<double>;

/// Per-pixel boolean mask. Stored as bytes to keep element references usable.
using Mask = Raster<std::uint8_t>;

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const char* what) {
  if (!a.same_shape(b))
    throw Error(ErrorKind::DimensionMismatch,
                std::string(what) + ": " + std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                    " vs " + std::to_string(b.width()) + "x" + std::to_string(b.height()));
}

/// Bilinear sample with replicate border.
inline double sample_bilinear(const Image& img, double x, double y) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const double ax = x - fx;
  const double ay = y - fy;
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  const double top = img.clamped(x0, y0) * (1.0 - ax) + img.clamped(x0 + 1, y0) * ax;
  const double bottom = img.clamped(x0, y0 + 1) * (1.0 - ax) + img.clamped(x0 + 1, y0 + 1) * ax;
  return top * (1.0 - ay) + bottom * ay;
}

}  // namespace faceflow
