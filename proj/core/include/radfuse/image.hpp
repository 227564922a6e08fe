#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "radfuse/error.hpp"

namespace radfuse {

/// Row-major W x H grid of values with a per-pixel validity flag.
///
/// Invalid pixels keep whatever value they were given; they are ignored by
/// every statistic in the library. The value is retained so that codecs can
/// write back exactly what they read (e.g. a -1 sentinel).
template <class Unit>
class BasicDepthMap {
 public:
  BasicDepthMap() = default;
  BasicDepthMap(int width, int height)
      : width_(width),
        height_(height),
        values_(checked_size(width, height), 0.0),
        mask_(values_.size(), 0) {}

  static BasicDepthMap filled(int width, int height, double value) {
    BasicDepthMap m(width, height);
    for (std::size_t i = 0; i < m.size(); ++i) m.set(i, value);
    return m;
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  std::size_t index(int u, int v) const noexcept {
    return static_cast<std::size_t>(v) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(u);
  }
  bool in_bounds(int u, int v) const noexcept { return u >= 0 && v >= 0 && u < width_ && v < height_; }

  double at(int u, int v) const { return values_[index(u, v)]; }
  double at(std::size_t i) const { return values_[i]; }
  bool valid(int u, int v) const { return mask_[index(u, v)] != 0; }
  bool valid(std::size_t i) const { return mask_[i] != 0; }

  void set(int u, int v, double value) { set(index(u, v), value); }
  void set(std::size_t i, double value) {
    values_[i] = value;
    mask_[i] = 1;
  }
  void invalidate(int u, int v) { mask_[index(u, v)] = 0; }
  void invalidate(std::size_t i) { mask_[i] = 0; }
  /// Sets the raw value without touching validity.
  void set_raw(std::size_t i, double value) { values_[i] = value; }

  const std::vector<double>& values() const noexcept { return values_; }
  const std::vector<std::uint8_t>& mask() const noexcept { return mask_; }

  std::size_t valid_count() const noexcept {
    std::size_t n = 0;
    for (auto m : mask_) n += m != 0;
    return n;
  }

  bool same_shape(int width, int height) const noexcept { return width_ == width && height_ == height; }
  template <class Other>
  bool same_shape(const BasicDepthMap<Other>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const BasicDepthMap&, const BasicDepthMap&) = default;

 private:
  static std::size_t checked_size(int width, int height) {
    require(width >= 1 && height >= 1, ErrorCategory::kParameter, "image dimensions must be >= 1");
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
  std::vector<std::uint8_t> mask_;
};

struct MetersTag {};
struct InverseMetersTag {};

/// Depth in meters.
using DepthImage = BasicDepthMap<MetersTag>;
/// Inverse depth in 1/meters.
using InverseDepthImage = BasicDepthMap<InverseMetersTag>;

/// Elementwise reciprocal on valid pixels.
inline InverseDepthImage invert(const DepthImage& depth) {
  InverseDepthImage out(depth.width(), depth.height());
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (depth.valid(i) && depth.at(i) > 0.0) out.set(i, 1.0 / depth.at(i));
  }
  return out;
}

inline void require_same_shape(const auto& a, const auto& b, const char* what) {
  require(a.width() == b.width() && a.height() == b.height(), ErrorCategory::kInput,
          std::string("shape mismatch: ") + what);
}

}  // namespace radfuse
