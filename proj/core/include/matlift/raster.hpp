#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "matlift/error.hpp"

namespace matlift {

/// Row-major H×W×C image. Pixel (x, y) has x to the right and y down.
template <typename T>
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, int channels = 1, T fill = T{})
      : width_(width), height_(height), channels_(channels) {
    if (width < 0 || height < 0 || channels < 1) {
      fail(ErrorCode::kInvalidArgument, "raster dimensions must be non-negative");
    }
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
  bool empty() const { return data_.empty(); }
  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  bool same_shape(const Raster& o) const {
    return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
  }
  template <typename U>
  bool same_extent(const Raster<U>& o) const {
    return width_ == o.width() && height_ == o.height();
  }

  T& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  const T& at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> row(int y) {
    return {data_.data() + static_cast<std::size_t>(y) * width_ * channels_,
            static_cast<std::size_t>(width_) * channels_};
  }
  std::span<const T> row(int y) const {
    return {data_.data() + static_cast<std::size_t>(y) * width_ * channels_,
            static_cast<std::size_t>(width_) * channels_};
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<T> data_;
};

/// Binary selection mask; values are 0 or 1.
struct BinaryMask {
  Raster<std::uint8_t> pixels;
  std::string view_id;

  BinaryMask() = default;
  BinaryMask(int width, int height, std::string id = {})
      : pixels(width, height, 1, 0), view_id(std::move(id)) {}

  int width() const { return pixels.width(); }
  int height() const { return pixels.height(); }
  bool get(int x, int y) const { return pixels.at(x, y) != 0; }
  void set(int x, int y, bool v) { pixels.at(x, y) = v ? 1 : 0; }
  std::size_t count() const {
    std::size_t n = 0;
    for (auto v : pixels.data()) n += v != 0;
    return n;
  }
  bool same_shape(const BinaryMask& o) const { return pixels.same_shape(o.pixels); }

  friend bool operator==(const BinaryMask& a, const BinaryMask& b) { return a.pixels == b.pixels; }
};

}  // namespace matlift
