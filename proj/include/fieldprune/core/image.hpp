#pragma once

#include <cassert>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace fieldprune {

/// Dense row-major image grid with interleaved channels.
template <typename T, int Channels = 1>
class Image {
 public:
  static_assert(Channels >= 1);

  Image() = default;
  Image(int width, int height, T fill = T{})
      : w_(width), h_(height),
        data_(static_cast<std::size_t>(width) * height * Channels, fill) {
    assert(width >= 0 && height >= 0);
  }

  int width() const { return w_; }
  int height() const { return h_; }
  static constexpr int channels() { return Channels; }
  bool empty() const { return data_.empty(); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(w_) * h_; }

  T& at(int x, int y, int c = 0) {
    assert(in_bounds(x, y) && c >= 0 && c < Channels);
    return data_[(static_cast<std::size_t>(y) * w_ + x) * Channels + c];
  }
  const T& at(int x, int y, int c = 0) const {
    assert(in_bounds(x, y) && c >= 0 && c < Channels);
    return data_[(static_cast<std::size_t>(y) * w_ + x) * Channels + c];
  }

  bool in_bounds(int x, int y) const {
    return x >= 0 && x < w_ && y >= 0 && y < h_;
  }
  bool same_size(int width, int height) const {
    return w_ == width && h_ == height;
  }
  template <typename U, int C>
  bool same_size(const Image<U, C>& other) const {
    return same_size(other.width(), other.height());
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::size_t size() const { return data_.size(); }

  void fill(T value) { data_.assign(data_.size(), value); }

  friend bool operator==(const Image& a, const Image& b) {
    return a.w_ == b.w_ && a.h_ == b.h_ && a.data_ == b.data_;
  }

 private:
  int w_ = 0;
  int h_ = 0;
  std::vector<T> data_;
};

using Image3d = Image<double, 3>;
using Image1d = Image<double, 1>;
using Image1f = Image<float, 1>;
using Image8 = Image<std::uint8_t, 1>;
using Image16 = Image<std::uint16_t, 1>;
using Image32 = Image<std::uint32_t, 1>;

}  // namespace fieldprune
