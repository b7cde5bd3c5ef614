#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace flowpatch {

// Every recoverable failure in the library surfaces as this type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense interleaved raster with a fixed channel count.
///
/// Row-major, channels interleaved, origin at the top-left pixel. Frames,
/// masks and flow vectors are all instances of this template.
template <typename T, int Channels>
class Image {
  static_assert(Channels >= 1);

 public:
  using value_type = T;
  static constexpr int channels = Channels;

  Image() = default;
  Image(int width, int height, T fill = T{})
      : width_(width), height_(height) {
    if (width < 0 || height < 0) throw Error("image: negative dimensions");
    data_.assign(static_cast<std::size_t>(width) * height * Channels, fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width_) * height_;
  }
  bool empty() const { return data_.empty(); }

  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  template <typename U, int C>
  bool same_geometry(const Image<U, C>& other) const {
    return width_ == other.width() && height_ == other.height();
  }

  T& at(int x, int y, int c = 0) {
    assert(contains(x, y) && c >= 0 && c < Channels);
    return data_[index(x, y) + c];
  }
  const T& at(int x, int y, int c = 0) const {
    assert(contains(x, y) && c >= 0 && c < Channels);
    return data_[index(x, y) + c];
  }

  std::span<T> pixel(int x, int y) {
    return {data_.data() + index(x, y), Channels};
  }
  std::span<const T> pixel(int x, int y) const {
    return {data_.data() + index(x, y), Channels};
  }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  bool operator==(const Image&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * width_ + x) * Channels;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Color frame, RGB samples in [0,1].
using Frame = Image<double, 3>;
/// Single real-valued channel (warped masks, error magnitudes).
using Plane = Image<double, 1>;
/// Binary raster: 1 = hole, 0 = valid.
using Mask = Image<std::uint8_t, 1>;

/// Per-pixel displacement in pixels plus a validity flag.
class FlowField {
 public:
  FlowField() = default;
  FlowField(int width, int height, double u = 0.0, double v = 0.0)
      : vectors_(width, height), valid_(width, height, 1) {
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        vectors_.at(x, y, 0) = u;
        vectors_.at(x, y, 1) = v;
      }
    }
  }

  int width() const { return vectors_.width(); }
  int height() const { return vectors_.height(); }

  double& u(int x, int y) { return vectors_.at(x, y, 0); }
  double u(int x, int y) const { return vectors_.at(x, y, 0); }
  double& v(int x, int y) { return vectors_.at(x, y, 1); }
  double v(int x, int y) const { return vectors_.at(x, y, 1); }

  bool valid(int x, int y) const { return valid_.at(x, y) != 0; }
  void set_valid(int x, int y, bool flag) { valid_.at(x, y) = flag ? 1 : 0; }

  Image<double, 2>& vectors() { return vectors_; }
  const Image<double, 2>& vectors() const { return vectors_; }
  Mask& validity() { return valid_; }
  const Mask& validity() const { return valid_; }

  template <typename U, int C>
  bool same_geometry(const Image<U, C>& other) const {
    return vectors_.same_geometry(other);
  }
  bool same_geometry(const FlowField& other) const {
    return vectors_.same_geometry(other.vectors_);
  }

  bool operator==(const FlowField&) const = default;

 private:
  Image<double, 2> vectors_;
  Mask valid_;
};

/// Frames and their hole masks, all of one geometry.
struct Sequence {
  std::vector<Frame> frames;
  std::vector<Mask> masks;

  int length() const { return static_cast<int>(frames.size()); }
  int width() const { return frames.empty() ? 0 : frames.front().width(); }
  int height() const { return frames.empty() ? 0 : frames.front().height(); }

  void validate() const {
    if (frames.empty()) throw Error("sequence: no frames");
    if (frames.size() != masks.size()) {
      throw Error("sequence: count mismatch (" + std::to_string(frames.size()) +
                  " frames, " + std::to_string(masks.size()) + " masks)");
    }
    for (std::size_t t = 0; t < frames.size(); ++t) {
      if (!frames[t].same_geometry(frames.front()) ||
          !masks[t].same_geometry(frames.front())) {
        throw Error("sequence: geometry mismatch at index " +
                    std::to_string(t));
      }
    }
  }
};

template <typename A, typename B>
void require_same_geometry(const A& a, const B& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(std::string(what) + ": geometry mismatch (" +
                std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                " vs " + std::to_string(b.width()) + "x" +
                std::to_string(b.height()) + ")");
  }
}

// Mask algebra. All operands must share geometry.

inline std::size_t count(const Mask& m) {
  return static_cast<std::size_t>(
      std::count_if(m.data().begin(), m.data().end(),
                    [](std::uint8_t v) { return v != 0; }));
}

inline bool any(const Mask& m) {
  return std::any_of(m.data().begin(), m.data().end(),
                     [](std::uint8_t v) { return v != 0; });
}

template <typename Op>
Mask combine(const Mask& a, const Mask& b, Op op) {
  require_same_geometry(a, b, "mask op");
  Mask out(a.width(), a.height());
  auto da = a.data();
  auto db = b.data();
  auto dout = out.data();
  for (std::size_t i = 0; i < dout.size(); ++i) {
    dout[i] = op(da[i] != 0, db[i] != 0) ? 1 : 0;
  }
  return out;
}

inline Mask mask_union(const Mask& a, const Mask& b) {
  return combine(a, b, [](bool x, bool y) { return x || y; });
}
inline Mask mask_intersect(const Mask& a, const Mask& b) {
  return combine(a, b, [](bool x, bool y) { return x && y; });
}
inline Mask mask_subtract(const Mask& a, const Mask& b) {
  return combine(a, b, [](bool x, bool y) { return x && !y; });
}

inline bool is_subset(const Mask& a, const Mask& b) {
  require_same_geometry(a, b, "mask subset");
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) {
    if (da[i] && !db[i]) return false;
  }
  return true;
}

inline void clamp_unit(Frame& f) {
  for (double& s : f.data()) s = std::clamp(s, 0.0, 1.0);
}

}  // namespace flowpatch
