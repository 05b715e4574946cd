#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "greedypixel/error.hpp"

namespace greedypixel {

struct Shape {
  int c = 0;
  int h = 0;
  int w = 0;

  bool operator==(const Shape&) const = default;
  std::size_t volume() const {
    return static_cast<std::size_t>(c) * h * w;
  }
  std::string str() const {
    return std::to_string(c) + "x" + std::to_string(h) + "x" + std::to_string(w);
  }
};

struct PixelCoord {
  int h = 0;
  int w = 0;
  auto operator<=>(const PixelCoord&) const = default;
};

// Unconstrained C×H×W tensor of reals, planar row-major layout:
// index(c,h,w) = (c*H + h)*W + w. Used for perturbations and gradients.
struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0) : shape(s), data(s.volume(), fill) {}
  Tensor(Shape s, std::vector<double> d) : shape(s), data(std::move(d)) {
    if (data.size() != shape.volume()) {
      throw DimensionError("tensor data length " + std::to_string(data.size()) +
                           " does not match shape " + shape.str());
    }
  }

  std::size_t index(int c, int h, int w) const {
    return (static_cast<std::size_t>(c) * shape.h + h) * shape.w + w;
  }
  double at(int c, int h, int w) const { return data[index(c, h, w)]; }
  double& at(int c, int h, int w) { return data[index(c, h, w)]; }
};

// An image: values constrained to [0,1]. Immutable after construction.
class Image {
 public:
  Image() = default;
  Image(Shape s, std::vector<double> d) : shape_(s), data_(std::move(d)) {
    if (data_.size() != shape_.volume()) {
      throw DimensionError("image data length " + std::to_string(data_.size()) +
                           " does not match shape " + shape_.str());
    }
    for (double v : data_) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw DomainError("image value " + std::to_string(v) + " outside [0,1]");
      }
    }
  }
  Image(Shape s, double fill) : Image(s, std::vector<double>(s.volume(), fill)) {}

  const Shape& shape() const { return shape_; }
  int channels() const { return shape_.c; }
  int height() const { return shape_.h; }
  int width() const { return shape_.w; }
  const std::vector<double>& data() const { return data_; }

  std::size_t index(int c, int h, int w) const {
    return (static_cast<std::size_t>(c) * shape_.h + h) * shape_.w + w;
  }
  double at(int c, int h, int w) const { return data_[index(c, h, w)]; }

  bool operator==(const Image&) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// L∞-bounded perturbation plus the set of touched pixel positions.
// `touched` is derived from `delta`: exactly the (h,w) with a nonzero channel.
class Perturbation {
 public:
  Perturbation(double epsilon, Tensor delta)
      : epsilon_(epsilon), delta_(std::move(delta)) {
    if (!(epsilon > 0.0 && epsilon <= 1.0)) {
      throw ConfigError("epsilon must lie in (0,1], got " + std::to_string(epsilon));
    }
    const Shape& s = delta_.shape;
    for (double v : delta_.data) {
      if (std::abs(v) > epsilon_) {
        throw DomainError("perturbation exceeds epsilon bound");
      }
    }
    for (int h = 0; h < s.h; ++h) {
      for (int w = 0; w < s.w; ++w) {
        for (int c = 0; c < s.c; ++c) {
          if (delta_.at(c, h, w) != 0.0) {
            touched_.insert(PixelCoord{h, w});
            break;
          }
        }
      }
    }
  }

  double epsilon() const { return epsilon_; }
  const Tensor& delta() const { return delta_; }
  const std::set<PixelCoord>& touched() const { return touched_; }

 private:
  double epsilon_;
  Tensor delta_;
  std::set<PixelCoord> touched_;
};

inline double clamp01(double v) {
  return std::min(1.0, std::max(0.0, v));
}

// x' = clamp(x + delta, 0, 1), elementwise.
inline Image apply_perturbation(const Image& x, const Tensor& delta) {
  if (delta.shape != x.shape()) {
    throw DimensionError("perturbation shape " + delta.shape.str() +
                         " does not match image shape " + x.shape().str());
  }
  std::vector<double> out(x.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = clamp01(x.data()[i] + delta.data[i]);
  }
  return Image(x.shape(), std::move(out));
}

inline Image apply_perturbation(const Image& x, const Perturbation& d) {
  return apply_perturbation(x, d.delta());
}

// Clamp a raw candidate perturbation value so that x + result stays in [0,1].
// Computed in delta space: clamp(raw, -x, 1-x). The magnitude can only
// shrink, so |result| <= |raw| holds exactly in floating point and the L∞
// invariant of Perturbation stays literally true at image boundaries.
inline double effective_delta(double pixel_value, double raw_delta) {
  return std::min(1.0 - pixel_value, std::max(-pixel_value, raw_delta));
}

}  // namespace greedypixel
