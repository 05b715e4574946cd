#pragma once

// Built-in differentiable reference networks. These are deliberately small:
// they stand in for pretrained targets so attack experiments run in seconds
// on a laptop, while still exposing exact analytic input gradients.

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "greedypixel/image.hpp"
#include "greedypixel/model.hpp"
#include "greedypixel/rng.hpp"

namespace greedypixel {

enum class Arch { Linear, TinyConv };

inline std::string arch_name(Arch a) {
  return a == Arch::Linear ? "linear" : "tinyconv";
}

// logits = W · flatten(x) + b, with W stored row-major K×(C·H·W).
class LinearNet final : public Model {
 public:
  LinearNet(int k, Shape shape, std::uint64_t seed,
            std::vector<double> weights, std::vector<double> bias)
      : k_(k), shape_(shape), seed_(seed),
        w_(std::move(weights)), b_(std::move(bias)) {
    if (k_ < 2) throw ModelError("linear net needs at least 2 classes");
    if (w_.size() != static_cast<std::size_t>(k_) * shape_.volume() ||
        b_.size() != static_cast<std::size_t>(k_)) {
      throw DimensionError("linear net weight shapes inconsistent");
    }
  }

  static LinearNet random(int k, Shape shape, std::uint64_t seed) {
    SplitMix64 g(seed);
    const std::size_t n = shape.volume();
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    std::vector<double> w(static_cast<std::size_t>(k) * n);
    for (double& v : w) v = g.next_in(-1.0, 1.0) * scale;
    std::vector<double> b(k);
    for (double& v : b) v = g.next_in(-0.1, 0.1);
    return LinearNet(k, shape, seed, std::move(w), std::move(b));
  }

  int class_count() const override { return k_; }
  Shape input_shape() const override { return shape_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<double>& weights() const { return w_; }
  const std::vector<double>& bias() const { return b_; }

  std::vector<double> logits(const Image& x) const override {
    check_shape(x.shape());
    const std::size_t n = shape_.volume();
    std::vector<double> out(b_);
    for (int k = 0; k < k_; ++k) {
      const double* row = w_.data() + static_cast<std::size_t>(k) * n;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += row[i] * x.data()[i];
      out[k] += acc;
    }
    return out;
  }

  bool has_gradient() const override { return true; }

  // d/dx [Z_y - Z_{i*}] = W_y - W_{i*}, with i* the runner-up at x.
  Tensor cw_loss_gradient(const Image& x, int y) const override {
    check_shape(x.shape());
    const int r = cw_runner_up(logits(x), y);
    const std::size_t n = shape_.volume();
    Tensor g(shape_);
    const double* wy = w_.data() + static_cast<std::size_t>(y) * n;
    const double* wr = w_.data() + static_cast<std::size_t>(r) * n;
    for (std::size_t i = 0; i < n; ++i) g.data[i] = wy[i] - wr[i];
    return g;
  }

 private:
  void check_shape(const Shape& s) const {
    if (s != shape_) {
      throw DimensionError("input shape " + s.str() + " != net shape " + shape_.str());
    }
  }

  int k_;
  Shape shape_;
  std::uint64_t seed_;
  std::vector<double> w_;  // K × (C·H·W), row-major
  std::vector<double> b_;  // K
};

// One 3×3 same-padding convolution (F filters) → ReLU → global average pool
// → dense K×F. The input gradient is exact backpropagation; the ReLU
// subgradient at exactly zero pre-activation is taken as 0.
class TinyConvNet final : public Model {
 public:
  TinyConvNet(int k, Shape shape, int filters, std::uint64_t seed,
              std::vector<double> conv_w, std::vector<double> conv_b,
              std::vector<double> fc_w, std::vector<double> fc_b)
      : k_(k), shape_(shape), f_(filters), seed_(seed),
        conv_w_(std::move(conv_w)), conv_b_(std::move(conv_b)),
        fc_w_(std::move(fc_w)), fc_b_(std::move(fc_b)) {
    if (k_ < 2) throw ModelError("tinyconv net needs at least 2 classes");
    if (f_ < 1) throw ModelError("tinyconv net needs at least 1 filter");
    if (conv_w_.size() != static_cast<std::size_t>(f_) * shape_.c * 9 ||
        conv_b_.size() != static_cast<std::size_t>(f_) ||
        fc_w_.size() != static_cast<std::size_t>(k_) * f_ ||
        fc_b_.size() != static_cast<std::size_t>(k_)) {
      throw DimensionError("tinyconv net weight shapes inconsistent");
    }
  }

  static TinyConvNet random(int k, Shape shape, int filters, std::uint64_t seed) {
    SplitMix64 g(seed);
    const double conv_scale = 1.0 / std::sqrt(9.0 * shape.c);
    std::vector<double> cw(static_cast<std::size_t>(filters) * shape.c * 9);
    for (double& v : cw) v = g.next_in(-1.0, 1.0) * conv_scale;
    std::vector<double> cb(filters);
    for (double& v : cb) v = g.next_in(-0.1, 0.1);
    const double fc_scale = 1.0 / std::sqrt(static_cast<double>(filters));
    std::vector<double> fw(static_cast<std::size_t>(k) * filters);
    for (double& v : fw) v = g.next_in(-1.0, 1.0) * fc_scale;
    std::vector<double> fb(k);
    for (double& v : fb) v = g.next_in(-0.1, 0.1);
    return TinyConvNet(k, shape, filters, seed, std::move(cw), std::move(cb),
                       std::move(fw), std::move(fb));
  }

  int class_count() const override { return k_; }
  Shape input_shape() const override { return shape_; }
  int filters() const { return f_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<double>& conv_weights() const { return conv_w_; }
  const std::vector<double>& conv_bias() const { return conv_b_; }
  const std::vector<double>& fc_weights() const { return fc_w_; }
  const std::vector<double>& fc_bias() const { return fc_b_; }

  std::vector<double> logits(const Image& x) const override {
    check_shape(x.shape());
    const std::vector<double> gap = pooled_activations(x.data());
    std::vector<double> out(fc_b_);
    for (int k = 0; k < k_; ++k) {
      for (int f = 0; f < f_; ++f) out[k] += fc_w_[static_cast<std::size_t>(k) * f_ + f] * gap[f];
    }
    return out;
  }

  bool has_gradient() const override { return true; }

  Tensor cw_loss_gradient(const Image& x, int y) const override {
    check_shape(x.shape());
    const int H = shape_.h, W = shape_.w, C = shape_.c;
    const int r = cw_runner_up(logits(x), y);
    const double inv_hw = 1.0 / (static_cast<double>(H) * W);

    Tensor g(shape_);
    for (int f = 0; f < f_; ++f) {
      const double dgap = fc_w_[static_cast<std::size_t>(y) * f_ + f] -
                          fc_w_[static_cast<std::size_t>(r) * f_ + f];
      if (dgap == 0.0) continue;
      for (int h = 0; h < H; ++h) {
        for (int w = 0; w < W; ++w) {
          if (pre_activation(x.data(), f, h, w) <= 0.0) continue;  // ReLU gate
          const double dz = dgap * inv_hw;
          for (int c = 0; c < C; ++c) {
            for (int dh = 0; dh < 3; ++dh) {
              const int hh = h + dh - 1;
              if (hh < 0 || hh >= H) continue;
              for (int dw = 0; dw < 3; ++dw) {
                const int ww = w + dw - 1;
                if (ww < 0 || ww >= W) continue;
                g.at(c, hh, ww) += dz * kernel(f, c, dh, dw);
              }
            }
          }
        }
      }
    }
    return g;
  }

 private:
  void check_shape(const Shape& s) const {
    if (s != shape_) {
      throw DimensionError("input shape " + s.str() + " != net shape " + shape_.str());
    }
  }

  double kernel(int f, int c, int dh, int dw) const {
    return conv_w_[((static_cast<std::size_t>(f) * shape_.c + c) * 3 + dh) * 3 + dw];
  }

  double pre_activation(const std::vector<double>& x, int f, int h, int w) const {
    const int H = shape_.h, W = shape_.w, C = shape_.c;
    double z = conv_b_[f];
    for (int c = 0; c < C; ++c) {
      for (int dh = 0; dh < 3; ++dh) {
        const int hh = h + dh - 1;
        if (hh < 0 || hh >= H) continue;
        for (int dw = 0; dw < 3; ++dw) {
          const int ww = w + dw - 1;
          if (ww < 0 || ww >= W) continue;
          z += kernel(f, c, dh, dw) * x[(static_cast<std::size_t>(c) * H + hh) * W + ww];
        }
      }
    }
    return z;
  }

  std::vector<double> pooled_activations(const std::vector<double>& x) const {
    const int H = shape_.h, W = shape_.w;
    const double inv_hw = 1.0 / (static_cast<double>(H) * W);
    std::vector<double> gap(f_, 0.0);
    for (int f = 0; f < f_; ++f) {
      double acc = 0.0;
      for (int h = 0; h < H; ++h) {
        for (int w = 0; w < W; ++w) {
          const double z = pre_activation(x, f, h, w);
          if (z > 0.0) acc += z;
        }
      }
      gap[f] = acc * inv_hw;
    }
    return gap;
  }

  int k_;
  Shape shape_;
  int f_;
  std::uint64_t seed_;
  std::vector<double> conv_w_;  // F × C × 3 × 3
  std::vector<double> conv_b_;  // F
  std::vector<double> fc_w_;    // K × F
  std::vector<double> fc_b_;    // K
};

}  // namespace greedypixel
