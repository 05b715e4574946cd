#pragma once

// Attack-quality measurement: success rate, SSIM, sparsity statistics and the
// grayscale perturbation visualization.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "greedypixel/attack.hpp"
#include "greedypixel/image.hpp"

namespace greedypixel {

inline double asr(const std::vector<bool>& successes) {
  if (successes.empty()) throw MetricError("success rate of an empty sample set is undefined");
  std::size_t hits = 0;
  for (bool s : successes) hits += s ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(successes.size());
}

inline double asr(const std::vector<AttackResult>& results) {
  std::vector<bool> s;
  s.reserve(results.size());
  for (const auto& r : results) s.push_back(r.success);
  return asr(s);
}

struct SsimParams {
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;  // unit-scaled images
  int window = 8;

  double c1() const { return (k1 * dynamic_range) * (k1 * dynamic_range); }
  double c2() const { return (k2 * dynamic_range) * (k2 * dynamic_range); }
};

// Mean structural similarity over all window positions (stride 1, uniform
// window, population moments), computed per channel and then averaged across
// channels. Single scale, no Gaussian weighting, so values are comparable
// only against this implementation.
inline double ssim(const Image& x, const Image& y, const SsimParams& params = {}) {
  if (x.shape() != y.shape()) throw DimensionError("ssim needs images of identical shape");
  const int win = params.window;
  if (win < 1) throw ConfigError("ssim window must be positive");
  if (x.height() < win || x.width() < win) {
    throw SizeError("ssim window " + std::to_string(win) + " exceeds image " +
                    std::to_string(x.height()) + "x" + std::to_string(x.width()));
  }
  const double c1 = params.c1();
  const double c2 = params.c2();
  const double inv_n = 1.0 / (static_cast<double>(win) * win);

  double channel_sum = 0.0;
  for (int c = 0; c < x.channels(); ++c) {
    double window_sum = 0.0;
    std::uint64_t windows = 0;
    for (int h0 = 0; h0 + win <= x.height(); ++h0) {
      for (int w0 = 0; w0 + win <= x.width(); ++w0) {
        double sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
        for (int dh = 0; dh < win; ++dh) {
          for (int dw = 0; dw < win; ++dw) {
            const double a = x.at(c, h0 + dh, w0 + dw);
            const double b = y.at(c, h0 + dh, w0 + dw);
            sx += a;
            sy += b;
            sxx += a * a;
            syy += b * b;
            sxy += a * b;
          }
        }
        const double mx = sx * inv_n;
        const double my = sy * inv_n;
        const double vx = sxx * inv_n - mx * mx;
        const double vy = syy * inv_n - my * my;
        const double cov = sxy * inv_n - mx * my;
        window_sum += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
                      ((mx * mx + my * my + c1) * (vx + vy + c2));
        ++windows;
      }
    }
    channel_sum += window_sum / static_cast<double>(windows);
  }
  return channel_sum / x.channels();
}

// Normalizes a three-channel perturbation from [eps_min, eps_max] to [0,1]
// per channel, then collapses to one channel with the NTSC luma weights
// 0.299 R + 0.587 G + 0.114 B.
inline Tensor perturbation_grayscale(const Tensor& delta, double eps_min, double eps_max) {
  if (delta.shape.c != 3) {
    throw DimensionError("grayscale visualization needs a 3-channel perturbation");
  }
  if (!(eps_max > eps_min)) throw DomainError("degenerate normalization range");
  const double span = eps_max - eps_min;
  for (double v : delta.data) {
    if (v < eps_min || v > eps_max) {
      throw DomainError("perturbation value outside [eps_min, eps_max]");
    }
  }
  Tensor gray(Shape{1, delta.shape.h, delta.shape.w});
  for (int h = 0; h < delta.shape.h; ++h) {
    for (int w = 0; w < delta.shape.w; ++w) {
      const double r = (delta.at(0, h, w) - eps_min) / span;
      const double g = (delta.at(1, h, w) - eps_min) / span;
      const double b = (delta.at(2, h, w) - eps_min) / span;
      gray.at(0, h, w) = 0.299 * r + 0.587 * g + 0.114 * b;
    }
  }
  return gray;
}

struct SparsityStats {
  std::uint64_t l0 = 0;  // pixels with any channel differing beyond 1e-12
  double linf = 0.0;     // max absolute channel difference
};

inline SparsityStats sparsity_stats(const Image& x, const Image& adversarial) {
  if (x.shape() != adversarial.shape()) {
    throw DimensionError("sparsity stats need images of identical shape");
  }
  SparsityStats out;
  for (int h = 0; h < x.height(); ++h) {
    for (int w = 0; w < x.width(); ++w) {
      bool modified = false;
      for (int c = 0; c < x.channels(); ++c) {
        const double d = std::abs(adversarial.at(c, h, w) - x.at(c, h, w));
        if (d > 1e-12) modified = true;
        if (d > out.linf) out.linf = d;
      }
      if (modified) ++out.l0;
    }
  }
  return out;
}

struct SampleMetrics {
  std::string id;
  bool success = false;
  std::uint64_t queries = 0;
  std::uint64_t l0 = 0;
  double linf = 0.0;
  double ssim = 0.0;
  bool has_ssim = false;
};

struct MetricsReport {
  double asr = 0.0;
  double mean_queries = 0.0;
  double mean_ssim = 0.0;  // over samples that carry an image pair
  double mean_l0 = 0.0;
  double mean_linf = 0.0;
  std::vector<SampleMetrics> samples;
};

inline MetricsReport aggregate_metrics(const std::vector<SampleMetrics>& samples) {
  if (samples.empty()) throw MetricError("metrics over an empty sample set are undefined");
  MetricsReport r;
  r.samples = samples;
  double q = 0.0, l0 = 0.0, linf = 0.0, s = 0.0;
  std::size_t hits = 0, with_ssim = 0;
  for (const auto& m : samples) {
    hits += m.success ? 1 : 0;
    q += static_cast<double>(m.queries);
    l0 += static_cast<double>(m.l0);
    linf += m.linf;
    if (m.has_ssim) {
      s += m.ssim;
      ++with_ssim;
    }
  }
  const double n = static_cast<double>(samples.size());
  r.asr = static_cast<double>(hits) / n;
  r.mean_queries = q / n;
  r.mean_l0 = l0 / n;
  r.mean_linf = linf / n;
  r.mean_ssim = with_ssim ? s / static_cast<double>(with_ssim) : 0.0;
  return r;
}

}  // namespace greedypixel
