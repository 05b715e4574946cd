#pragma once

// Seeded synthetic classification task for end-to-end experiments: the label
// is the channel with the largest saliency-weighted mean. Per-pixel weights
// are deliberately uneven so that pixel ordering matters; a handful of heavy
// pixels carry most of each logit, and the input gradient recovers exactly
// that weighting.

#include <cstdint>
#include <memory>
#include <vector>

#include "greedypixel/image.hpp"
#include "greedypixel/nets.hpp"
#include "greedypixel/rng.hpp"

namespace greedypixel {

// Pixel weight field: 0.05 + 3u^3 rescaled to mean 1. The cubic pushes most
// of the mass into few pixels.
inline std::vector<double> saliency_weights(int h, int w, std::uint64_t seed) {
  if (h < 1 || w < 1) throw DimensionError("saliency weights need positive dims");
  SplitMix64 g(seed);
  std::vector<double> a(static_cast<std::size_t>(h) * w);
  double total = 0.0;
  for (double& v : a) {
    const double u = g.next_double();
    v = 0.05 + 3.0 * u * u * u;
    total += v;
  }
  const double mean = total / static_cast<double>(a.size());
  for (double& v : a) v /= mean;
  return a;
}

// Linear model whose logit k is the alpha-weighted mean of channel k:
//   Z_k = sum_{h,w} alpha(h,w) * x(k,h,w) / (H*W),  bias 0.
// Class count equals the channel count.
inline LinearNet make_dominant_channel_model(Shape shape, std::uint64_t seed) {
  if (shape.c < 2) throw ConfigError("dominant-channel task needs at least 2 channels");
  const std::vector<double> alpha =
      saliency_weights(shape.h, shape.w, SplitMix64::derive(seed, 0));
  const double inv_m = 1.0 / (static_cast<double>(shape.h) * shape.w);
  const std::size_t n = shape.volume();
  std::vector<double> w(static_cast<std::size_t>(shape.c) * n, 0.0);
  for (int k = 0; k < shape.c; ++k) {
    for (int h = 0; h < shape.h; ++h) {
      for (int wd = 0; wd < shape.w; ++wd) {
        w[static_cast<std::size_t>(k) * n +
          (static_cast<std::size_t>(k) * shape.h + h) * shape.w + wd] =
            alpha[static_cast<std::size_t>(h) * shape.w + wd] * inv_m;
      }
    }
  }
  return LinearNet(shape.c, shape, seed, std::move(w),
                   std::vector<double>(shape.c, 0.0));
}

struct SyntheticSample {
  Image x;
  int label = 0;
  double margin = 0.0;  // clean margin loss of the sample under the task model
};

// Noise image whose weighted channel means are pinned: the label channel sits
// margin above the runner-up at 0.5, remaining channels at 0.49. The margin is
// drawn from [0.002, 0.012], small enough that a few pixel flips at typical
// epsilon close it.
inline SyntheticSample make_dominant_channel_sample(Shape shape, std::uint64_t model_seed,
                                                    std::uint64_t sample_seed) {
  if (shape.c < 2) throw ConfigError("dominant-channel task needs at least 2 channels");
  const std::vector<double> alpha =
      saliency_weights(shape.h, shape.w, SplitMix64::derive(model_seed, 0));
  SplitMix64 g(sample_seed);

  SyntheticSample s;
  s.label = static_cast<int>(g.next_below(static_cast<std::uint64_t>(shape.c)));
  s.margin = g.next_in(0.002, 0.012);

  std::vector<double> data(shape.volume());
  for (double& v : data) v = 0.5 + 0.15 * (2.0 * g.next_double() - 1.0);

  const std::size_t m = static_cast<std::size_t>(shape.h) * shape.w;
  const int runner = (s.label + 1) % shape.c;
  for (int c = 0; c < shape.c; ++c) {
    double weighted = 0.0;
    for (std::size_t p = 0; p < m; ++p) weighted += alpha[p] * data[c * m + p];
    weighted /= static_cast<double>(m);
    double want = 0.49;
    if (c == s.label) want = 0.5 + s.margin;
    else if (c == runner) want = 0.5;
    const double shift = want - weighted;  // mean alpha is 1, so this shifts exactly
    for (std::size_t p = 0; p < m; ++p) data[c * m + p] += shift;
  }
  s.x = Image(shape, std::move(data));
  return s;
}

}  // namespace greedypixel
