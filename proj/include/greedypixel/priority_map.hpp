#pragma once

// Pixel-priority ordering. The gradient-sourced map ranks pixels by the L1
// aggregate of the surrogate's CW-loss gradient, so high-saliency pixels are
// searched first; the random map is the seeded baseline. Also hosts the
// alignment and coverage diagnostics used to study map quality.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "greedypixel/image.hpp"
#include "greedypixel/model.hpp"
#include "greedypixel/rng.hpp"

namespace greedypixel {

enum class MapSource { Gradient, Random };

// Per-pixel saliency: g is the raw C×H×W gradient, gprime(h,w) = Σ_c |g(c,h,w)|.
struct SaliencyField {
  Tensor g;
  std::vector<double> gprime;  // H×W, row-major

  static SaliencyField from_gradient(Tensor grad) {
    SaliencyField f;
    const Shape s = grad.shape;
    f.gprime.assign(static_cast<std::size_t>(s.h) * s.w, 0.0);
    for (int c = 0; c < s.c; ++c) {
      for (int h = 0; h < s.h; ++h) {
        for (int w = 0; w < s.w; ++w) {
          f.gprime[static_cast<std::size_t>(h) * s.w + w] += std::abs(grad.at(c, h, w));
        }
      }
    }
    f.g = std::move(grad);
    return f;
  }
};

// A permutation of all H·W pixel coordinates. For gradient maps the
// aggregated saliency is non-increasing along `order`; equal-saliency pixels
// (including zero-gradient ones, which sort last) stay in row-major order.
struct PriorityMap {
  std::vector<PixelCoord> order;
  MapSource source = MapSource::Gradient;
  std::uint64_t generated_at_step = 0;  // pixel-step counter when computed

  std::size_t size() const { return order.size(); }
};

inline PriorityMap priority_map_from_saliency(const SaliencyField& field, int h, int w,
                                              std::uint64_t generated_at_step = 0) {
  PriorityMap map;
  map.source = MapSource::Gradient;
  map.generated_at_step = generated_at_step;
  map.order.reserve(static_cast<std::size_t>(h) * w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) map.order.push_back(PixelCoord{r, c});
  }
  // stable sort on a row-major base order = descending saliency with
  // row-major tie-break
  std::stable_sort(map.order.begin(), map.order.end(),
                   [&](const PixelCoord& a, const PixelCoord& b) {
                     return field.gprime[static_cast<std::size_t>(a.h) * w + a.w] >
                            field.gprime[static_cast<std::size_t>(b.h) * w + b.w];
                   });
  return map;
}

// Costs zero target-model queries: only the surrogate is differentiated.
inline PriorityMap build_priority_map(const Model& surrogate, const Image& x, int y,
                                      std::uint64_t generated_at_step = 0) {
  if (!surrogate.has_gradient()) {
    throw CapabilityError("priority map needs a surrogate with input gradients");
  }
  const SaliencyField field = SaliencyField::from_gradient(surrogate.cw_loss_gradient(x, y));
  return priority_map_from_saliency(field, x.height(), x.width(), generated_at_step);
}

// Uniform random permutation via Fisher-Yates driven by splitmix64.
inline PriorityMap random_priority_map(int h, int w, std::uint64_t seed,
                                       std::uint64_t generated_at_step = 0) {
  if (h < 1 || w < 1) throw DimensionError("priority map needs positive dimensions");
  PriorityMap map;
  map.source = MapSource::Random;
  map.generated_at_step = generated_at_step;
  map.order.reserve(static_cast<std::size_t>(h) * w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) map.order.push_back(PixelCoord{r, c});
  }
  SplitMix64 g(seed);
  for (std::size_t i = map.order.size() - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(g.next_below(i + 1));
    std::swap(map.order[i], map.order[j]);
  }
  return map;
}

// --- alignment diagnostics ---------------------------------------------------

// Global cosine between two flattened tensors; 0 if either is all-zero.
inline double cosine_alignment_global(const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape) throw DimensionError("cosine alignment needs matching shapes");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    dot += a.data[i] * b.data[i];
    na += a.data[i] * a.data[i];
    nb += b.data[i] * b.data[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Per-pixel cosines over the C-vectors at each position. Pixels where either
// vector is zero get value 0 and a degenerate flag.
struct PixelAlignment {
  std::vector<double> values;        // H×W, row-major
  std::vector<std::uint8_t> degenerate;  // 1 where a zero vector was involved
};

inline PixelAlignment cosine_alignment_per_pixel(const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape) throw DimensionError("cosine alignment needs matching shapes");
  const Shape s = a.shape;
  PixelAlignment out;
  out.values.assign(static_cast<std::size_t>(s.h) * s.w, 0.0);
  out.degenerate.assign(out.values.size(), 0);
  for (int h = 0; h < s.h; ++h) {
    for (int w = 0; w < s.w; ++w) {
      double dot = 0.0, na = 0.0, nb = 0.0;
      for (int c = 0; c < s.c; ++c) {
        const double va = a.at(c, h, w), vb = b.at(c, h, w);
        dot += va * vb;
        na += va * va;
        nb += vb * vb;
      }
      const std::size_t i = static_cast<std::size_t>(h) * s.w + w;
      if (na == 0.0 || nb == 0.0) {
        out.degenerate[i] = 1;
      } else {
        out.values[i] = dot / (std::sqrt(na) * std::sqrt(nb));
      }
    }
  }
  return out;
}

// --- coverage mathematics ----------------------------------------------------

// Expected number of uniform-with-replacement draws to visit all M pixels:
// M · H_M with H_M the exact harmonic sum. A fixed map needs exactly M.
inline double coverage_expectation(std::uint64_t m) {
  if (m < 1) throw DimensionError("coverage expectation needs M >= 1");
  double harmonic = 0.0;
  for (std::uint64_t k = 1; k <= m; ++k) harmonic += 1.0 / static_cast<double>(k);
  return static_cast<double>(m) * harmonic;
}

// Empirical mean of the same quantity over seeded trials.
inline double coverage_simulation(std::uint64_t m, std::uint64_t trials, std::uint64_t seed) {
  if (m < 1 || trials < 1) throw DimensionError("coverage simulation needs M, trials >= 1");
  double total = 0.0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    SplitMix64 g(SplitMix64::derive(seed, t));
    std::vector<std::uint8_t> seen(m, 0);
    std::uint64_t remaining = m, draws = 0;
    while (remaining > 0) {
      ++draws;
      const std::uint64_t p = g.next_below(m);
      if (!seen[p]) {
        seen[p] = 1;
        --remaining;
      }
    }
    total += static_cast<double>(draws);
  }
  return total / static_cast<double>(trials);
}

}  // namespace greedypixel
