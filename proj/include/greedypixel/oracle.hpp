#pragma once

// Exact reference machinery: search-space counting, exhaustive global optimum
// over sign perturbations, and a coordinate-wise local-minimum check. The
// exhaustive search is exponential in C*H*W and hard-capped; it exists to
// validate the greedy engine on small instances, not to attack anything real.

#include <cstdint>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "greedypixel/image.hpp"
#include "greedypixel/model.hpp"

namespace greedypixel {

using BigInt = boost::multiprecision::cpp_int;

enum class SpaceKind {
  Discrete,  // every 8-bit image within the eps ball: (2*floor(eps*255)+1)^(C*H*W)
  Binary,    // sign-only perturbations: 2^(C*H*W)
  PerPixel,  // candidates at one pixel: 2^C
  OnePass,   // greedy evaluations in one full sweep: H*W*2^C
};

inline BigInt count_space(SpaceKind kind, const Shape& s, double epsilon = 0.0) {
  if (s.c < 1 || s.h < 1 || s.w < 1) throw DimensionError("count_space needs positive dims");
  switch (kind) {
    case SpaceKind::Discrete: {
      if (!(epsilon > 0.0 && epsilon <= 1.0)) {
        throw DomainError("discrete space count needs epsilon in (0,1]");
      }
      // levels per channel value: itself plus floor(eps*255) 8-bit steps each way;
      // the small bias keeps k/255 inputs from rounding down
      const std::int64_t steps = static_cast<std::int64_t>(epsilon * 255.0 + 1e-9);
      BigInt base = 2 * steps + 1;
      return boost::multiprecision::pow(base, static_cast<unsigned>(s.volume()));
    }
    case SpaceKind::Binary:
      return boost::multiprecision::pow(BigInt(2), static_cast<unsigned>(s.volume()));
    case SpaceKind::PerPixel:
      return boost::multiprecision::pow(BigInt(2), static_cast<unsigned>(s.c));
    case SpaceKind::OnePass:
      return BigInt(s.h) * s.w *
             boost::multiprecision::pow(BigInt(2), static_cast<unsigned>(s.c));
  }
  throw DomainError("unknown space kind");
}

struct BruteForceResult {
  Tensor delta;  // effective (clamped) perturbation of the best state
  double loss = 0.0;
  std::uint64_t states_visited = 0;
};

// Exhaustive minimum of the margin loss over all sign assignments
// {-eps,+eps}^(C*H*W), each clamped coordinate-wise into [0,1]. Enumeration is
// lexicographic with flat coordinate 0 as the most significant bit and -eps
// ordered before +eps, so state 0 is all -eps; ties keep the earliest state.
inline BruteForceResult brute_force_global(const Model& target, const Image& x, int y,
                                           double epsilon, int max_coords = 16) {
  if (x.shape() != target.input_shape()) {
    throw DimensionError("image shape does not match target input shape");
  }
  if (!(epsilon > 0.0 && epsilon <= 1.0)) {
    throw DomainError("brute force needs epsilon in (0,1]");
  }
  const std::size_t n = x.shape().volume();
  if (n > static_cast<std::size_t>(max_coords)) {
    throw SizeError("brute force over " + std::to_string(n) +
                    " coordinates exceeds the cap of " + std::to_string(max_coords));
  }

  BruteForceResult best;
  best.delta = Tensor(x.shape());
  bool have_best = false;
  std::vector<double> buf(n);
  Tensor delta(x.shape());
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t state = 0; state < total; ++state) {
    for (std::size_t i = 0; i < n; ++i) {
      const double raw = ((state >> (n - 1 - i)) & 1) ? epsilon : -epsilon;
      const double eff = effective_delta(x.data()[i], raw);
      delta.data[i] = eff;
      buf[i] = x.data()[i] + eff;
    }
    const double loss = cw_loss(target.logits(Image(x.shape(), buf)), y);
    ++best.states_visited;
    if (!have_best || loss < best.loss) {
      have_best = true;
      best.loss = loss;
      best.delta = delta;
    }
  }
  return best;
}

struct CoordinateCheck {
  bool is_minimum = true;
  PixelCoord improving_pixel{-1, -1};  // set when a strictly better candidate exists
  double improved_loss = 0.0;
  std::uint64_t candidates_checked = 0;
};

// Confirms no single-pixel re-choice among the 2^C sign candidates can push
// the loss strictly below that of x (+) delta. Candidate enumeration matches
// the greedy engine exactly.
inline CoordinateCheck verify_coordinate_minimum(const Model& target, const Image& x,
                                                 const Tensor& delta, int y,
                                                 double epsilon) {
  if (x.shape() != delta.shape) throw DimensionError("delta shape mismatch");
  if (x.shape() != target.input_shape()) {
    throw DimensionError("image shape does not match target input shape");
  }
  const int C = x.channels();
  std::vector<double> adv(x.data());
  for (std::size_t i = 0; i < adv.size(); ++i) adv[i] += delta.data[i];
  const double base_loss = cw_loss(target.logits(Image(x.shape(), adv)), y);

  CoordinateCheck out;
  const std::uint64_t n_cand = std::uint64_t{1} << C;
  std::vector<double> buf = adv;
  for (int h = 0; h < x.height(); ++h) {
    for (int w = 0; w < x.width(); ++w) {
      for (std::uint64_t j = 0; j < n_cand; ++j) {
        for (int c = 0; c < C; ++c) {
          const double raw = ((j >> (C - 1 - c)) & 1) ? epsilon : -epsilon;
          const double base = x.at(c, h, w);
          buf[x.index(c, h, w)] = base + effective_delta(base, raw);
        }
        const double loss = cw_loss(target.logits(Image(x.shape(), buf)), y);
        ++out.candidates_checked;
        if (loss < base_loss) {
          out.is_minimum = false;
          out.improving_pixel = {h, w};
          out.improved_loss = loss;
          return out;
        }
      }
      for (int c = 0; c < C; ++c) {  // restore this pixel before moving on
        buf[x.index(c, h, w)] = adv[x.index(c, h, w)];
      }
    }
  }
  return out;
}

}  // namespace greedypixel
