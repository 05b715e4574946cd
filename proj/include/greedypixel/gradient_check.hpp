#pragma once

#include <cmath>
#include <vector>

#include "greedypixel/image.hpp"
#include "greedypixel/model.hpp"

namespace greedypixel {

// Compares the model's analytic CW-loss gradient against central finite
// differences, coordinate by coordinate. Returns the max relative error over
// coordinates whose analytic gradient exceeds 1e-8 in magnitude; 0 if none
// qualify. Probe points are clamped to [0,1], so use inputs at least `step`
// away from the boundary for a faithful comparison.
inline double gradient_check(const Model& model, const Image& x, int y, double step) {
  if (!model.has_gradient()) {
    throw CapabilityError("gradient_check requires a model with gradients");
  }
  const Tensor analytic = model.cw_loss_gradient(x, y);

  double max_rel = 0.0;
  std::vector<double> probe = x.data();
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double g = analytic.data[i];
    if (std::abs(g) <= 1e-8) continue;

    const double orig = probe[i];
    probe[i] = clamp01(orig + step);
    const double up = cw_loss(model.logits(Image(x.shape(), probe)), y);
    probe[i] = clamp01(orig - step);
    const double down = cw_loss(model.logits(Image(x.shape(), probe)), y);
    probe[i] = orig;

    const double fd = (up - down) / (2.0 * step);
    const double rel = std::abs(fd - g) / std::abs(g);
    if (rel > max_rel) max_rel = rel;
  }
  return max_rel;
}

}  // namespace greedypixel
