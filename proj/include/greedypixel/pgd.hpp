#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "greedypixel/image.hpp"
#include "greedypixel/model.hpp"

namespace greedypixel {

// Projected gradient descent baseline: all pixels move jointly along the
// sign of the gradient, projected back to the ε-ball around the original
// input and to [0,1] after every iteration. sign(0) is 0.
inline Image pgd_attack(const Model& model, const Image& x, int y,
                        double epsilon, double step_size, int iters) {
  if (!model.has_gradient()) {
    throw CapabilityError("pgd_attack requires a model with gradients");
  }
  std::vector<double> cur = x.data();
  for (int it = 0; it < iters; ++it) {
    const Tensor g = model.cw_loss_gradient(Image(x.shape(), cur), y);
    for (std::size_t i = 0; i < cur.size(); ++i) {
      const double s = g.data[i] > 0.0 ? 1.0 : (g.data[i] < 0.0 ? -1.0 : 0.0);
      double v = cur[i] - step_size * s;
      v = std::clamp(v, x.data()[i] - epsilon, x.data()[i] + epsilon);
      cur[i] = clamp01(v);
    }
  }
  return Image(x.shape(), std::move(cur));
}

}  // namespace greedypixel
