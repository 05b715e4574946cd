#pragma once

#include <vector>

#include "greedypixel/error.hpp"
#include "greedypixel/image.hpp"

namespace greedypixel {

// Margin loss on logits: Z_y - max_{i != y} Z_i. Nonnegative means the model
// still predicts y; negative means the attack succeeded. Ties in the max are
// broken toward the lowest index so the loss is deterministic.
inline double cw_loss(const std::vector<double>& logits, int y) {
  if (logits.size() < 2) {
    throw ModelError("cw_loss needs at least 2 classes");
  }
  if (y < 0 || y >= static_cast<int>(logits.size())) {
    throw ModelError("label out of range");
  }
  int best = -1;
  for (int i = 0; i < static_cast<int>(logits.size()); ++i) {
    if (i == y) continue;
    if (best < 0 || logits[i] > logits[best]) best = i;
  }
  return logits[y] - logits[best];
}

// Index of the runner-up class used by the CW loss (lowest index on ties).
inline int cw_runner_up(const std::vector<double>& logits, int y) {
  if (logits.size() < 2) {
    throw ModelError("cw_runner_up needs at least 2 classes");
  }
  int best = -1;
  for (int i = 0; i < static_cast<int>(logits.size()); ++i) {
    if (i == y) continue;
    if (best < 0 || logits[i] > logits[best]) best = i;
  }
  return best;
}

inline int argmax(const std::vector<double>& logits) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(logits.size()); ++i) {
    if (logits[i] > logits[best]) best = i;
  }
  return best;
}

// A logits oracle. Evaluation must be pure and safe to call concurrently from
// multiple threads on the same instance. Gradient access is optional; models
// that expose it act as surrogates (or as white-box targets).
class Model {
 public:
  virtual ~Model() = default;

  virtual int class_count() const = 0;
  virtual Shape input_shape() const = 0;
  virtual std::vector<double> logits(const Image& x) const = 0;

  // Candidate batches may be evaluated together; the default just loops.
  // Implementations (e.g. the remote client) may override to batch or
  // parallelize, but the caller reduces results in submission order either way.
  virtual std::vector<std::vector<double>> logits_batch(const std::vector<Image>& xs) const {
    std::vector<std::vector<double>> out;
    out.reserve(xs.size());
    for (const Image& x : xs) out.push_back(logits(x));
    return out;
  }

  virtual bool has_gradient() const { return false; }

  // Gradient of the CW loss w.r.t. the input, shape C×H×W.
  virtual Tensor cw_loss_gradient(const Image& /*x*/, int /*y*/) const {
    throw CapabilityError("model does not expose input gradients");
  }

  double loss(const Image& x, int y) const { return cw_loss(logits(x), y); }
};

}  // namespace greedypixel
