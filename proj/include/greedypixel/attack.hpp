#pragma once

// Greedy per-pixel attack. Each pixel step exhaustively evaluates all 2^C
// sign candidates {-ε,+ε}^C at one pixel (exactly 2^C target queries),
// commits the best candidate only if it strictly lowers the loss, and walks
// pixels in priority-map order. The loss trace is non-increasing by
// construction and the query count is exactly t·2^C after t steps.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "greedypixel/image.hpp"
#include "greedypixel/model.hpp"
#include "greedypixel/priority_map.hpp"
#include "greedypixel/rng.hpp"

namespace greedypixel {

enum class ThreatModel { WhiteBoxLimited, BlackBoxLimited, BlackBoxUnlimited };

inline std::string threat_name(ThreatModel t) {
  switch (t) {
    case ThreatModel::WhiteBoxLimited: return "wb";
    case ThreatModel::BlackBoxLimited: return "bb";
    case ThreatModel::BlackBoxUnlimited: return "bb-unl";
  }
  return "?";
}

struct AttackConfig {
  double epsilon = 4.0 / 255.0;
  std::uint64_t max_queries = 20000;
  std::uint64_t refresh_period = 0;  // 0 = disabled
  ThreatModel threat = ThreatModel::BlackBoxLimited;
  MapSource map_source = MapSource::Gradient;
  std::uint64_t seed = 0;
  // Stop as soon as the loss goes negative. Disable to search for a
  // coordinate-wise minimum (e.g. for oracle comparisons).
  bool early_stop = true;
  // Refresh recomputes the saliency at the current adversarial iterate by
  // default; set to true to recompute at the clean input instead (which
  // makes every refreshed gradient map identical to the first).
  bool refresh_at_clean = false;

  void validate(int channels) const {
    if (!(epsilon > 0.0 && epsilon <= 1.0)) {
      throw ConfigError("epsilon must lie in (0,1]");
    }
    if (threat == ThreatModel::BlackBoxUnlimited && epsilon != 1.0) {
      throw ConfigError("unlimited-epsilon threat model requires epsilon = 1");
    }
    if (channels < 1 || channels > 20) {
      throw ConfigError("channel count out of supported range");
    }
    if (max_queries < (std::uint64_t{1} << channels)) {
      throw ConfigError("max_queries below the cost of a single pixel step");
    }
  }
};

struct AttackResult {
  Image adversarial;
  Tensor delta;  // effective perturbation; max |delta| <= epsilon exactly
  bool success = false;
  std::uint64_t queries_used = 0;  // candidate evaluations only, = pixel_steps * 2^C
  std::uint64_t setup_queries = 0;  // the one initial clean-loss evaluation
  std::uint64_t pixel_steps = 0;
  std::uint64_t modified_pixels = 0;
  double final_loss = 0.0;
  std::vector<double> loss_trace;  // entry 0 is the initial loss, then one per step
  bool converged = false;  // a full pass over all pixels was rejected
};

inline std::uint64_t one_pass_cost(int c, int h, int w) {
  if (c < 1 || h < 1 || w < 1) throw DimensionError("one_pass_cost needs positive dims");
  return static_cast<std::uint64_t>(h) * static_cast<std::uint64_t>(w)
         * (std::uint64_t{1} << c);
}

// Stepwise attack driver. Exposes per-step control so callers (and tests) can
// observe pixel choice, commit decisions and the map/cursor state; run()
// drives the full pipeline.
class AttackEngine {
 public:
  struct StepOutcome {
    PixelCoord pixel;
    bool committed = false;
    double loss_after = 0.0;
  };

  AttackEngine(const Model& target, const Model* surrogate, const Image& x, int y,
               const AttackConfig& config)
      : target_(target), surrogate_(surrogate), x_(x), y_(y), cfg_(config),
        delta_(x.shape()), adversarial_(x),
        touched_(static_cast<std::size_t>(x.height()) * x.width(), 0),
        rejected_(touched_.size(), 0) {
    cfg_.validate(x.channels());
    if (x.shape() != target_.input_shape()) {
      throw DimensionError("image shape " + x.shape().str() +
                           " does not match target input shape " +
                           target_.input_shape().str());
    }
    if (y_ < 0 || y_ >= target_.class_count()) {
      throw ConfigError("label out of range for target model");
    }
    if (cfg_.map_source == MapSource::Gradient && surrogate_ == nullptr) {
      if (cfg_.threat == ThreatModel::WhiteBoxLimited) {
        surrogate_ = &target_;  // white-box: the target's own gradients order pixels
      } else {
        throw ConfigError("gradient map source needs a surrogate model");
      }
    }
    // Setup query: the loss of the clean input, cached for the accept test.
    current_loss_ = cw_loss(target_.logits(adversarial_), y_);
    setup_queries_ = 1;
    trace_.push_back(current_loss_);
  }

  std::uint64_t pixel_count() const { return touched_.size(); }
  std::uint64_t pixel_steps() const { return t_; }
  std::uint64_t queries_used() const { return queries_; }
  std::uint64_t setup_queries() const { return setup_queries_; }
  double current_loss() const { return current_loss_; }
  const std::vector<double>& loss_trace() const { return trace_; }
  const Image& adversarial() const { return adversarial_; }
  const Tensor& delta() const { return delta_; }
  const PriorityMap& map() const { return map_; }
  std::uint64_t map_cursor() const { return cursor_; }
  bool success() const { return current_loss_ < 0.0; }
  bool converged() const { return rejected_count_ == touched_.size(); }
  std::uint64_t modified_pixels() const { return touched_count_; }

  std::uint64_t step_cost() const { return std::uint64_t{1} << x_.channels(); }
  bool budget_allows_step() const { return queries_ + step_cost() <= cfg_.max_queries; }

  // One pipeline iteration: refresh the map if due, then run the greedy step
  // on the next pixel in priority order.
  StepOutcome step() {
    refresh_map_if_due();
    const PixelCoord p = map_.order[cursor_ % map_.size()];
    ++cursor_;
    return step_at(p);
  }

  // Greedy strategy for a single pixel, with score-based query feedback.
  StepOutcome step_at(PixelCoord p) {
    const int C = x_.channels();
    const std::uint64_t n_cand = step_cost();

    // Candidate pixel values: the pixel's existing perturbation is zeroed,
    // then each channel gets -ε or +ε, clamped in delta space so the image
    // stays in [0,1] and |delta| <= ε holds exactly.
    std::vector<Image> candidates;
    candidates.reserve(n_cand);
    std::vector<std::vector<double>> cand_deltas(n_cand, std::vector<double>(C));
    for (std::uint64_t j = 0; j < n_cand; ++j) {
      std::vector<double> buf = adversarial_.data();
      for (int c = 0; c < C; ++c) {
        // enumeration order: channel 0 most significant, -ε before +ε
        const double raw = ((j >> (C - 1 - c)) & 1) ? cfg_.epsilon : -cfg_.epsilon;
        const double base = x_.at(c, p.h, p.w);
        const double eff = effective_delta(base, raw);
        cand_deltas[j][c] = eff;
        buf[x_.index(c, p.h, p.w)] = base + eff;
      }
      candidates.emplace_back(x_.shape(), std::move(buf));
    }

    // 2^C target queries. Batched submission is allowed; the reduction below
    // is in enumeration order regardless of how the model evaluates.
    const std::vector<std::vector<double>> logit_rows = target_.logits_batch(candidates);
    std::uint64_t best = 0;
    double best_loss = cw_loss(logit_rows[0], y_);
    for (std::uint64_t j = 1; j < n_cand; ++j) {
      const double l = cw_loss(logit_rows[j], y_);
      if (l < best_loss) {
        best_loss = l;
        best = j;
      }
    }
    queries_ += n_cand;
    ++t_;

    StepOutcome out{p, false, current_loss_};
    if (best_loss < current_loss_) {  // accept only on strict decrease
      adversarial_ = std::move(candidates[best]);
      bool nonzero = false;
      for (int c = 0; c < C; ++c) {
        delta_.at(c, p.h, p.w) = cand_deltas[best][c];
        nonzero = nonzero || cand_deltas[best][c] != 0.0;
      }
      set_touched(p, nonzero);
      current_loss_ = best_loss;
      std::fill(rejected_.begin(), rejected_.end(), 0);
      rejected_count_ = 0;
      out.committed = true;
    } else {  // reject: keep the perturbation, including the pixel's old value
      const std::size_t i = pixel_index(p);
      if (!rejected_[i]) {
        rejected_[i] = 1;
        ++rejected_count_;
      }
    }
    trace_.push_back(current_loss_);
    out.loss_after = current_loss_;
    return out;
  }

  // Full pipeline: loop until misclassification (if early_stop), coordinate
  // convergence, or the point where one more step would exceed the budget.
  AttackResult run() {
    if (!(cfg_.early_stop && success())) {
      while (budget_allows_step() && !converged()) {
        step();
        if (cfg_.early_stop && success()) break;
      }
    }
    return result();
  }

  AttackResult result() const {
    AttackResult r;
    r.adversarial = adversarial_;
    r.delta = delta_;
    r.success = success();
    r.queries_used = queries_;
    r.setup_queries = setup_queries_;
    r.pixel_steps = t_;
    r.modified_pixels = touched_count_;
    r.final_loss = current_loss_;
    r.loss_trace = trace_;
    r.converged = converged();
    return r;
  }

 private:
  std::size_t pixel_index(PixelCoord p) const {
    return static_cast<std::size_t>(p.h) * x_.width() + p.w;
  }

  void set_touched(PixelCoord p, bool on) {
    const std::size_t i = pixel_index(p);
    if (on && !touched_[i]) {
      touched_[i] = 1;
      ++touched_count_;
    } else if (!on && touched_[i]) {
      touched_[i] = 0;
      --touched_count_;
    }
  }

  void refresh_map_if_due() {
    const bool due = map_.order.empty() ||
                     (cfg_.refresh_period > 0 && t_ >= next_refresh_at_);
    if (!due) return;
    if (cfg_.map_source == MapSource::Random) {
      map_ = random_priority_map(x_.height(), x_.width(),
                                 SplitMix64::derive(cfg_.seed, refresh_count_), t_);
    } else {
      const Image& at = cfg_.refresh_at_clean ? x_ : adversarial_;
      map_ = build_priority_map(*surrogate_, at, y_, t_);
    }
    cursor_ = 0;  // restart from the most critical pixel
    ++refresh_count_;
    next_refresh_at_ = t_ + cfg_.refresh_period;
  }

  const Model& target_;
  const Model* surrogate_;
  Image x_;
  int y_;
  AttackConfig cfg_;

  Tensor delta_;
  Image adversarial_;
  double current_loss_ = 0.0;
  std::uint64_t t_ = 0;
  std::uint64_t queries_ = 0;
  std::uint64_t setup_queries_ = 0;
  std::vector<double> trace_;

  PriorityMap map_;
  std::uint64_t cursor_ = 0;
  std::uint64_t refresh_count_ = 0;
  std::uint64_t next_refresh_at_ = 0;

  std::vector<std::uint8_t> touched_;
  std::uint64_t touched_count_ = 0;
  std::vector<std::uint8_t> rejected_;  // pixels rejected since the last commit
  std::uint64_t rejected_count_ = 0;
};

inline AttackResult run_attack(const Model& target, const Model* surrogate,
                               const Image& x, int y, const AttackConfig& config) {
  return AttackEngine(target, surrogate, x, y, config).run();
}

}  // namespace greedypixel
