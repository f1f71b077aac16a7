#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "naraim/losses.hpp"
#include "naraim/masks.hpp"
#include "naraim/tensor.hpp"

namespace naraim {

enum class Schedule { kExponential, kCosine };

std::string_view to_string(Schedule schedule);
Schedule parse_schedule(std::string_view text);

struct TrainConfig {
  Phase phase = Phase::kPretrain;
  double peak_lr = 1e-3;
  double min_lr = 0.0;
  double weight_decay = 0.01;
  std::size_t batch_size = 512;
  double grad_clip = 1.0;
  std::size_t warmup_iters = 5000;
  std::size_t cooldown_iters = 10000;
  std::size_t total_iters = 500000;
  double decay_rate = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double adam_eps = 1e-8;
  Schedule schedule = Schedule::kExponential;
  std::uint64_t seed = 0;
  LossMode loss_mode = LossMode::kNormalized;

  void validate() const;

  // Full-scale hyperparameters for each phase.
  static TrainConfig paper(Phase phase);
  // Scaled-down defaults for single-core runs.
  static TrainConfig desk(Phase phase);

  bool operator==(const TrainConfig&) const = default;
};

struct OptimizerState {
  std::uint64_t step = 0;
  ParamTree first_moment;
  ParamTree second_moment;

  bool operator==(const OptimizerState&) const = default;
};

// Learning rate at `step` in [0, total_iters].
double lr_at(std::size_t step, const TrainConfig& cfg);

// Global L2 norm over all tensors.
double global_norm(const ParamTree& grads);

// Rescales in place when the global norm exceeds max_norm; returns the norm
// measured before clipping.
double clip_gradients(ParamTree& grads, double max_norm);

// Bias-corrected Adam with decoupled weight decay. Only parameters present in
// `grads` are touched.
void adamw_step(ParamTree& params, const ParamTree& grads, OptimizerState& state, double lr, const TrainConfig& cfg);

}  // namespace naraim
