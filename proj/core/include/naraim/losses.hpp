#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "naraim/autodiff.hpp"
#include "naraim/model.hpp"

namespace naraim {

enum class LossMode { kNormalized, kRaw };

std::string_view to_string(LossMode mode);
LossMode parse_loss_mode(std::string_view text);

// Position i holds the (optionally normalized) token i+1; positions with no
// real successor are zero. [B, N, D].
Tensor next_patch_targets(const TokenBatch& batch, LossMode mode);

// [B, N] of 0/1 from per-sample loss masks.
Tensor loss_weights(std::span<const std::vector<bool>> loss_masks);

// Mean over scored positions of the per-patch mean squared subpixel error.
Var next_patch_mse(Var preds, const Tensor& targets, const Tensor& scored);

// Per-position mean squared error without the tape, [B*N].
std::vector<double> per_position_mse(const Tensor& preds, const Tensor& targets);

// Batch mean of -log softmax(logits)[label]; logits are [B, C].
Var cross_entropy(Var logits, std::span<const std::size_t> labels);
double cross_entropy(std::span<const double> logits, std::size_t label);

}  // namespace naraim
