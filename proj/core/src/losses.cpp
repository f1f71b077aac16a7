#include "naraim/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "naraim/errors.hpp"
#include "naraim/patches.hpp"

namespace naraim {

std::string_view to_string(LossMode mode) { return mode == LossMode::kNormalized ? "normalized" : "raw"; }

LossMode parse_loss_mode(std::string_view text) {
  if (text == "normalized") return LossMode::kNormalized;
  if (text == "raw") return LossMode::kRaw;
  throw ConfigError("unknown loss mode '" + std::string(text) + "'");
}

Tensor next_patch_targets(const TokenBatch& batch, LossMode mode) {
  const std::size_t n = batch.length, d = batch.token_dim;
  Tensor targets({batch.batch, n, d});
  const auto src = batch.tokens.data();
  for (std::size_t s = 0; s < batch.batch; ++s) {
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (batch.real[s * n + i + 1] == 0.0) continue;
      const auto next = src.subspan((s * n + i + 1) * d, d);
      double* out = &targets[(s * n + i) * d];
      if (mode == LossMode::kNormalized) {
        const auto norm = patch_normalize_target(next);
        std::copy(norm.begin(), norm.end(), out);
      } else {
        std::copy(next.begin(), next.end(), out);
      }
    }
  }
  return targets;
}

Tensor loss_weights(std::span<const std::vector<bool>> loss_masks) {
  if (loss_masks.empty()) throw ContractError("loss_weights: empty batch");
  const std::size_t n = loss_masks[0].size();
  Tensor w({loss_masks.size(), n});
  for (std::size_t s = 0; s < loss_masks.size(); ++s) {
    if (loss_masks[s].size() != n) throw ContractError("loss_weights: ragged masks");
    for (std::size_t i = 0; i < n; ++i) w[s * n + i] = loss_masks[s][i] ? 1.0 : 0.0;
  }
  return w;
}

Var next_patch_mse(Var preds, const Tensor& targets, const Tensor& scored) {
  const Shape& pd = preds.dims();
  if (pd != targets.dims()) {
    throw ShapeError("next_patch_mse: predictions " + shape_string(pd) + " vs targets " + shape_string(targets.dims()));
  }
  if (pd.size() != 3 || scored.dims() != Shape{pd[0], pd[1]}) {
    throw ShapeError("next_patch_mse: loss mask " + shape_string(scored.dims()) + " vs predictions " + shape_string(pd));
  }
  double count = 0.0;
  for (double v : scored.data()) count += v != 0.0 ? 1.0 : 0.0;
  if (count == 0.0) throw ContractError("next_patch_mse: no scored positions");

  Tape& tape = preds.tape();
  const Var diff = ops::sub(preds, tape.constant(targets));
  const Var per_patch = ops::reshape(ops::mean_last(ops::mul(diff, diff)), {pd[0], pd[1]});
  Tensor weights = scored;
  for (double& v : weights.data()) v = v != 0.0 ? 1.0 / count : 0.0;
  return ops::sum(ops::mul(per_patch, tape.constant(std::move(weights))));
}

std::vector<double> per_position_mse(const Tensor& preds, const Tensor& targets) {
  if (preds.dims() != targets.dims() || preds.rank() < 2) {
    throw ShapeError("per_position_mse: " + shape_string(preds.dims()) + " vs " + shape_string(targets.dims()));
  }
  const std::size_t d = preds.dims().back();
  const std::size_t rows = preds.size() / d;
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double e = preds[r * d + j] - targets[r * d + j];
      acc += e * e;
    }
    out[r] = acc / static_cast<double>(d);
  }
  return out;
}

Var cross_entropy(Var logits, std::span<const std::size_t> labels) {
  const Shape& ld = logits.dims();
  if (ld.size() != 2 || ld[0] != labels.size()) {
    throw ShapeError("cross_entropy: logits " + shape_string(ld) + " for " + std::to_string(labels.size()) + " labels");
  }
  const std::size_t b = ld[0], c = ld[1];
  Tensor pick({b, c});
  for (std::size_t s = 0; s < b; ++s) {
    if (labels[s] >= c) {
      throw ContractError("cross_entropy: label " + std::to_string(labels[s]) + " out of " + std::to_string(c) +
                          " classes");
    }
    pick[s * c + labels[s]] = -1.0 / static_cast<double>(b);
  }
  return ops::sum(ops::mul(ops::log_softmax_last(logits), logits.tape().constant(std::move(pick))));
}

double cross_entropy(std::span<const double> logits, std::size_t label) {
  if (label >= logits.size()) throw ContractError("cross_entropy: label out of range");
  const std::size_t arg = static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
  const double mx = logits[arg];
  double rest = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) rest += j == arg ? 0.0 : std::exp(logits[j] - mx);
  return std::log1p(rest) - (logits[label] - mx);
}

}  // namespace naraim
