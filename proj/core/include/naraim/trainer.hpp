#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "naraim/checkpoint.hpp"
#include "naraim/config.hpp"
#include "naraim/dataset.hpp"
#include "naraim/model.hpp"
#include "naraim/optim.hpp"

namespace naraim {

struct TrainState {
  ParamTree params;  // backbone plus head.* (pretrain) or probe.* (finetune)
  OptimizerState optim;
  std::uint64_t step = 0;
  Rng sampler;  // draws batch indices

  bool operator==(const TrainState&) const = default;
};

TrainState init_pretrain_state(const RunConfig& cfg);
// Keeps the backbone of `pretrained`, drops its head and adds a fresh probe.
TrainState init_finetune_state(const RunConfig& cfg, const ParamTree& pretrained);

Checkpoint make_checkpoint(const RunConfig& cfg, const TrainState& state);
TrainState restore_state(const Checkpoint& ckpt);

struct StepStats {
  std::uint64_t step = 0;  // steps completed after this update
  double lr = 0.0;
  double loss = 0.0;
  double accuracy = -1.0;  // batch accuracy in finetuning, -1 otherwise
  double grad_norm = 0.0;
};

// Per-sample pre-training inputs at a given step.
struct PretrainBatch {
  TokenBatch tokens;
  Tensor blocked;  // [B, N, N]
  Tensor scored;   // [B, N]
};

PretrainBatch make_pretrain_batch(const RunConfig& cfg, const ImageSource& data, std::span<const std::size_t> indices,
                                  std::uint64_t step);

// Frozen-backbone features of a batch of sequences under full attention.
struct FeatureBatch {
  Tensor features;  // [B, N, d_model]
  Tensor real;      // [B, N]
};
FeatureBatch encode_sequences(const BackboneConfig& cfg, const ParamTree& params, std::span<const TokenSequence> seqs);

class Trainer {
 public:
  Trainer(RunConfig cfg, const ImageSource& data, TrainState state);

  StepStats step();

  const RunConfig& config() const { return cfg_; }
  const TrainState& state() const { return state_; }
  TrainState take_state() { return std::move(state_); }
  Checkpoint checkpoint() const { return make_checkpoint(cfg_, state_); }

 private:
  std::vector<std::size_t> sample_batch();
  StepStats pretrain_step(std::span<const std::size_t> indices);
  StepStats finetune_step(std::span<const std::size_t> indices);
  std::vector<TokenSequence> finetune_sequences(std::span<const std::size_t> indices) const;
  void apply(ParamTree& grads, double loss, StepStats& stats);

  RunConfig cfg_;
  const ImageSource& data_;
  TrainState state_;
  bool cache_features_ = false;
  std::map<std::size_t, FeatureBatch> feature_cache_;
};

struct RunOptions {
  bool write_files = true;      // metrics log and checkpoints under cfg.out_dir
  std::uint64_t stop_at = 0;    // 0: run to total_iters
  std::function<void(const StepStats&)> on_step;
};

// Steps until stop_at (or total_iters), logging `step lr loss [acc]` lines to
// out_dir/metrics.tsv and saving out_dir/checkpoint.nara every
// checkpoint_every steps and at the end. A non-finite loss throws
// NumericError before the update, so the last checkpoint stays good.
TrainState run_training(const RunConfig& cfg, const ImageSource& data, TrainState state, const RunOptions& options = {});

}  // namespace naraim
