#include "naraim/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "naraim/errors.hpp"
#include "naraim/losses.hpp"
#include "naraim/pipeline.hpp"

namespace naraim {
namespace {

constexpr std::uint64_t kSetupStep = std::numeric_limits<std::uint64_t>::max();
constexpr std::uint64_t kInitSlot = 1;
constexpr std::uint64_t kProbeSlot = 2;
constexpr std::uint64_t kSamplerSlot = 3;

constexpr std::string_view kParamTag = "param/";
constexpr std::string_view kFirstMomentTag = "adam.m/";
constexpr std::string_view kSecondMomentTag = "adam.v/";

std::string rng_to_string(const Rng& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

Rng rng_from_string(const std::string& text) {
  Rng rng;
  std::istringstream in(text);
  in >> rng;
  if (!in) throw FormatError("checkpoint: bad RNG state");
  return rng;
}

ParamTree select(const ParamTree& params, bool (*keep)(std::string_view)) {
  ParamTree out;
  for (const auto& [k, v] : params) {
    if (keep(k)) out.emplace(k, v);
  }
  return out;
}

Tensor full_attention_blocked(std::span<const TokenSequence> seqs) {
  std::vector<MaskMatrix> masks;
  masks.reserve(seqs.size());
  for (const auto& seq : seqs) masks.push_back(build_mask({seq.length, 0, seq.pad_mask}, Phase::kFinetune));
  return blocked_attention(masks);
}

FeatureBatch stack(std::span<const FeatureBatch* const> rows) {
  const std::size_t n = rows[0]->features.dim(1), d = rows[0]->features.dim(2);
  FeatureBatch out{Tensor({rows.size(), n, d}), Tensor({rows.size(), n})};
  for (std::size_t s = 0; s < rows.size(); ++s) {
    std::copy(rows[s]->features.data().begin(), rows[s]->features.data().end(),
              out.features.data().begin() + static_cast<std::ptrdiff_t>(s * n * d));
    std::copy(rows[s]->real.data().begin(), rows[s]->real.data().end(),
              out.real.data().begin() + static_cast<std::ptrdiff_t>(s * n));
  }
  return out;
}

FeatureBatch row(const FeatureBatch& batch, std::size_t s) {
  const std::size_t n = batch.features.dim(1), d = batch.features.dim(2);
  const auto f = batch.features.data().subspan(s * n * d, n * d);
  const auto r = batch.real.data().subspan(s * n, n);
  return {Tensor({1, n, d}, std::vector<double>(f.begin(), f.end())), Tensor({1, n}, std::vector<double>(r.begin(), r.end()))};
}

}  // namespace

TrainState init_pretrain_state(const RunConfig& cfg) {
  cfg.validate();
  TrainState state;
  Rng init = derive_rng(cfg.train.seed, kSetupStep, kInitSlot);
  state.params = select(init_params(cfg.backbone, init), [](std::string_view k) { return !is_probe_param(k); });
  state.sampler = derive_rng(cfg.train.seed, kSetupStep, kSamplerSlot);
  return state;
}

TrainState init_finetune_state(const RunConfig& cfg, const ParamTree& pretrained) {
  cfg.validate();
  TrainState state;
  state.params = select(pretrained, is_backbone_param);
  Rng init = derive_rng(cfg.train.seed, kSetupStep, kProbeSlot);
  for (auto& [k, v] : init_probe_params(cfg.backbone, init)) state.params.insert_or_assign(k, std::move(v));
  state.sampler = derive_rng(cfg.train.seed, kSetupStep, kSamplerSlot);
  return state;
}

Checkpoint make_checkpoint(const RunConfig& cfg, const TrainState& state) {
  Checkpoint ckpt;
  ckpt.step = state.step;
  ckpt.rng_state = rng_to_string(state.sampler);
  ckpt.config_text = render_config(cfg);
  for (const auto& [k, v] : state.params) ckpt.tensors.emplace(std::string(kParamTag) + k, v);
  for (const auto& [k, v] : state.optim.first_moment) ckpt.tensors.emplace(std::string(kFirstMomentTag) + k, v);
  for (const auto& [k, v] : state.optim.second_moment) ckpt.tensors.emplace(std::string(kSecondMomentTag) + k, v);
  return ckpt;
}

TrainState restore_state(const Checkpoint& ckpt) {
  TrainState state;
  state.step = ckpt.step;
  state.optim.step = ckpt.step;
  state.sampler = rng_from_string(ckpt.rng_state);
  for (const auto& [name, t] : ckpt.tensors) {
    if (name.starts_with(kParamTag)) {
      state.params.emplace(name.substr(kParamTag.size()), t);
    } else if (name.starts_with(kFirstMomentTag)) {
      state.optim.first_moment.emplace(name.substr(kFirstMomentTag.size()), t);
    } else if (name.starts_with(kSecondMomentTag)) {
      state.optim.second_moment.emplace(name.substr(kSecondMomentTag.size()), t);
    } else {
      throw FormatError("checkpoint: unexpected tensor " + name);
    }
  }
  if (state.params.empty()) throw FormatError("checkpoint holds no parameters");
  return state;
}

PretrainBatch make_pretrain_batch(const RunConfig& cfg, const ImageSource& data, std::span<const std::size_t> indices,
                                  std::uint64_t step) {
  std::vector<TokenSequence> seqs;
  std::vector<MaskMatrix> masks;
  std::vector<std::vector<bool>> loss_masks;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    Rng rng = derive_rng(cfg.train.seed, step, k);
    const Image img = train_transform(data.load(indices[k]), cfg.policy, cfg.pipeline, cfg.augment, rng);
    seqs.push_back(to_sequence(img, cfg.pipeline));
    const AttentionSpec spec{seqs.back().length, sample_prefix_length(seqs.back().real_count(), rng), seqs.back().pad_mask};
    masks.push_back(build_mask(spec, Phase::kPretrain));
    loss_masks.push_back(build_loss_mask(spec, Phase::kPretrain));
  }
  return {TokenBatch::from(seqs), blocked_attention(masks), loss_weights(loss_masks)};
}

FeatureBatch encode_sequences(const BackboneConfig& cfg, const ParamTree& params, std::span<const TokenSequence> seqs) {
  Tape tape;
  const VarMap vars = tape.bind(select(params, is_backbone_param), false);
  const TokenBatch batch = TokenBatch::from(seqs);
  const Var features = backbone_forward(cfg, vars, batch, full_attention_blocked(seqs));
  return {features.value(), batch.real};
}

Trainer::Trainer(RunConfig cfg, const ImageSource& data, TrainState state)
    : cfg_(std::move(cfg)), data_(data), state_(std::move(state)) {
  cfg_.validate();
  if (data_.size() == 0) throw ContractError("training needs a non-empty dataset");
  if (data_.classes() > cfg_.backbone.classes && cfg_.train.phase == Phase::kFinetune) {
    throw ConfigError("dataset has " + std::to_string(data_.classes()) + " classes but the probe has " +
                      std::to_string(cfg_.backbone.classes));
  }
  cache_features_ = cfg_.train.phase == Phase::kFinetune && cfg_.freeze_backbone && !cfg_.finetune_augment;
}

std::vector<std::size_t> Trainer::sample_batch() {
  std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
  std::vector<std::size_t> out(cfg_.train.batch_size);
  for (auto& i : out) i = pick(state_.sampler);
  return out;
}

StepStats Trainer::step() {
  if (state_.step >= cfg_.train.total_iters) {
    throw ContractError("training already reached total_iters = " + std::to_string(cfg_.train.total_iters));
  }
  const Rng sampler_before = state_.sampler;
  const std::vector<std::size_t> indices = sample_batch();
  try {
    return cfg_.train.phase == Phase::kPretrain ? pretrain_step(indices) : finetune_step(indices);
  } catch (...) {
    state_.sampler = sampler_before;
    throw;
  }
}

StepStats Trainer::pretrain_step(std::span<const std::size_t> indices) {
  const PretrainBatch pb = make_pretrain_batch(cfg_, data_, indices, state_.step);
  Tape tape;
  const VarMap vars = tape.bind(state_.params);
  const Var features = backbone_forward(cfg_.backbone, vars, pb.tokens, pb.blocked);
  const Var preds = pretrain_head(cfg_.backbone, vars, features);
  const Var loss = next_patch_mse(preds, next_patch_targets(pb.tokens, cfg_.train.loss_mode), pb.scored);
  StepStats stats;
  stats.loss = loss.value().item();
  if (!std::isfinite(stats.loss)) {
    throw NumericError("non-finite loss at step " + std::to_string(state_.step + 1));
  }
  ParamTree grads = gradient(loss, vars);
  apply(grads, stats.loss, stats);
  return stats;
}

std::vector<TokenSequence> Trainer::finetune_sequences(std::span<const std::size_t> indices) const {
  std::vector<TokenSequence> seqs;
  seqs.reserve(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const Image img = data_.load(indices[k]);
    if (cfg_.finetune_augment) {
      Rng rng = derive_rng(cfg_.train.seed, state_.step, k);
      seqs.push_back(to_sequence(train_transform(img, cfg_.policy, cfg_.pipeline, cfg_.augment, rng), cfg_.pipeline));
    } else {
      seqs.push_back(to_sequence(eval_transform(img, cfg_.policy, cfg_.pipeline), cfg_.pipeline));
    }
  }
  return seqs;
}

StepStats Trainer::finetune_step(std::span<const std::size_t> indices) {
  std::vector<std::size_t> labels;
  for (std::size_t i : indices) labels.push_back(data_.label(i));

  Tape tape;
  VarMap vars;
  ProbeOutput out;
  if (cfg_.freeze_backbone) {
    FeatureBatch fb;
    if (cache_features_) {
      std::vector<std::size_t> missing;
      for (std::size_t i : indices) {
        if (!feature_cache_.contains(i) && std::find(missing.begin(), missing.end(), i) == missing.end()) missing.push_back(i);
      }
      if (!missing.empty()) {
        const auto seqs = finetune_sequences(missing);
        const FeatureBatch fresh = encode_sequences(cfg_.backbone, state_.params, seqs);
        for (std::size_t s = 0; s < missing.size(); ++s) feature_cache_.emplace(missing[s], row(fresh, s));
      }
      std::vector<const FeatureBatch*> rows;
      for (std::size_t i : indices) rows.push_back(&feature_cache_.at(i));
      fb = stack(rows);
    } else {
      fb = encode_sequences(cfg_.backbone, state_.params, finetune_sequences(indices));
    }
    vars = tape.bind(select(state_.params, is_probe_param));
    out = attentive_probe(cfg_.backbone, vars, tape.constant(std::move(fb.features)), fb.real);
  } else {
    const auto seqs = finetune_sequences(indices);
    const TokenBatch batch = TokenBatch::from(seqs);
    vars = tape.bind(state_.params);
    const Var features = backbone_forward(cfg_.backbone, vars, batch, full_attention_blocked(seqs));
    out = attentive_probe(cfg_.backbone, vars, features, batch.real);
  }
  const Var loss = cross_entropy(out.logits, labels);
  StepStats stats;
  stats.loss = loss.value().item();
  if (!std::isfinite(stats.loss)) {
    throw NumericError("non-finite loss at step " + std::to_string(state_.step + 1));
  }
  const Tensor& logits = out.logits.value();
  const std::size_t classes = logits.dim(1);
  std::size_t correct = 0;
  for (std::size_t s = 0; s < labels.size(); ++s) {
    const auto r = logits.data().subspan(s * classes, classes);
    const auto best = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
    correct += best == labels[s] ? 1 : 0;
  }
  stats.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
  ParamTree grads = gradient(loss, vars);
  apply(grads, stats.loss, stats);
  return stats;
}

void Trainer::apply(ParamTree& grads, double loss, StepStats& stats) {
  for (const auto& [k, g] : grads) {
    if (!g.all_finite()) throw NumericError("non-finite gradient for " + k + " at step " + std::to_string(state_.step + 1));
  }
  stats.grad_norm = clip_gradients(grads, cfg_.train.grad_clip);
  stats.lr = lr_at(state_.step + 1, cfg_.train);
  adamw_step(state_.params, grads, state_.optim, stats.lr, cfg_.train);
  ++state_.step;
  stats.step = state_.step;
  stats.loss = loss;
}

TrainState run_training(const RunConfig& cfg, const ImageSource& data, TrainState state, const RunOptions& options) {
  const std::uint64_t target = options.stop_at ? options.stop_at : cfg.train.total_iters;
  if (target > cfg.train.total_iters) throw ContractError("stop_at exceeds total_iters");
  Trainer trainer(cfg, data, std::move(state));
  const std::filesystem::path out_dir = cfg.out_dir;
  std::ofstream metrics;
  if (options.write_files) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
    metrics.open(out_dir / "metrics.tsv", std::ios::app);
    if (!metrics) throw IoError("cannot open " + (out_dir / "metrics.tsv").string());
  }
  while (trainer.state().step < target) {
    const StepStats stats = trainer.step();
    if (options.on_step) options.on_step(stats);
    if (!options.write_files) continue;
    const bool last = stats.step == target;
    if (stats.step % cfg.log_every == 0 || last) {
      char line[128];
      if (stats.accuracy >= 0.0) {
        std::snprintf(line, sizeof line, "%llu\t%.9g\t%.9g\t%.6f\n", static_cast<unsigned long long>(stats.step), stats.lr,
                      stats.loss, stats.accuracy);
      } else {
        std::snprintf(line, sizeof line, "%llu\t%.9g\t%.9g\n", static_cast<unsigned long long>(stats.step), stats.lr,
                      stats.loss);
      }
      metrics << line << std::flush;
    }
    if (stats.step % cfg.checkpoint_every == 0 || last) save_checkpoint(trainer.checkpoint(), out_dir / "checkpoint.nara");
  }
  return trainer.take_state();
}

}  // namespace naraim
