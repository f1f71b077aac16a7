#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "naraim/checkpoint.hpp"
#include "naraim/errors.hpp"
#include "naraim/losses.hpp"
#include "naraim/optim.hpp"
#include "naraim/trainer.hpp"
#include "tiny.hpp"

using namespace naraim;

TEST(TrainConfig, PaperPresets) {
  const TrainConfig pre = TrainConfig::paper(Phase::kPretrain);
  EXPECT_EQ(pre.peak_lr, 1e-3);
  EXPECT_EQ(pre.min_lr, 0.0);
  EXPECT_EQ(pre.weight_decay, 0.01);
  EXPECT_EQ(pre.beta1, 0.9);
  EXPECT_EQ(pre.beta2, 0.98);
  EXPECT_EQ(pre.grad_clip, 1.0);
  EXPECT_EQ(pre.warmup_iters, 5000u);
  EXPECT_EQ(pre.cooldown_iters, 10000u);
  EXPECT_EQ(pre.total_iters, 500000u);
  EXPECT_EQ(pre.decay_rate, 0.1);
  EXPECT_EQ(pre.schedule, Schedule::kExponential);
  const TrainConfig ft = TrainConfig::paper(Phase::kFinetune);
  EXPECT_EQ(ft.beta2, 0.999);
  EXPECT_EQ(ft.min_lr, 1e-5);
  EXPECT_EQ(ft.weight_decay, 0.1);
  EXPECT_EQ(ft.grad_clip, 3.0);
  EXPECT_EQ(ft.warmup_iters, 500u);
  EXPECT_EQ(ft.total_iters, 50000u);
  EXPECT_EQ(ft.schedule, Schedule::kCosine);
}

TEST(LearningRate, PretrainAnchors) {
  const TrainConfig cfg = TrainConfig::paper(Phase::kPretrain);
  EXPECT_EQ(lr_at(0, cfg), 0.0);
  EXPECT_NEAR(lr_at(5000, cfg), 1e-3, 1e-12);
  EXPECT_NEAR(lr_at(490000, cfg), 1e-4, 1e-12);
  EXPECT_NEAR(lr_at(500000, cfg), 0.0, 1e-12);
  EXPECT_NEAR(lr_at(2500, cfg), 5e-4, 1e-12);
  EXPECT_NEAR(lr_at(495000, cfg), 5e-5, 1e-12);
  EXPECT_NEAR(lr_at(247500, cfg), 1e-3 * std::sqrt(0.1), 1e-12);
  EXPECT_THROW(lr_at(500001, cfg), ContractError);
}

TEST(LearningRate, FinetuneAnchors) {
  const TrainConfig cfg = TrainConfig::paper(Phase::kFinetune);
  EXPECT_EQ(lr_at(0, cfg), 0.0);
  EXPECT_NEAR(lr_at(500, cfg), 1e-3, 1e-12);
  EXPECT_NEAR(lr_at(50000, cfg), 1e-5, 1e-12);
  EXPECT_NEAR(lr_at(25250, cfg), (1e-3 + 1e-5) / 2, 1e-12);
}

TEST(LearningRate, ContinuousAtJoints) {
  for (Phase phase : {Phase::kPretrain, Phase::kFinetune}) {
    const TrainConfig cfg = TrainConfig::paper(phase);
    const double w = static_cast<double>(cfg.warmup_iters);
    // Warmup line extrapolated to the joint.
    EXPECT_NEAR(lr_at(cfg.warmup_iters - 1, cfg) * w / (w - 1), lr_at(cfg.warmup_iters, cfg), 1e-12);
    if (phase == Phase::kPretrain) {
      const std::size_t c = cfg.total_iters - cfg.cooldown_iters;
      const double before = lr_at(c - 1, cfg);
      const double expect = cfg.peak_lr * std::pow(cfg.decay_rate, static_cast<double>(c - 1 - cfg.warmup_iters) /
                                                                       static_cast<double>(c - cfg.warmup_iters));
      EXPECT_NEAR(before, expect, 1e-12);
      EXPECT_NEAR(lr_at(c + 1, cfg), 1e-4 * (1.0 - 1.0 / static_cast<double>(cfg.cooldown_iters)), 1e-12);
    }
    double prev = lr_at(cfg.warmup_iters, cfg);
    for (std::size_t s = cfg.warmup_iters; s <= cfg.total_iters; s += 997) {
      const double lr = lr_at(s, cfg);
      EXPECT_LE(lr, prev + 1e-18);
      prev = lr;
    }
  }
}

TEST(ClipGradients, Examples) {
  ParamTree g{{"a", Tensor::vector({3.0, 4.0})}};
  EXPECT_DOUBLE_EQ(clip_gradients(g, 1.0), 5.0);
  EXPECT_NEAR(g.at("a")[0], 0.6, 1e-15);
  EXPECT_NEAR(g.at("a")[1], 0.8, 1e-15);
  ParamTree small{{"a", Tensor::vector({0.3, 0.4})}};
  const ParamTree before = small;
  clip_gradients(small, 1.0);
  EXPECT_EQ(small, before);
  EXPECT_THROW(clip_gradients(small, 0.0), ContractError);
}

TEST(ClipGradients, PostClipNormBounded) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> dist(0.0, 10.0);
  for (int i = 0; i < 500; ++i) {
    ParamTree g{{"a", Tensor({3, 5})}, {"b", Tensor({7})}};
    for (auto& [k, t] : g)
      for (double& v : t.data()) v = dist(rng);
    const double max_norm = 0.1 + static_cast<double>(rng() % 50);
    clip_gradients(g, max_norm);
    EXPECT_LE(global_norm(g), max_norm + 1e-12);
  }
}

TEST(AdamW, ZeroGradNoDecayUnchanged) {
  TrainConfig cfg = TrainConfig::paper(Phase::kPretrain);
  cfg.weight_decay = 0.0;
  ParamTree params{{"w", Tensor({2, 2}, 0.5)}};
  OptimizerState state;
  adamw_step(params, {{"w", Tensor({2, 2})}}, state, 1e-3, cfg);
  EXPECT_EQ(params.at("w"), Tensor({2, 2}, 0.5));
  EXPECT_EQ(state.step, 1u);
}

TEST(AdamW, FirstStepMovesByLearningRate) {
  const TrainConfig cfg = TrainConfig::paper(Phase::kPretrain);
  ParamTree params{{"b", Tensor::scalar(2.0)}};
  OptimizerState state;
  adamw_step(params, {{"b", Tensor::scalar(1.0)}}, state, 1e-3, cfg);
  EXPECT_NEAR(params.at("b")[0], 2.0 - 1e-3, 1e-10);
}

TEST(AdamW, DecoupledDecayShrinks) {
  TrainConfig cfg = TrainConfig::paper(Phase::kPretrain);
  cfg.weight_decay = 0.1;
  ParamTree params{{"w", Tensor({2, 2}, 3.0)}, {"b", Tensor({2}, 3.0)}};
  OptimizerState state;
  adamw_step(params, {{"w", Tensor({2, 2})}, {"b", Tensor({2})}}, state, 0.01, cfg);
  EXPECT_DOUBLE_EQ(params.at("w")[0], 3.0 * (1.0 - 0.01 * 0.1));
  EXPECT_EQ(params.at("b")[0], 3.0);
}

TEST(AdamW, OnlyTouchesGivenParamsAndIsDeterministic) {
  const TrainConfig cfg = TrainConfig::paper(Phase::kFinetune);
  ParamTree base{{"a", Tensor({3, 2}, 1.0)}, {"z", Tensor({2}, 4.0)}};
  ParamTree grads{{"a", Tensor({3, 2}, std::vector<double>{0.1, -0.2, 0.3, 0.0, 5.0, -1.0})}};
  ParamTree p1 = base, p2 = base;
  OptimizerState s1, s2;
  for (int i = 0; i < 3; ++i) {
    adamw_step(p1, grads, s1, 1e-3, cfg);
    adamw_step(p2, grads, s2, 1e-3, cfg);
  }
  EXPECT_EQ(p1, p2);
  EXPECT_EQ(s1, s2);
  EXPECT_EQ(p1.at("z"), base.at("z"));
  EXPECT_FALSE(s1.first_moment.contains("z"));
  EXPECT_TRUE(p1.at("a").all_finite());
}

namespace {

Var scalar_mse(Tape& tape, const Tensor& preds, const Tensor& targets, const Tensor& scored) {
  return next_patch_mse(tape.constant(preds), targets, scored);
}

}  // namespace

TEST(NextPatchMse, Examples) {
  Tape tape;
  Tensor preds({1, 2, 3}, 0.25);
  EXPECT_EQ(scalar_mse(tape, preds, preds, Tensor({1, 2}, 1.0)).value().item(), 0.0);
  Tensor zero({1, 2, 3});
  Tensor ones({1, 2, 3}, 1.0);
  Tensor one_scored({1, 2}, std::vector<double>{1.0, 0.0});
  EXPECT_DOUBLE_EQ(scalar_mse(tape, zero, ones, one_scored).value().item(), 1.0);
  EXPECT_THROW(scalar_mse(tape, zero, ones, Tensor({1, 2})), ContractError);
}

TEST(NextPatchMse, MaskingRemovesContributionExactly) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Tensor preds({2, 3, 4}), targets({2, 3, 4});
  for (double& v : preds.data()) v = dist(rng);
  for (double& v : targets.data()) v = dist(rng);
  auto per = per_position_mse(preds, targets);
  Tensor scored({2, 3}, std::vector<double>{1, 0, 1, 1, 1, 0});
  Tape tape;
  const double got = scalar_mse(tape, preds, targets, scored).value().item();
  EXPECT_NEAR(got, (per[0] + per[2] + per[3] + per[4]) / 4.0, 1e-15);
  Tensor changed = preds;
  for (std::size_t k = 0; k < 4; ++k) changed[1 * 4 + k] += 100.0;
  EXPECT_EQ(scalar_mse(tape, changed, targets, scored).value().item(), got);
}

TEST(NextPatchTargets, NormalizedMatchesOracle) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  TokenBatch batch;
  batch.batch = 1;
  batch.length = 4;
  batch.token_dim = 12;
  batch.tokens = Tensor({1, 4, 12});
  for (double& v : batch.tokens.data()) v = dist(rng);
  batch.real = Tensor({1, 4}, std::vector<double>{1, 1, 1, 0});
  const Tensor norm = next_patch_targets(batch, LossMode::kNormalized);
  const Tensor raw = next_patch_targets(batch, LossMode::kRaw);
  for (std::size_t i = 0; i < 2; ++i) {
    double mean = 0.0, var = 0.0;
    for (std::size_t k = 0; k < 12; ++k) mean += batch.tokens[(i + 1) * 12 + k];
    mean /= 12.0;
    for (std::size_t k = 0; k < 12; ++k) var += std::pow(batch.tokens[(i + 1) * 12 + k] - mean, 2);
    var /= 12.0;
    for (std::size_t k = 0; k < 12; ++k) {
      const double x = batch.tokens[(i + 1) * 12 + k];
      EXPECT_NEAR(norm[i * 12 + k], (x - mean) / std::sqrt(var + 1e-6), 1e-12);
      EXPECT_EQ(raw[i * 12 + k], x);
    }
  }
  for (std::size_t k = 0; k < 12; ++k) {
    EXPECT_EQ(norm[2 * 12 + k], 0.0);
    EXPECT_EQ(norm[3 * 12 + k], 0.0);
  }
}

TEST(CrossEntropy, Examples) {
  std::vector<double> uniform(5, 0.3);
  EXPECT_NEAR(cross_entropy(uniform, 2), std::log(5.0), 1e-12);
  std::vector<double> sharp{10.0, -10.0};
  EXPECT_NEAR(cross_entropy(sharp, 0), std::log1p(std::exp(-20.0)), 1e-18);
  EXPECT_NEAR(cross_entropy(sharp, 0), 2e-9, 1e-10);
  std::vector<double> shifted{1010.0, 990.0};
  EXPECT_NEAR(cross_entropy(shifted, 0), cross_entropy(sharp, 0), 1e-15);
  EXPECT_THROW(cross_entropy(sharp, 2), ContractError);
}

TEST(CrossEntropy, BatchVersionMatchesScalar) {
  Tape tape;
  Tensor logits = Tensor::matrix({{1.0, 2.0, 0.5}, {-1.0, 0.0, 3.0}});
  std::vector<std::size_t> labels{1, 0};
  Var loss = cross_entropy(tape.constant(logits), labels);
  const double expect = 0.5 * (cross_entropy(std::vector<double>{1.0, 2.0, 0.5}, 1) +
                               cross_entropy(std::vector<double>{-1.0, 0.0, 3.0}, 0));
  EXPECT_NEAR(loss.value().item(), expect, 1e-14);
}

TEST(Trainer, PretrainStepsAreFiniteAndLogged) {
  const RunConfig cfg = tiny::run_config(Phase::kPretrain);
  SyntheticSource data(tiny::synthetic());
  std::vector<StepStats> seen;
  RunOptions opts;
  opts.write_files = false;
  opts.stop_at = 6;
  opts.on_step = [&](const StepStats& s) { seen.push_back(s); };
  TrainState state = run_training(cfg, data, init_pretrain_state(cfg), opts);
  ASSERT_EQ(seen.size(), 6u);
  for (std::size_t i = 0; i < seen.size(); ++i) {
    EXPECT_EQ(seen[i].step, i + 1);
    EXPECT_DOUBLE_EQ(seen[i].lr, lr_at(i + 1, cfg.train));
    EXPECT_TRUE(std::isfinite(seen[i].loss));
    EXPECT_EQ(seen[i].accuracy, -1.0);
  }
  EXPECT_EQ(state.step, 6u);
  for (const auto& [k, t] : state.params) EXPECT_TRUE(t.all_finite()) << k;
}

TEST(Trainer, FrozenFinetuneChangesOnlyProbe) {
  const RunConfig pre = tiny::run_config(Phase::kPretrain);
  SyntheticSource data(tiny::synthetic());
  const TrainState pretrained = init_pretrain_state(pre);
  for (bool augment : {false, true}) {
    RunConfig ft = tiny::run_config(Phase::kFinetune);
    ft.finetune_augment = augment;
    TrainState start = init_finetune_state(ft, pretrained.params);
    for (const auto& [k, t] : start.params) EXPECT_FALSE(is_head_param(k)) << k;
    RunOptions opts;
    opts.write_files = false;
    opts.stop_at = 5;
    TrainState end = run_training(ft, data, start, opts);
    for (const auto& [k, t] : start.params) {
      if (is_probe_param(k)) {
        EXPECT_NE(end.params.at(k), t) << k;
      } else {
        EXPECT_EQ(end.params.at(k), t) << k;
        EXPECT_EQ(t, pretrained.params.at(k)) << k;
      }
    }
  }
}

TEST(Trainer, UnfrozenFinetuneUpdatesBackbone) {
  const RunConfig pre = tiny::run_config(Phase::kPretrain);
  SyntheticSource data(tiny::synthetic());
  RunConfig ft = tiny::run_config(Phase::kFinetune);
  ft.freeze_backbone = false;
  TrainState start = init_finetune_state(ft, init_pretrain_state(pre).params);
  RunOptions opts;
  opts.write_files = false;
  opts.stop_at = 2;
  TrainState end = run_training(ft, data, start, opts);
  EXPECT_NE(end.params.at("embed.weight"), start.params.at("embed.weight"));
}

TEST(Trainer, FinetuneReportsAccuracy) {
  SyntheticSource data(tiny::synthetic());
  const RunConfig ft = tiny::run_config(Phase::kFinetune);
  Trainer trainer(ft, data, init_finetune_state(ft, init_pretrain_state(tiny::run_config(Phase::kPretrain)).params));
  const StepStats s = trainer.step();
  EXPECT_GE(s.accuracy, 0.0);
  EXPECT_LE(s.accuracy, 1.0);
}

TEST(Trainer, ResumeIsBitwiseIdentical) {
  const RunConfig cfg = tiny::run_config(Phase::kPretrain);
  SyntheticSource data(tiny::synthetic());
  RunOptions opts;
  opts.write_files = false;
  opts.stop_at = 8;
  const TrainState straight = run_training(cfg, data, init_pretrain_state(cfg), opts);

  opts.stop_at = 3;
  const TrainState partial = run_training(cfg, data, init_pretrain_state(cfg), opts);
  const Checkpoint ckpt = decode_checkpoint(encode_checkpoint(make_checkpoint(cfg, partial)));
  opts.stop_at = 8;
  const TrainState resumed = run_training(cfg, data, restore_state(ckpt), opts);
  EXPECT_EQ(resumed, straight);
}

TEST(Trainer, NonFiniteLossKeepsLastGoodCheckpoint) {
  RunConfig cfg = tiny::run_config(Phase::kPretrain);
  const auto dir = tiny::scratch_dir("nan_abort");
  cfg.out_dir = dir.string();
  cfg.checkpoint_every = 1;
  cfg.log_every = 1;
  cfg.train.warmup_iters = 0;
  cfg.train.peak_lr = 1e200;
  SyntheticSource data(tiny::synthetic());
  EXPECT_THROW(run_training(cfg, data, init_pretrain_state(cfg)), NumericError);
  const Checkpoint ckpt = load_checkpoint(dir / "checkpoint.nara");
  EXPECT_GE(ckpt.step, 1u);
  for (const auto& [k, t] : ckpt.tensors) EXPECT_TRUE(t.all_finite()) << k;
}

TEST(Trainer, WritesMetricsAndCheckpoint) {
  RunConfig cfg = tiny::run_config(Phase::kFinetune);
  const auto dir = tiny::scratch_dir("metrics");
  cfg.out_dir = dir.string();
  cfg.train.total_iters = 12;
  SyntheticSource data(tiny::synthetic());
  run_training(cfg, data, init_finetune_state(cfg, init_pretrain_state(tiny::run_config(Phase::kPretrain)).params));
  std::ifstream in(dir / "metrics.tsv");
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  ASSERT_EQ(lines.size(), 3u);
  for (const auto& line : lines) {
    std::istringstream fields(line);
    std::string f;
    std::size_t count = 0;
    while (std::getline(fields, f, '\t')) ++count;
    EXPECT_EQ(count, 4u) << line;
  }
  EXPECT_TRUE(lines[0].starts_with("5\t"));
  EXPECT_TRUE(lines[2].starts_with("12\t"));
  const Checkpoint ckpt = load_checkpoint(dir / "checkpoint.nara");
  EXPECT_EQ(ckpt.step, 12u);
  EXPECT_EQ(parse_config(ckpt.config_text), cfg);
}

namespace {

class EmptySource : public ImageSource {
 public:
  std::size_t size() const override { return 0; }
  std::size_t classes() const override { return 2; }
  std::size_t label(std::size_t) const override { return 0; }
  Image load(std::size_t) const override { return {}; }
};

}  // namespace

TEST(Trainer, RejectsEmptyDatasetAndOverrun) {
  const RunConfig cfg = tiny::run_config(Phase::kPretrain);
  EmptySource empty;
  EXPECT_THROW(Trainer(cfg, empty, init_pretrain_state(cfg)), ContractError);
  RunOptions opts;
  opts.stop_at = cfg.train.total_iters + 1;
  SyntheticSource data(tiny::synthetic());
  EXPECT_THROW(run_training(cfg, data, init_pretrain_state(cfg), opts), ContractError);
}

TEST(Trainer, PretrainBatchMasksConsistent) {
  const RunConfig cfg = tiny::run_config(Phase::kPretrain);
  SyntheticSource data(tiny::synthetic());
  std::vector<std::size_t> idx{0, 1, 2, 3};
  const PretrainBatch a = make_pretrain_batch(cfg, data, idx, 4);
  const PretrainBatch b = make_pretrain_batch(cfg, data, idx, 4);
  EXPECT_EQ(a.tokens.tokens, b.tokens.tokens);
  EXPECT_EQ(a.blocked, b.blocked);
  const std::size_t n = a.tokens.length;
  for (std::size_t s = 0; s < 4; ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      if (a.scored[s * n + i] == 0.0) continue;
      ASSERT_LT(i + 1, n);
      EXPECT_EQ(a.tokens.real[s * n + i + 1], 1.0);
    }
  }
}

namespace {

Checkpoint sample_checkpoint() {
  Checkpoint c;
  c.step = 42;
  c.rng_state = "1 2 3";
  c.config_text = "policy = naraim\n";
  c.tensors.emplace("param/a", Tensor({2, 3}, std::vector<double>{1, -2, 3.5, 1e-300, -0.0, 7}));
  c.tensors.emplace("param/b", Tensor::scalar(9.25));
  c.tensors.emplace("adam.m/a", Tensor({2, 3}, 0.125));
  return c;
}

void put_u64(Bytes& bytes, std::size_t at, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) bytes[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
}

}  // namespace

TEST(Checkpoint, RoundTripIsBitwise) {
  const Checkpoint c = sample_checkpoint();
  const Bytes bytes = encode_checkpoint(c);
  const Checkpoint back = decode_checkpoint(bytes);
  EXPECT_EQ(back, c);
  EXPECT_EQ(encode_checkpoint(back), bytes);
  EXPECT_TRUE(std::signbit(back.tensors.at("param/a")[4]));
}

TEST(Checkpoint, LayoutHeader) {
  const Bytes bytes = encode_checkpoint(sample_checkpoint());
  ASSERT_GE(bytes.size(), 16u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "NARA");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5] | bytes[6] | bytes[7], 0);
  std::uint64_t meta = 0;
  for (int i = 0; i < 8; ++i) meta |= static_cast<std::uint64_t>(bytes[8 + i]) << (8 * i);
  const std::string text(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(meta));
  EXPECT_TRUE(text.starts_with("step=42\n"));
  EXPECT_NE(text.find("policy = naraim"), std::string::npos);
}

TEST(Checkpoint, CorruptMagic) {
  Bytes bytes = encode_checkpoint(sample_checkpoint());
  bytes[0] = 'X';
  try {
    decode_checkpoint(bytes);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_STREQ(e.what(), "not a checkpoint");
  }
}

TEST(Checkpoint, WrongVersion) {
  Bytes bytes = encode_checkpoint(sample_checkpoint());
  bytes[4] = 2;
  EXPECT_THROW(decode_checkpoint(bytes), FormatError);
}

TEST(Checkpoint, TruncationNamesTensor) {
  const Bytes bytes = encode_checkpoint(sample_checkpoint());
  // Tensors are stored in key order: adam.m/a, param/a, param/b.
  for (std::size_t cut = 1; cut <= 8; ++cut) {
    const Bytes short_bytes(bytes.begin(), bytes.end() - static_cast<std::ptrdiff_t>(cut));
    try {
      decode_checkpoint(short_bytes);
      FAIL() << cut;
    } catch (const FormatError& e) {
      EXPECT_NE(std::string(e.what()).find("param/b"), std::string::npos) << e.what();
    }
  }
  const std::size_t tail = 8 + 7 + 1 + 1 + 8 + 8;  // param/b block
  const Bytes at_boundary(bytes.begin(), bytes.end() - static_cast<std::ptrdiff_t>(tail));
  EXPECT_THROW(decode_checkpoint(at_boundary), FormatError);
}

TEST(Checkpoint, TrailingBytesRejected) {
  Bytes bytes = encode_checkpoint(sample_checkpoint());
  bytes.push_back(0);
  EXPECT_THROW(decode_checkpoint(bytes), FormatError);
}

TEST(Checkpoint, DimOverflowRejected) {
  Checkpoint c;
  c.rng_state = "0";
  c.tensors.emplace("t", Tensor({1, 1}));
  Bytes bytes = encode_checkpoint(c);
  // The last tensor's dims sit just before its 8 value bytes.
  put_u64(bytes, bytes.size() - 8 - 16, std::uint64_t{1} << 40);
  put_u64(bytes, bytes.size() - 8 - 8, std::uint64_t{1} << 40);
  try {
    decode_checkpoint(bytes);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("overflow"), std::string::npos) << e.what();
  }
}

TEST(Checkpoint, SaveLoadFile) {
  const auto dir = tiny::scratch_dir("ckpt_file");
  const Checkpoint c = sample_checkpoint();
  save_checkpoint(c, dir / "a.nara");
  EXPECT_EQ(load_checkpoint(dir / "a.nara"), c);
  EXPECT_EQ(read_file(dir / "a.nara"), encode_checkpoint(c));
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++entries;
  EXPECT_EQ(entries, 1u);
  EXPECT_THROW(load_checkpoint(dir / "missing.nara"), IoError);
}

TEST(Checkpoint, TrainStateRoundTrip) {
  const RunConfig cfg = tiny::run_config(Phase::kPretrain);
  SyntheticSource data(tiny::synthetic());
  RunOptions opts;
  opts.write_files = false;
  opts.stop_at = 2;
  const TrainState state = run_training(cfg, data, init_pretrain_state(cfg), opts);
  const Checkpoint ckpt = make_checkpoint(cfg, state);
  EXPECT_TRUE(ckpt.tensors.contains("param/embed.weight"));
  EXPECT_TRUE(ckpt.tensors.contains("adam.m/embed.weight"));
  EXPECT_TRUE(ckpt.tensors.contains("adam.v/embed.weight"));
  EXPECT_EQ(restore_state(decode_checkpoint(encode_checkpoint(ckpt))), state);
}
