#include "naraim/model.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "naraim/errors.hpp"

namespace naraim {

BackboneConfig BackboneConfig::paper() {
  BackboneConfig cfg;
  cfg.layers = 12;
  cfg.heads = 12;
  cfg.d_model = 768;
  cfg.d_hidden = 3072;
  cfg.patch_size = 14;
  cfg.head_hidden = 3072;
  cfg.probe_hidden = 3072;
  cfg.classes = 1000;
  return cfg;
}

void BackboneConfig::validate() const {
  if (layers == 0 || heads == 0 || d_model == 0 || d_hidden == 0 || patch_size == 0 || head_hidden == 0) {
    throw ConfigError("backbone: sizes must be positive");
  }
  if (d_model % heads != 0) {
    throw ConfigError("backbone: d_model " + std::to_string(d_model) + " not divisible by heads " +
                      std::to_string(heads));
  }
  if (pos_mode == PosEmbedMode::kAbsolute && d_model % 4 != 0) {
    throw ConfigError("backbone: absolute embeddings need d_model divisible by 4, got " + std::to_string(d_model));
  }
  if (classes < 2) throw ConfigError("backbone: classes must be at least 2");
}

bool is_head_param(std::string_view name) { return name.starts_with(kHeadPrefix); }
bool is_probe_param(std::string_view name) { return name.starts_with(kProbePrefix); }
bool is_backbone_param(std::string_view name) { return !is_head_param(name) && !is_probe_param(name); }

bool is_decayed_param(std::string_view name, const Tensor& value) {
  return value.rank() >= 2 && !name.starts_with("pos.");
}

namespace {

std::string block_key(std::size_t layer, std::string_view leaf) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "blocks.%02zu.", layer);
  return std::string(buf).append(leaf);
}

Tensor normal_tensor(Shape dims, double stddev, Rng& rng) {
  Tensor t(std::move(dims));
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

constexpr double kInitStd = 0.02;

void add_linear(ParamTree& p, const std::string& prefix, std::size_t in, std::size_t out, Rng& rng,
                double stddev = kInitStd) {
  p.emplace(prefix + ".weight", normal_tensor({in, out}, stddev, rng));
  p.emplace(prefix + ".bias", Tensor({out}));
}

void add_norm(ParamTree& p, const std::string& prefix, std::size_t d) {
  p.emplace(prefix + ".scale", Tensor({d}, 1.0));
  p.emplace(prefix + ".offset", Tensor({d}));
}

}  // namespace

ParamTree init_probe_params(const BackboneConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t d = cfg.d_model;
  // Fan-in scaled, unlike the backbone.
  const auto fan_in = [](std::size_t n) { return 1.0 / std::sqrt(static_cast<double>(n)); };
  ParamTree p;
  p.emplace("probe.query", normal_tensor({d}, 1.0, rng));
  add_linear(p, "probe.q", d, d, rng, fan_in(d));
  add_linear(p, "probe.k", d, d, rng, fan_in(d));
  add_linear(p, "probe.v", d, d, rng, fan_in(d));
  add_norm(p, "probe.norm", d);
  if (cfg.probe_hidden > 0) {
    add_linear(p, "probe.fc1", d, cfg.probe_hidden, rng, fan_in(d));
    add_linear(p, "probe.fc2", cfg.probe_hidden, cfg.classes, rng, fan_in(cfg.probe_hidden));
  } else {
    add_linear(p, "probe.out", d, cfg.classes, rng, fan_in(d));
  }
  return p;
}

ParamTree init_params(const BackboneConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t d = cfg.d_model;
  ParamTree p;
  add_linear(p, "embed", cfg.patch_dim(), d, rng);
  if (cfg.pos_mode == PosEmbedMode::kFractional) {
    p.emplace("pos.row.weight", normal_tensor({d}, kInitStd, rng));
    p.emplace("pos.row.bias", Tensor({d}));
    p.emplace("pos.col.weight", normal_tensor({d}, kInitStd, rng));
    p.emplace("pos.col.bias", Tensor({d}));
  }
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    add_norm(p, block_key(l, "ln1"), d);
    add_linear(p, block_key(l, "attn.q"), d, d, rng);
    add_linear(p, block_key(l, "attn.k"), d, d, rng);
    add_linear(p, block_key(l, "attn.v"), d, d, rng);
    add_linear(p, block_key(l, "attn.o"), d, d, rng);
    add_norm(p, block_key(l, "ln2"), d);
    add_linear(p, block_key(l, "mlp.fc1"), d, cfg.d_hidden, rng);
    add_linear(p, block_key(l, "mlp.fc2"), cfg.d_hidden, d, rng);
  }
  add_norm(p, "norm", d);
  add_linear(p, "head.fc1", d, cfg.head_hidden, rng);
  add_linear(p, "head.fc2", cfg.head_hidden, cfg.patch_dim(), rng);
  p.merge(init_probe_params(cfg, rng));
  return p;
}

std::size_t count_params(const ParamTree& params) {
  std::size_t n = 0;
  for (const auto& [name, t] : params) n += t.size();
  return n;
}

std::size_t backbone_param_count(const BackboneConfig& cfg) {
  const std::size_t d = cfg.d_model;
  std::size_t n = cfg.patch_dim() * d + d;
  if (cfg.pos_mode == PosEmbedMode::kFractional) n += 4 * d;
  const std::size_t block = 2 * d + 4 * (d * d + d) + 2 * d + (d * cfg.d_hidden + cfg.d_hidden) + (cfg.d_hidden * d + d);
  n += cfg.layers * block;
  n += 2 * d;
  return n;
}

TokenBatch TokenBatch::from(std::span<const TokenSequence> seqs) {
  if (seqs.empty()) throw ContractError("token batch: no sequences");
  TokenBatch b;
  b.batch = seqs.size();
  b.length = seqs[0].length;
  b.token_dim = seqs[0].token_dim;
  b.tokens = Tensor({b.batch, b.length, b.token_dim});
  b.real = Tensor({b.batch, b.length});
  b.coords.reserve(b.batch * b.length);
  for (std::size_t s = 0; s < b.batch; ++s) {
    const TokenSequence& seq = seqs[s];
    if (seq.length != b.length || seq.token_dim != b.token_dim) throw ContractError("token batch: ragged sequences");
    std::copy(seq.tokens.begin(), seq.tokens.end(), b.tokens.data().begin() + static_cast<std::ptrdiff_t>(s * b.length * b.token_dim));
    for (std::size_t i = 0; i < b.length; ++i) b.real[s * b.length + i] = seq.pad_mask[i] ? 1.0 : 0.0;
    b.coords.insert(b.coords.end(), seq.coords.begin(), seq.coords.end());
  }
  return b;
}

Tensor blocked_attention(std::span<const MaskMatrix> masks) {
  if (masks.empty()) throw ContractError("blocked_attention: no masks");
  const std::size_t n = masks[0].size;
  Tensor out({masks.size(), n, n});
  for (std::size_t s = 0; s < masks.size(); ++s) {
    if (masks[s].size != n) throw ContractError("blocked_attention: ragged masks");
    for (std::size_t k = 0; k < n * n; ++k) out[s * n * n + k] = masks[s].allowed[k] ? 0.0 : 1.0;
  }
  return out;
}

namespace {

const Var& param(const VarMap& p, const std::string& key) {
  auto it = p.find(key);
  if (it == p.end()) throw ContractError("model: missing parameter '" + key + "'");
  return it->second;
}

Var linear(const VarMap& p, const std::string& prefix, Var x) {
  return ops::add(ops::matmul(x, param(p, prefix + ".weight")), param(p, prefix + ".bias"));
}

Var norm(const VarMap& p, const std::string& prefix, Var x) {
  return ops::add(ops::mul(ops::layer_norm_last(x), param(p, prefix + ".scale")), param(p, prefix + ".offset"));
}

Var self_attention(const BackboneConfig& cfg, const VarMap& p, std::size_t layer, Var x, const Tensor& blocked) {
  const Var q = linear(p, block_key(layer, "attn.q"), x);
  const Var k = linear(p, block_key(layer, "attn.k"), x);
  const Var v = linear(p, block_key(layer, "attn.v"), x);
  const std::size_t dh = cfg.head_dim();
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> heads;
  heads.reserve(cfg.heads);
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    const Var qh = ops::slice(q, 2, h * dh, (h + 1) * dh);
    const Var kh = ops::slice(k, 2, h * dh, (h + 1) * dh);
    const Var vh = ops::slice(v, 2, h * dh, (h + 1) * dh);
    Var scores = ops::scale(ops::matmul(qh, ops::transpose_last2(kh)), inv_sqrt);
    scores = ops::masked_fill(scores, blocked, -std::numeric_limits<double>::infinity());
    heads.push_back(ops::matmul(ops::softmax_last(scores), vh));
  }
  return linear(p, block_key(layer, "attn.o"), ops::concat_last(heads));
}

Tensor absolute_table(const BackboneConfig& cfg, const TokenBatch& batch) {
  const std::size_t d = cfg.d_model;
  Tensor table({batch.batch, batch.length, d});
  for (std::size_t t = 0; t < batch.coords.size(); ++t) {
    const auto row = absolute_pos_embed(batch.coords[t].row, batch.coords[t].col, d);
    std::copy(row.begin(), row.end(), table.data().begin() + static_cast<std::ptrdiff_t>(t * d));
  }
  return table;
}

Var fractional_embedding(const BackboneConfig& cfg, const VarMap& p, const TokenBatch& batch, Tape& tape) {
  const std::size_t d = cfg.d_model;
  Tensor fh({batch.batch, batch.length, 1});
  Tensor fw({batch.batch, batch.length, 1});
  for (std::size_t t = 0; t < batch.coords.size(); ++t) {
    const TokenCoord& c = batch.coords[t];
    fh[t] = static_cast<double>(c.row) / static_cast<double>(c.grid_rows);
    fw[t] = static_cast<double>(c.col) / static_cast<double>(c.grid_cols);
  }
  auto affine = [&](Tensor frac, const std::string& prefix) {
    Var out = ops::add(ops::matmul(tape.constant(std::move(frac)), ops::reshape(param(p, prefix + ".weight"), {1, d})),
                       param(p, prefix + ".bias"));
    return cfg.frac_nonlinear ? ops::gelu(out) : out;
  };
  return ops::add(affine(std::move(fh), "pos.row"), affine(std::move(fw), "pos.col"));
}

void require_finite(const Var& x, const std::string& where) {
  if (!x.value().all_finite()) throw NumericError("non-finite activations in " + where);
}

}  // namespace

Var backbone_forward(const BackboneConfig& cfg, const VarMap& params, const TokenBatch& batch, const Tensor& blocked) {
  cfg.validate();
  if (batch.token_dim != cfg.patch_dim()) {
    throw ShapeError("backbone: token dim " + std::to_string(batch.token_dim) + " vs patch dim " +
                     std::to_string(cfg.patch_dim()));
  }
  if (blocked.dims() != Shape{batch.batch, batch.length, batch.length}) {
    throw ShapeError("backbone: attention mask " + shape_string(blocked.dims()) + " does not match batch");
  }
  Tape& tape = param(params, "embed.weight").tape();
  Var x = linear(params, "embed", tape.constant(batch.tokens));
  if (cfg.pos_mode == PosEmbedMode::kAbsolute) {
    x = ops::add(x, tape.constant(absolute_table(cfg, batch)));
  } else {
    x = ops::add(x, fractional_embedding(cfg, params, batch, tape));
  }
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    x = ops::add(x, self_attention(cfg, params, l, norm(params, block_key(l, "ln1"), x), blocked));
    const Var hidden = ops::gelu(linear(params, block_key(l, "mlp.fc1"), norm(params, block_key(l, "ln2"), x)));
    x = ops::add(x, linear(params, block_key(l, "mlp.fc2"), hidden));
    require_finite(x, "block " + std::to_string(l));
  }
  return norm(params, "norm", x);
}

Var pretrain_head(const BackboneConfig&, const VarMap& params, Var features) {
  return linear(params, "head.fc2", ops::gelu(linear(params, "head.fc1", features)));
}

ProbeOutput attentive_probe(const BackboneConfig& cfg, const VarMap& params, Var features, const Tensor& real) {
  const Shape& fd = features.dims();
  if (fd.size() != 3 || fd[2] != cfg.d_model || real.dims() != Shape{fd[0], fd[1]}) {
    throw ShapeError("attentive probe: features " + shape_string(fd) + " with pad mask " + shape_string(real.dims()));
  }
  const std::size_t batch = fd[0], n = fd[1], d = cfg.d_model;
  Tensor blocked({batch, 1, n});
  for (std::size_t s = 0; s < batch; ++s) {
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      const bool is_real = real[s * n + i] != 0.0;
      blocked[s * n + i] = is_real ? 0.0 : 1.0;
      any = any || is_real;
    }
    if (!any) throw ContractError("attentive probe: sample " + std::to_string(s) + " has no real tokens");
  }

  const Var query = linear(params, "probe.q", ops::reshape(param(params, "probe.query"), {1, d}));
  const Var k = linear(params, "probe.k", features);
  const Var v = linear(params, "probe.v", features);
  const std::size_t dh = cfg.head_dim();
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> heads;
  heads.reserve(cfg.heads);
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    const Var qh = ops::slice(query, 1, h * dh, (h + 1) * dh);
    const Var kh = ops::slice(k, 2, h * dh, (h + 1) * dh);
    const Var vh = ops::slice(v, 2, h * dh, (h + 1) * dh);
    Var scores = ops::reshape(ops::matmul(kh, ops::transpose_last2(qh)), {batch, 1, n});
    scores = ops::masked_fill(ops::scale(scores, inv_sqrt), blocked, -std::numeric_limits<double>::infinity());
    heads.push_back(ops::matmul(ops::softmax_last(scores), vh));
  }
  ProbeOutput out;
  out.pooled = ops::reshape(ops::concat_last(heads), {batch, d});
  const Var normed = norm(params, "probe.norm", out.pooled);
  if (cfg.probe_hidden > 0) {
    out.logits = linear(params, "probe.fc2", ops::gelu(linear(params, "probe.fc1", normed)));
  } else {
    out.logits = linear(params, "probe.out", normed);
  }
  return out;
}

}  // namespace naraim
