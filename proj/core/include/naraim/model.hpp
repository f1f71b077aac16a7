#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "naraim/autodiff.hpp"
#include "naraim/image.hpp"
#include "naraim/masks.hpp"
#include "naraim/patches.hpp"
#include "naraim/position.hpp"
#include "naraim/tensor.hpp"

namespace naraim {

struct BackboneConfig {
  std::size_t layers = 4;
  std::size_t heads = 4;
  std::size_t d_model = 64;
  std::size_t d_hidden = 256;
  std::size_t patch_size = 8;
  PosEmbedMode pos_mode = PosEmbedMode::kAbsolute;
  bool frac_nonlinear = false;  // gelu after the fractional affine maps
  std::size_t head_hidden = 256;
  std::size_t probe_hidden = 256;  // 0: affine readout straight from the pooled vector
  std::size_t classes = 2;

  std::size_t head_dim() const { return d_model / heads; }
  std::size_t patch_dim() const { return Image::kChannels * patch_size * patch_size; }
  void validate() const;

  static BackboneConfig desk() { return {}; }
  // ViT-B/14.
  static BackboneConfig paper();

  bool operator==(const BackboneConfig&) const = default;
};

// Parameter groups are distinguished by key prefix.
inline constexpr std::string_view kHeadPrefix = "head.";
inline constexpr std::string_view kProbePrefix = "probe.";
bool is_head_param(std::string_view name);
bool is_probe_param(std::string_view name);
bool is_backbone_param(std::string_view name);
// Matrices are decayed; biases, norm parameters and positional maps are not.
bool is_decayed_param(std::string_view name, const Tensor& value);

ParamTree init_params(const BackboneConfig& cfg, Rng& rng);
ParamTree init_probe_params(const BackboneConfig& cfg, Rng& rng);
std::size_t count_params(const ParamTree& params);
// Closed-form backbone size (embedding, blocks, final norm, positional maps).
std::size_t backbone_param_count(const BackboneConfig& cfg);

// Rectangular batch of padded sequences.
struct TokenBatch {
  std::size_t batch = 0;
  std::size_t length = 0;
  std::size_t token_dim = 0;
  Tensor tokens;  // [B, N, D]
  Tensor real;    // [B, N], 1 for real tokens
  std::vector<TokenCoord> coords;  // B*N

  static TokenBatch from(std::span<const TokenSequence> seqs);
};

// [B, N, N] with 1 where attention is blocked.
Tensor blocked_attention(std::span<const MaskMatrix> masks);

Var backbone_forward(const BackboneConfig& cfg, const VarMap& params, const TokenBatch& batch, const Tensor& blocked);

// Per-position next-patch prediction, [B, N, 3P^2].
Var pretrain_head(const BackboneConfig& cfg, const VarMap& params, Var features);

struct ProbeOutput {
  Var pooled;  // [B, d_model]
  Var logits;  // [B, classes]
};

// Single learned query cross-attending over the real tokens of `features`.
ProbeOutput attentive_probe(const BackboneConfig& cfg, const VarMap& params, Var features, const Tensor& real);

}  // namespace naraim
