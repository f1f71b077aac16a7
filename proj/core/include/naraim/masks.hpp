#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "naraim/image.hpp"

namespace naraim {

enum class Phase { kPretrain, kFinetune };

std::string_view to_string(Phase phase);
Phase parse_phase(std::string_view text);

// prefix_n == 0 means no prefix (plain causal attention in pre-training).
struct AttentionSpec {
  std::size_t length = 0;
  std::size_t prefix_n = 0;
  std::vector<bool> pad_mask;  // true = real token

  std::size_t real_count() const;
};

// Row-major N x N visibility; at(i, j) means query i may attend to key j.
struct MaskMatrix {
  std::size_t size = 0;
  std::vector<bool> allowed;

  bool at(std::size_t i, std::size_t j) const { return allowed[i * size + j]; }
  bool operator==(const MaskMatrix&) const = default;
};

// Uniform on {1, ..., real_tokens - 1}; 0 when fewer than two real tokens.
std::size_t sample_prefix_length(std::size_t real_tokens, Rng& rng);

MaskMatrix build_mask(const AttentionSpec& spec, Phase phase);

// Position i is scored when it predicts a real token i+1 that lies past the
// prefix, i.e. i >= prefix_n - 1 (0-based).
std::vector<bool> build_loss_mask(const AttentionSpec& spec, Phase phase);

}  // namespace naraim
