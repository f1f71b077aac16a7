#include "naraim/masks.hpp"

#include <algorithm>
#include <string>

#include "naraim/errors.hpp"

namespace naraim {

std::string_view to_string(Phase phase) { return phase == Phase::kPretrain ? "pretrain" : "finetune"; }

Phase parse_phase(std::string_view text) {
  if (text == "pretrain") return Phase::kPretrain;
  if (text == "finetune") return Phase::kFinetune;
  throw ConfigError("unknown phase '" + std::string(text) + "'");
}

std::size_t AttentionSpec::real_count() const {
  return static_cast<std::size_t>(std::count(pad_mask.begin(), pad_mask.end(), true));
}

namespace {

void check_spec(const AttentionSpec& spec) {
  if (spec.pad_mask.size() != spec.length) {
    throw ContractError("attention spec: pad mask has " + std::to_string(spec.pad_mask.size()) +
                        " entries for length " + std::to_string(spec.length));
  }
  if (spec.prefix_n != 0 && spec.prefix_n >= std::max<std::size_t>(spec.real_count(), 1)) {
    throw ContractError("attention spec: prefix " + std::to_string(spec.prefix_n) + " not below real count " +
                        std::to_string(spec.real_count()));
  }
}

}  // namespace

std::size_t sample_prefix_length(std::size_t real_tokens, Rng& rng) {
  if (real_tokens < 2) return 0;
  return std::uniform_int_distribution<std::size_t>(1, real_tokens - 1)(rng);
}

MaskMatrix build_mask(const AttentionSpec& spec, Phase phase) {
  check_spec(spec);
  const std::size_t n = spec.length;
  MaskMatrix mask{n, std::vector<bool>(n * n, false)};
  for (std::size_t i = 0; i < n; ++i) {
    if (!spec.pad_mask[i]) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (!spec.pad_mask[j]) continue;
      const bool visible = phase == Phase::kFinetune || j <= i || (i < spec.prefix_n && j < spec.prefix_n);
      mask.allowed[i * n + j] = visible;
    }
  }
  return mask;
}

std::vector<bool> build_loss_mask(const AttentionSpec& spec, Phase phase) {
  check_spec(spec);
  std::vector<bool> scored(spec.length, false);
  if (phase != Phase::kPretrain) return scored;
  const std::size_t first = spec.prefix_n == 0 ? 0 : spec.prefix_n - 1;
  for (std::size_t i = first; i + 1 < spec.length; ++i) {
    scored[i] = spec.pad_mask[i] && spec.pad_mask[i + 1];
  }
  return scored;
}

}  // namespace naraim
