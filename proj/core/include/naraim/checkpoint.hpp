#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "naraim/codec.hpp"
#include "naraim/tensor.hpp"

namespace naraim {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Metadata holds the step, the RNG state and the rendered run config.
// Tensors carry parameters and optimizer moments under distinct prefixes.
struct Checkpoint {
  std::uint64_t step = 0;
  std::string rng_state;
  std::string config_text;
  std::map<std::string, Tensor> tensors;

  bool operator==(const Checkpoint&) const = default;
};

Bytes encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace naraim
