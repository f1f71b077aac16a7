#pragma once

#include <cstdint>
#include <string_view>

#include "naraim/image.hpp"
#include "naraim/patches.hpp"

namespace naraim {

// kNaraim keeps the aspect ratio. kAim is the random-resized-crop /
// shortest-side-plus-center-crop baseline. kSquare squashes the whole image
// into the square, with no cropping.
enum class Policy { kNaraim, kAim, kSquare };

std::string_view to_string(Policy policy);
Policy parse_policy(std::string_view text);

struct AugmentOptions {
  bool random_crop = false;  // aspect-preserving crop, kNaraim only
  bool flip = true;
  double flip_probability = 0.5;

  bool operator==(const AugmentOptions&) const = default;
};

// Training-time image transform for a policy.
Image train_transform(const Image& img, Policy policy, const PipelineConfig& cfg, const AugmentOptions& aug, Rng& rng);
// Deterministic evaluation-time transform.
Image eval_transform(const Image& img, Policy policy, const PipelineConfig& cfg);

TokenSequence to_sequence(const Image& transformed, const PipelineConfig& cfg);

// Independent stream for (seed, step, slot) so augmentation does not depend
// on how samples are scheduled.
Rng derive_rng(std::uint64_t seed, std::uint64_t step, std::uint64_t slot);

}  // namespace naraim
