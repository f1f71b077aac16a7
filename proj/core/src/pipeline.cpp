#include "naraim/pipeline.hpp"

#include <string>

#include "naraim/errors.hpp"

namespace naraim {

std::string_view to_string(Policy policy) {
  switch (policy) {
    case Policy::kNaraim:
      return "naraim";
    case Policy::kAim:
      return "aim";
    case Policy::kSquare:
      return "square";
  }
  return "naraim";
}

Policy parse_policy(std::string_view text) {
  if (text == "naraim") return Policy::kNaraim;
  if (text == "aim") return Policy::kAim;
  if (text == "square") return Policy::kSquare;
  throw ConfigError("unknown policy '" + std::string(text) + "'");
}

Image train_transform(const Image& img, Policy policy, const PipelineConfig& cfg, const AugmentOptions& aug, Rng& rng) {
  Image out;
  switch (policy) {
    case Policy::kNaraim:
      out = native_aspect_ratio_resize(aug.random_crop ? random_native_crop(img, cfg, rng) : img, cfg);
      break;
    case Policy::kAim:
      out = aim_train_resize(img, cfg, rng);
      break;
    case Policy::kSquare:
      out = square_resize(img, cfg);
      break;
  }
  if (aug.flip) out = horizontal_flip(out, rng, aug.flip_probability);
  return out;
}

Image eval_transform(const Image& img, Policy policy, const PipelineConfig& cfg) {
  switch (policy) {
    case Policy::kNaraim:
      return native_aspect_ratio_resize(img, cfg);
    case Policy::kAim:
      return aim_eval_resize(img, cfg);
    case Policy::kSquare:
      return square_resize(img, cfg);
  }
  throw ContractError("eval_transform: unknown policy");
}

TokenSequence to_sequence(const Image& transformed, const PipelineConfig& cfg) {
  return pad_to_sequence(patchify(transformed, cfg), cfg);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Rng derive_rng(std::uint64_t seed, std::uint64_t step, std::uint64_t slot) {
  return Rng(splitmix64(splitmix64(splitmix64(seed) ^ step) ^ slot));
}

}  // namespace naraim
