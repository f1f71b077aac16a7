#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "naraim/image.hpp"
#include "naraim/model.hpp"
#include "naraim/optim.hpp"
#include "naraim/pipeline.hpp"

namespace naraim {

// Everything a pretrain or finetune run needs.
struct RunConfig {
  PipelineConfig pipeline = PipelineConfig::desk();
  BackboneConfig backbone = BackboneConfig::desk();
  TrainConfig train = TrainConfig::desk(Phase::kPretrain);
  Policy policy = Policy::kNaraim;
  AugmentOptions augment;
  bool finetune_augment = true;  // false: finetune sees eval-time transforms
  bool freeze_backbone = true;
  std::string data;     // manifest path
  std::string out_dir = "run";
  std::size_t checkpoint_every = 1000;
  std::size_t log_every = 10;

  void validate() const;

  static RunConfig desk(Phase phase);
  static RunConfig paper(Phase phase);

  bool operator==(const RunConfig&) const = default;
};

// Flat "key = value" text, '#' starts a comment. An optional
// "preset = desk|paper" line and "phase" choose the defaults; other keys
// override them. Unknown keys raise ConfigError naming the key.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);
// Every field, one per line; parse_config(render_config(c)) == c.
std::string render_config(const RunConfig& cfg);

std::vector<std::string> config_keys();

}  // namespace naraim
