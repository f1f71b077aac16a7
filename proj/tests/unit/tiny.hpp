#pragma once

#include <filesystem>
#include <string>

#include "naraim/config.hpp"
#include "naraim/synthetic.hpp"

// Small configs that train in milliseconds.
namespace tiny {

inline naraim::RunConfig run_config(naraim::Phase phase) {
  naraim::RunConfig cfg = naraim::RunConfig::desk(phase);
  cfg.pipeline = {24 * 24, 4};
  cfg.backbone.layers = 1;
  cfg.backbone.heads = 2;
  cfg.backbone.d_model = 16;
  cfg.backbone.d_hidden = 24;
  cfg.backbone.patch_size = 4;
  cfg.backbone.head_hidden = 16;
  cfg.backbone.probe_hidden = 8;
  cfg.train.batch_size = 4;
  cfg.train.total_iters = 30;
  cfg.train.warmup_iters = 3;
  cfg.train.cooldown_iters = phase == naraim::Phase::kPretrain ? 5 : 0;
  cfg.train.seed = 7;
  cfg.log_every = 5;
  cfg.checkpoint_every = 10;
  return cfg;
}

inline naraim::SyntheticSpec synthetic(std::size_t n = 12, std::uint64_t seed = 1) {
  naraim::SyntheticSpec spec;
  spec.n = n;
  spec.seed = seed;
  spec.side = 40;
  return spec;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("naraim_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace tiny
