#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <ostream>
#include <string>

#include "naraim/checkpoint.hpp"
#include "naraim/codec.hpp"
#include "naraim/config.hpp"
#include "naraim/dataset.hpp"
#include "naraim/errors.hpp"
#include "naraim/evaluation.hpp"
#include "naraim/pipeline.hpp"
#include "naraim/synthetic.hpp"
#include "naraim/trainer.hpp"

namespace naraim {
namespace {

struct Options {
  std::string config;
  std::string resume;
  std::string init;
  std::string ckpt;
  std::string data;
  std::string out = ".";
  std::string binning = "grid2d";
  bool bins = false;
  bool patch_mse = false;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::size_t classes = 2;
  std::string image;
  std::string policy;
  std::string preset = "paper";
};

bool has_prefix(const ParamTree& params, std::string_view prefix) {
  for (const auto& [k, v] : params) {
    if (k.starts_with(prefix)) return true;
  }
  return false;
}

void log_step(std::ostream& out, const StepStats& s, std::size_t every, std::uint64_t total) {
  if (s.step % every != 0 && s.step != total) return;
  char line[128];
  if (s.accuracy >= 0.0) {
    std::snprintf(line, sizeof line, "step %llu  lr %.3e  loss %.6f  acc %.3f\n", static_cast<unsigned long long>(s.step),
                  s.lr, s.loss, s.accuracy);
  } else {
    std::snprintf(line, sizeof line, "step %llu  lr %.3e  loss %.6f\n", static_cast<unsigned long long>(s.step), s.lr,
                  s.loss);
  }
  out << line << std::flush;
}

RunConfig phase_config(const std::string& path, Phase phase) {
  RunConfig cfg = load_config(path);
  if (cfg.train.phase != phase) {
    throw ConfigError(path + ": phase is '" + std::string(to_string(cfg.train.phase)) + "', expected '" +
                      std::string(to_string(phase)) + "'");
  }
  if (cfg.data.empty()) throw ConfigError(path + ": config key 'data' is required");
  return cfg;
}

int cmd_pretrain(const Options& o, std::ostream& out) {
  const RunConfig cfg = phase_config(o.config, Phase::kPretrain);
  const ManifestSource data(load_dataset(cfg.data));
  TrainState state = o.resume.empty() ? init_pretrain_state(cfg) : restore_state(load_checkpoint(o.resume));
  RunOptions run;
  run.on_step = [&](const StepStats& s) { log_step(out, s, cfg.log_every, cfg.train.total_iters); };
  run_training(cfg, data, std::move(state), run);
  out << "checkpoint " << (std::filesystem::path(cfg.out_dir) / "checkpoint.nara").string() << "\n";
  return 0;
}

int cmd_finetune(const Options& o, std::ostream& out) {
  const RunConfig cfg = phase_config(o.config, Phase::kFinetune);
  const ManifestSource data(load_dataset(cfg.data));
  const TrainState pretrained = restore_state(load_checkpoint(o.init));
  RunOptions run;
  run.on_step = [&](const StepStats& s) { log_step(out, s, cfg.log_every, cfg.train.total_iters); };
  run_training(cfg, data, init_finetune_state(cfg, pretrained.params), run);
  out << "checkpoint " << (std::filesystem::path(cfg.out_dir) / "checkpoint.nara").string() << "\n";
  return 0;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(o.ckpt);
  const RunConfig cfg = parse_config(ckpt.config_text);
  const ParamTree params = restore_state(ckpt).params;
  const ManifestSource data(load_dataset(o.data));
  const std::filesystem::path dir = o.out;
  const bool has_probe = has_prefix(params, kProbePrefix);
  if (!has_probe && !o.patch_mse) throw ConfigError("checkpoint has no probe; only --patch-mse applies");
  if (has_probe) {
    const auto preds = predict(cfg, params, data);
    char line[64];
    std::snprintf(line, sizeof line, "accuracy %.6f (%zu images)\n", accuracy(preds), preds.size());
    out << line;
    if (o.bins) {
      const AspectBinReport report = aspect_bin_accuracy(preds);
      export_text(dir / "aspect_bins.csv", aspect_report_csv(report));
      out << aspect_report_csv(report);
    }
  } else if (o.bins) {
    throw ConfigError("--bins needs a finetuned checkpoint with a probe");
  }
  if (o.patch_mse) {
    if (!has_prefix(params, kHeadPrefix)) throw ConfigError("--patch-mse needs a pretrained checkpoint with a head");
    const PatchMseMap map = per_patch_mse_map(cfg, params, data, parse_patch_binning(o.binning));
    export_text(dir / "patch_mse.csv", patch_map_csv(map));
    export_text(dir / "patch_mse.pgm", patch_map_pgm(map));
    char line[96];
    std::snprintf(line, sizeof line, "validation mse %.6f over %zu positions\n", map.overall_mse, map.scored);
    out << line;
  }
  return 0;
}

int cmd_synth(const Options& o, std::ostream& out) {
  SyntheticSpec spec;
  spec.n = o.n;
  spec.seed = o.seed;
  spec.classes = o.classes;
  const DatasetManifest m = generate_synthetic(spec, o.out);
  out << "wrote " << m.entries.size() << " images to " << o.out << "\n";
  return 0;
}

int cmd_preprocess(const Options& o, std::ostream& out) {
  PipelineConfig pipeline;
  if (!o.config.empty()) {
    pipeline = load_config(o.config).pipeline;
  } else if (o.preset == "desk") {
    pipeline = PipelineConfig::desk();
  } else if (o.preset != "paper") {
    throw ConfigError("unknown preset '" + o.preset + "'");
  }
  const Image img = read_image(o.image);
  Rng rng = derive_rng(o.seed, 0, 0);
  Image result;
  if (o.policy == "naraim") {
    result = native_aspect_ratio_resize(img, pipeline);
  } else if (o.policy == "aim-train") {
    result = aim_train_resize(img, pipeline, rng);
  } else if (o.policy == "aim-eval") {
    result = aim_eval_resize(img, pipeline);
  } else if (o.policy == "square") {
    result = square_resize(img, pipeline);
  } else {
    throw ConfigError("unknown policy '" + o.policy + "'");
  }
  const std::size_t patches = (result.height() / pipeline.patch_size) * (result.width() / pipeline.patch_size);
  out << result.height() << "x" << result.width() << ", " << patches << " patches\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Aspect-ratio-preserving autoregressive image pre-training"};
  app.require_subcommand(1);
  Options o;

  auto* pretrain = app.add_subcommand("pretrain", "Pre-train a backbone with next-patch prediction");
  pretrain->add_option("--config", o.config, "Run config file")->required()->check(CLI::ExistingFile);
  pretrain->add_option("--resume", o.resume, "Checkpoint to resume from")->check(CLI::ExistingFile);

  auto* finetune = app.add_subcommand("finetune", "Train an attentive probe on a pre-trained backbone");
  finetune->add_option("--config", o.config, "Run config file")->required()->check(CLI::ExistingFile);
  finetune->add_option("--init", o.init, "Pre-trained checkpoint")->required()->check(CLI::ExistingFile);

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  eval->add_option("--ckpt", o.ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  eval->add_option("--data", o.data, "Dataset manifest")->required()->check(CLI::ExistingFile);
  eval->add_flag("--bins", o.bins, "Write aspect-ratio binned accuracy");
  eval->add_flag("--patch-mse", o.patch_mse, "Write the per-patch validation MSE map");
  eval->add_option("--binning", o.binning, "Patch map binning")->check(CLI::IsMember({"grid2d", "index1d"}));
  eval->add_option("--out", o.out, "Report directory")->check(CLI::ExistingDirectory);

  auto* synth = app.add_subcommand("synth", "Generate the synthetic circle/ellipse dataset");
  synth->add_option("--out", o.out, "Output directory")->required();
  synth->add_option("--n", o.n, "Number of images")->required()->check(CLI::PositiveNumber);
  synth->add_option("--seed", o.seed, "Seed")->required();
  synth->add_option("--classes", o.classes, "Number of classes")->check(CLI::Range(2, 64));

  auto* preprocess = app.add_subcommand("preprocess", "Print the dims an image gets under a policy");
  preprocess->add_option("--image", o.image, "Image file")->required()->check(CLI::ExistingFile);
  preprocess->add_option("--policy", o.policy, "Policy")
      ->required()
      ->check(CLI::IsMember({"naraim", "aim-train", "aim-eval", "square"}));
  preprocess->add_option("--preset", o.preset, "Pipeline preset when no config is given")
      ->check(CLI::IsMember({"paper", "desk"}));
  preprocess->add_option("--config", o.config, "Take the pipeline from a run config")->check(CLI::ExistingFile);
  preprocess->add_option("--seed", o.seed, "Seed for aim-train");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (pretrain->parsed()) return cmd_pretrain(o, out);
    if (finetune->parsed()) return cmd_finetune(o, out);
    if (eval->parsed()) return cmd_eval(o, out);
    if (synth->parsed()) return cmd_synth(o, out);
    if (preprocess->parsed()) return cmd_preprocess(o, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace naraim
