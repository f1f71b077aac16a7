#include "naraim/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>

#include "naraim/codec.hpp"
#include "naraim/errors.hpp"

namespace naraim {
namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(const std::string& key, std::string_view text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw ConfigError("config key '" + key + "': '" + std::string(text) + "' is not a number");
  }
  return v;
}

std::uint64_t to_uint(const std::string& key, std::string_view text) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("config key '" + key + "': '" + std::string(text) + "' is not a non-negative integer");
  }
  return v;
}

bool to_bool(const std::string& key, std::string_view text) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw ConfigError("config key '" + key + "': expected true or false, got '" + std::string(text) + "'");
}

template <class Fn>
auto wrap(const std::string& key, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    if (msg.starts_with("config key")) throw;
    throw ConfigError("config key '" + key + "': " + msg);
  }
}

struct Field {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string& key, std::string_view)> set;
};

Field size_field(std::size_t RunConfig::*outer) {
  return {[outer](const RunConfig& c) { return std::to_string(c.*outer); },
          [outer](RunConfig& c, const std::string& k, std::string_view v) { c.*outer = to_uint(k, v); }};
}

template <class Getter>
Field size_ref(Getter ref) {
  return {[ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); },
          [ref](RunConfig& c, const std::string& k, std::string_view v) { ref(c) = to_uint(k, v); }};
}

template <class Getter>
Field double_ref(Getter ref) {
  return {[ref](const RunConfig& c) { return fmt_double(ref(const_cast<RunConfig&>(c))); },
          [ref](RunConfig& c, const std::string& k, std::string_view v) { ref(c) = to_double(k, v); }};
}

template <class Getter>
Field bool_ref(Getter ref) {
  return {[ref](const RunConfig& c) { return std::string(ref(const_cast<RunConfig&>(c)) ? "true" : "false"); },
          [ref](RunConfig& c, const std::string& k, std::string_view v) { ref(c) = to_bool(k, v); }};
}

template <class Getter, class Parse>
Field enum_ref(Getter ref, Parse parse) {
  return {[ref](const RunConfig& c) { return std::string(to_string(ref(const_cast<RunConfig&>(c)))); },
          [ref, parse](RunConfig& c, const std::string& k, std::string_view v) {
            ref(c) = wrap(k, [&] { return parse(v); });
          }};
}

// Keys in render order.
const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"policy", enum_ref([](RunConfig& c) -> Policy& { return c.policy; }, parse_policy)},
      {"pixel_budget", size_ref([](RunConfig& c) -> std::size_t& { return c.pipeline.pixel_budget; })},
      {"patch_size",
       {[](const RunConfig& c) { return std::to_string(c.pipeline.patch_size); },
        [](RunConfig& c, const std::string& k, std::string_view v) {
          c.pipeline.patch_size = c.backbone.patch_size = to_uint(k, v);
        }}},
      {"layers", size_ref([](RunConfig& c) -> std::size_t& { return c.backbone.layers; })},
      {"heads", size_ref([](RunConfig& c) -> std::size_t& { return c.backbone.heads; })},
      {"d_model", size_ref([](RunConfig& c) -> std::size_t& { return c.backbone.d_model; })},
      {"d_hidden", size_ref([](RunConfig& c) -> std::size_t& { return c.backbone.d_hidden; })},
      {"pos_embed", enum_ref([](RunConfig& c) -> PosEmbedMode& { return c.backbone.pos_mode; }, parse_pos_embed_mode)},
      {"frac_nonlinear", bool_ref([](RunConfig& c) -> bool& { return c.backbone.frac_nonlinear; })},
      {"head_hidden", size_ref([](RunConfig& c) -> std::size_t& { return c.backbone.head_hidden; })},
      {"probe_hidden", size_ref([](RunConfig& c) -> std::size_t& { return c.backbone.probe_hidden; })},
      {"classes", size_ref([](RunConfig& c) -> std::size_t& { return c.backbone.classes; })},
      {"phase", enum_ref([](RunConfig& c) -> Phase& { return c.train.phase; }, parse_phase)},
      {"peak_lr", double_ref([](RunConfig& c) -> double& { return c.train.peak_lr; })},
      {"min_lr", double_ref([](RunConfig& c) -> double& { return c.train.min_lr; })},
      {"weight_decay", double_ref([](RunConfig& c) -> double& { return c.train.weight_decay; })},
      {"batch_size", size_ref([](RunConfig& c) -> std::size_t& { return c.train.batch_size; })},
      {"grad_clip", double_ref([](RunConfig& c) -> double& { return c.train.grad_clip; })},
      {"warmup_iters", size_ref([](RunConfig& c) -> std::size_t& { return c.train.warmup_iters; })},
      {"cooldown_iters", size_ref([](RunConfig& c) -> std::size_t& { return c.train.cooldown_iters; })},
      {"total_iters", size_ref([](RunConfig& c) -> std::size_t& { return c.train.total_iters; })},
      {"decay_rate", double_ref([](RunConfig& c) -> double& { return c.train.decay_rate; })},
      {"beta1", double_ref([](RunConfig& c) -> double& { return c.train.beta1; })},
      {"beta2", double_ref([](RunConfig& c) -> double& { return c.train.beta2; })},
      {"adam_eps", double_ref([](RunConfig& c) -> double& { return c.train.adam_eps; })},
      {"schedule", enum_ref([](RunConfig& c) -> Schedule& { return c.train.schedule; }, parse_schedule)},
      {"seed", size_ref([](RunConfig& c) -> std::uint64_t& { return c.train.seed; })},
      {"loss_mode", enum_ref([](RunConfig& c) -> LossMode& { return c.train.loss_mode; }, parse_loss_mode)},
      {"random_crop", bool_ref([](RunConfig& c) -> bool& { return c.augment.random_crop; })},
      {"flip", bool_ref([](RunConfig& c) -> bool& { return c.augment.flip; })},
      {"flip_probability", double_ref([](RunConfig& c) -> double& { return c.augment.flip_probability; })},
      {"finetune_augment", bool_ref([](RunConfig& c) -> bool& { return c.finetune_augment; })},
      {"freeze_backbone", bool_ref([](RunConfig& c) -> bool& { return c.freeze_backbone; })},
      {"data",
       {[](const RunConfig& c) { return c.data; },
        [](RunConfig& c, const std::string&, std::string_view v) { c.data = std::string(v); }}},
      {"out_dir",
       {[](const RunConfig& c) { return c.out_dir; },
        [](RunConfig& c, const std::string&, std::string_view v) { c.out_dir = std::string(v); }}},
      {"checkpoint_every", size_field(&RunConfig::checkpoint_every)},
      {"log_every", size_field(&RunConfig::log_every)},
  };
  return table;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

void RunConfig::validate() const {
  pipeline.validate();
  backbone.validate();
  train.validate();
  if (pipeline.patch_size != backbone.patch_size) throw ConfigError("pipeline and backbone patch sizes differ");
  if (checkpoint_every == 0) throw ConfigError("checkpoint_every must be positive");
  if (log_every == 0) throw ConfigError("log_every must be positive");
  if (!(augment.flip_probability >= 0.0 && augment.flip_probability <= 1.0)) {
    throw ConfigError("flip_probability must lie in [0, 1]");
  }
}

RunConfig RunConfig::desk(Phase phase) {
  RunConfig cfg;
  cfg.train = TrainConfig::desk(phase);
  return cfg;
}

RunConfig RunConfig::paper(Phase phase) {
  RunConfig cfg;
  cfg.pipeline = PipelineConfig::paper();
  cfg.backbone = BackboneConfig::paper();
  cfg.train = TrainConfig::paper(phase);
  return cfg;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys{"preset"};
  for (const auto& [k, f] : fields()) keys.push_back(k);
  return keys;
}

RunConfig parse_config(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view() : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    std::string key(trim(line.substr(0, eq)));
    if (!seen.insert(key).second) throw ConfigError("config key '" + key + "' given twice");
    entries.emplace_back(std::move(key), std::string(trim(line.substr(eq + 1))));
  }

  std::string preset = "desk";
  Phase phase = Phase::kPretrain;
  for (const auto& [k, v] : entries) {
    if (k == "preset") preset = v;
    if (k == "phase") phase = wrap(k, [&] { return parse_phase(v); });
  }
  RunConfig cfg;
  if (preset == "desk") {
    cfg = RunConfig::desk(phase);
  } else if (preset == "paper") {
    cfg = RunConfig::paper(phase);
  } else {
    throw ConfigError("config key 'preset': unknown preset '" + preset + "'");
  }

  const auto& table = fields();
  for (const auto& [k, v] : entries) {
    if (k == "preset") continue;
    const auto it = std::find_if(table.begin(), table.end(), [&](const auto& f) { return f.first == k; });
    if (it == table.end()) throw ConfigError("unknown config key '" + k + "'");
    it->second.set(cfg, k, v);
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  try {
    return parse_config(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string render_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& [k, f] : fields()) out += k + " = " + f.get(cfg) + "\n";
  return out;
}

}  // namespace naraim
