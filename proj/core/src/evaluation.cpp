#include "naraim/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "naraim/codec.hpp"
#include "naraim/errors.hpp"
#include "naraim/losses.hpp"
#include "naraim/pipeline.hpp"
#include "naraim/trainer.hpp"

namespace naraim {
namespace {

std::vector<std::size_t> resolve(std::span<const std::size_t> indices, const ImageSource& data) {
  if (!indices.empty()) return {indices.begin(), indices.end()};
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return all;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::size_t patch_bin(const TokenCoord& c, std::size_t raster, PatchBinning binning) {
  constexpr std::size_t b = PatchMseMap::kBins;
  if (binning == PatchBinning::kGrid2d) {
    return (c.row * b / c.grid_rows) * b + c.col * b / c.grid_cols;
  }
  return raster * b * b / (c.grid_rows * c.grid_cols);
}

}  // namespace

std::vector<Prediction> predict(const RunConfig& cfg, const ParamTree& params, const ImageSource& data,
                                std::span<const std::size_t> indices, std::size_t batch_size) {
  const std::vector<std::size_t> todo = resolve(indices, data);
  if (todo.empty()) throw ContractError("evaluation on an empty dataset");
  if (batch_size == 0) throw ContractError("predict: batch_size must be positive");
  std::vector<Prediction> out;
  out.reserve(todo.size());
  for (std::size_t start = 0; start < todo.size(); start += batch_size) {
    const std::size_t stop = std::min(todo.size(), start + batch_size);
    std::vector<TokenSequence> seqs;
    for (std::size_t k = start; k < stop; ++k) {
      const Image img = data.load(todo[k]);
      out.push_back({todo[k], data.label(todo[k]), 0, static_cast<double>(img.width()) / static_cast<double>(img.height())});
      seqs.push_back(to_sequence(eval_transform(img, cfg.policy, cfg.pipeline), cfg.pipeline));
    }
    FeatureBatch fb = encode_sequences(cfg.backbone, params, seqs);
    Tape tape;
    ParamTree probe;
    for (const auto& [k, v] : params) {
      if (is_probe_param(k)) probe.emplace(k, v);
    }
    const VarMap vars = tape.bind(probe, false);
    const ProbeOutput po = attentive_probe(cfg.backbone, vars, tape.constant(std::move(fb.features)), fb.real);
    const Tensor& logits = po.logits.value();
    const std::size_t classes = logits.dim(1);
    for (std::size_t s = 0; s < stop - start; ++s) {
      const auto r = logits.data().subspan(s * classes, classes);
      out[start + s].predicted = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
    }
  }
  return out;
}

double accuracy(std::span<const Prediction> predictions) {
  if (predictions.empty()) throw ContractError("accuracy of no predictions");
  std::size_t correct = 0;
  for (const auto& p : predictions) correct += p.label == p.predicted ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

double evaluate_accuracy(const RunConfig& cfg, const ParamTree& params, const ImageSource& data) {
  if (data.size() == 0) throw ContractError("evaluation on an empty dataset");
  return accuracy(predict(cfg, params, data));
}

std::size_t aspect_bin(double ratio, std::span<const double> edges) {
  if (!(ratio > 0.0)) throw ContractError("aspect ratio must be positive");
  return static_cast<std::size_t>(std::lower_bound(edges.begin(), edges.end(), ratio) - edges.begin());
}

double AspectBinReport::accuracy(std::size_t bin) const {
  return count.at(bin) == 0 ? 0.0 : static_cast<double>(correct[bin]) / static_cast<double>(count[bin]);
}

std::size_t AspectBinReport::total() const { return std::accumulate(count.begin(), count.end(), std::size_t{0}); }

AspectBinReport aspect_bin_accuracy(std::span<const Prediction> predictions, std::span<const double> edges) {
  if (!std::is_sorted(edges.begin(), edges.end()) || std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
    throw ContractError("aspect bin edges must be strictly increasing");
  }
  AspectBinReport report;
  report.edges.assign(edges.begin(), edges.end());
  report.count.assign(edges.size() + 1, 0);
  report.correct.assign(edges.size() + 1, 0);
  for (const auto& p : predictions) {
    const std::size_t b = aspect_bin(p.aspect_ratio, edges);
    ++report.count[b];
    report.correct[b] += p.label == p.predicted ? 1 : 0;
  }
  return report;
}

std::string_view to_string(PatchBinning binning) { return binning == PatchBinning::kGrid2d ? "grid2d" : "index1d"; }

PatchBinning parse_patch_binning(std::string_view text) {
  if (text == "grid2d") return PatchBinning::kGrid2d;
  if (text == "index1d") return PatchBinning::kIndex1d;
  throw ConfigError("unknown patch binning '" + std::string(text) + "'");
}

double PatchMseMap::mean(std::size_t row, std::size_t col) const {
  const std::size_t k = row * kBins + col;
  return count.at(k) == 0 ? 0.0 : sum[k] / static_cast<double>(count[k]);
}

double PatchMseMap::grand_mean() const {
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < kBins * kBins; ++k) {
    total += sum[k];
    n += count[k];
  }
  return n == 0 ? 0.0 : total / static_cast<double>(n);
}

PatchMseMap per_patch_mse_map(const RunConfig& cfg, const ParamTree& params, const ImageSource& data,
                              PatchBinning binning, std::span<const std::size_t> indices, std::size_t batch_size) {
  const std::vector<std::size_t> todo = resolve(indices, data);
  if (todo.empty()) throw ContractError("evaluation on an empty dataset");
  if (batch_size == 0) throw ContractError("per_patch_mse_map: batch_size must be positive");
  PatchMseMap map;
  double weighted_loss = 0.0;
  for (std::size_t start = 0; start < todo.size(); start += batch_size) {
    const std::size_t stop = std::min(todo.size(), start + batch_size);
    std::vector<TokenSequence> seqs;
    std::vector<MaskMatrix> masks;
    std::vector<std::vector<bool>> loss_masks;
    for (std::size_t k = start; k < stop; ++k) {
      seqs.push_back(to_sequence(eval_transform(data.load(todo[k]), cfg.policy, cfg.pipeline), cfg.pipeline));
      const AttentionSpec spec{seqs.back().length, 0, seqs.back().pad_mask};
      masks.push_back(build_mask(spec, Phase::kPretrain));
      loss_masks.push_back(build_loss_mask(spec, Phase::kPretrain));
    }
    const TokenBatch batch = TokenBatch::from(seqs);
    const Tensor scored = loss_weights(loss_masks);
    std::size_t batch_scored = 0;
    for (double v : scored.data()) batch_scored += v != 0.0 ? 1 : 0;
    if (batch_scored == 0) continue;

    Tape tape;
    const VarMap vars = tape.bind(params, false);
    const Var preds = pretrain_head(cfg.backbone, vars, backbone_forward(cfg.backbone, vars, batch, blocked_attention(masks)));
    const Tensor targets = next_patch_targets(batch, cfg.train.loss_mode);
    weighted_loss += next_patch_mse(preds, targets, scored).value().item() * static_cast<double>(batch_scored);
    map.scored += batch_scored;

    const std::vector<double> errors = per_position_mse(preds.value(), targets);
    const std::size_t n = batch.length;
    for (std::size_t s = 0; s < seqs.size(); ++s) {
      for (std::size_t i = 0; i + 1 < n; ++i) {
        if (scored[s * n + i] == 0.0) continue;
        const std::size_t b = patch_bin(batch.coords[s * n + i + 1], i + 1, binning);
        map.sum[b] += errors[s * n + i];
        ++map.count[b];
      }
    }
  }
  map.overall_mse = map.scored == 0 ? 0.0 : weighted_loss / static_cast<double>(map.scored);
  return map;
}

std::string aspect_report_csv(const AspectBinReport& report) {
  std::string out = "low,high,count,correct,accuracy\n";
  for (std::size_t b = 0; b < report.bins(); ++b) {
    const double lo = b == 0 ? 0.0 : report.edges[b - 1];
    const std::string hi = b == report.edges.size() ? "inf" : fmt(report.edges[b]);
    out += fmt(lo) + "," + hi + "," + std::to_string(report.count[b]) + "," + std::to_string(report.correct[b]) + "," +
           fmt(report.accuracy(b)) + "\n";
  }
  return out;
}

std::string patch_map_csv(const PatchMseMap& map) {
  std::string out = "row,col,count,mean_mse\n";
  for (std::size_t r = 0; r < PatchMseMap::kBins; ++r) {
    for (std::size_t c = 0; c < PatchMseMap::kBins; ++c) {
      out += std::to_string(r) + "," + std::to_string(c) + "," + std::to_string(map.count[r * PatchMseMap::kBins + c]) +
             "," + fmt(map.mean(r, c)) + "\n";
    }
  }
  return out;
}

std::string patch_map_pgm(const PatchMseMap& map) {
  constexpr std::size_t b = PatchMseMap::kBins;
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (std::size_t k = 0; k < b * b; ++k) {
    if (map.count[k] == 0) continue;
    const double m = map.sum[k] / static_cast<double>(map.count[k]);
    lo = any ? std::min(lo, m) : m;
    hi = any ? std::max(hi, m) : m;
    any = true;
  }
  std::string out = "P5 16 16 255\n";
  for (std::size_t k = 0; k < b * b; ++k) {
    unsigned char px = 255;
    if (map.count[k] != 0) {
      const double m = map.sum[k] / static_cast<double>(map.count[k]);
      px = hi > lo ? static_cast<unsigned char>(std::lround(255.0 * (m - lo) / (hi - lo))) : 0;
    }
    out.push_back(static_cast<char>(px));
  }
  return out;
}

void export_text(const std::filesystem::path& path, std::string_view content) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(content.data()), content.size()));
}

}  // namespace naraim
