#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "naraim/config.hpp"
#include "naraim/dataset.hpp"
#include "naraim/tensor.hpp"

namespace naraim {

struct Prediction {
  std::size_t index = 0;
  std::size_t label = 0;
  std::size_t predicted = 0;
  double aspect_ratio = 1.0;  // width / height of the original image
};

// Probe predictions under the policy's eval transform. Empty `indices` means
// the whole source.
std::vector<Prediction> predict(const RunConfig& cfg, const ParamTree& params, const ImageSource& data,
                                std::span<const std::size_t> indices = {}, std::size_t batch_size = 32);

double accuracy(std::span<const Prediction> predictions);
double evaluate_accuracy(const RunConfig& cfg, const ParamTree& params, const ImageSource& data);

// Inner edges of the ratio bins; bin k is (edge[k-1], edge[k]], with 0 and
// infinity at the ends.
inline const std::vector<double> kDefaultAspectEdges = {0.5, 0.8, 1.25, 2.0};

std::size_t aspect_bin(double ratio, std::span<const double> edges);

struct AspectBinReport {
  std::vector<double> edges;
  std::vector<std::size_t> count;
  std::vector<std::size_t> correct;

  std::size_t bins() const { return count.size(); }
  double accuracy(std::size_t bin) const;
  std::size_t total() const;
};

AspectBinReport aspect_bin_accuracy(std::span<const Prediction> predictions,
                                    std::span<const double> edges = kDefaultAspectEdges);

// 2-D: the target patch's row and column fractions r/H, c/W are each cut
// into 16 bins. 1-D: its raster index fraction k/(H*W) is cut into 256 bins
// laid out row-major on the 16x16 grid.
enum class PatchBinning { kGrid2d, kIndex1d };

std::string_view to_string(PatchBinning binning);
PatchBinning parse_patch_binning(std::string_view text);

struct PatchMseMap {
  static constexpr std::size_t kBins = 16;

  std::array<double, kBins * kBins> sum{};
  std::array<std::size_t, kBins * kBins> count{};
  double overall_mse = 0.0;  // loss-path MSE over every scored position
  std::size_t scored = 0;

  double mean(std::size_t row, std::size_t col) const;
  // Count-weighted mean of the cells.
  double grand_mean() const;
};

// Next-patch MSE of the pre-training head under causal attention, scored at
// every position whose successor is real. Errors are attributed to the
// predicted (target) patch.
PatchMseMap per_patch_mse_map(const RunConfig& cfg, const ParamTree& params, const ImageSource& data,
                              PatchBinning binning = PatchBinning::kGrid2d, std::span<const std::size_t> indices = {},
                              std::size_t batch_size = 16);

std::string aspect_report_csv(const AspectBinReport& report);
std::string patch_map_csv(const PatchMseMap& map);
// Binary P5, 16x16, cell means min-max scaled to 0..255; empty cells are 255.
std::string patch_map_pgm(const PatchMseMap& map);

void export_text(const std::filesystem::path& path, std::string_view content);

}  // namespace naraim
