#include "naraim/patches.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "naraim/errors.hpp"

namespace naraim {

PatchGrid patchify(const Image& img, const PipelineConfig& cfg) {
  const std::size_t p = cfg.patch_size;
  if (img.empty() || p == 0 || img.height() % p != 0 || img.width() % p != 0) {
    throw ContractError("patchify: image " + std::to_string(img.height()) + "x" + std::to_string(img.width()) +
                        " is not a multiple of patch size " + std::to_string(p));
  }
  PatchGrid grid;
  grid.rows = img.height() / p;
  grid.cols = img.width() / p;
  grid.patch_size = p;
  const std::size_t dim = grid.patch_dim();
  grid.values.resize(grid.count() * dim);
  const std::size_t row_len = p * Image::kChannels;
  const auto src = img.subpixels();
  for (std::size_t k = 0; k < grid.count(); ++k) {
    const std::size_t top = p * (k / grid.cols);
    const std::size_t left = p * (k % grid.cols);
    double* dst = &grid.values[k * dim];
    for (std::size_t y = 0; y < p; ++y) {
      const std::size_t from = ((top + y) * img.width() + left) * Image::kChannels;
      for (std::size_t j = 0; j < row_len; ++j) dst[y * row_len + j] = src[from + j];
    }
  }
  return grid;
}

Image reconstruct(const PatchGrid& grid) {
  const std::size_t p = grid.patch_size;
  if (grid.count() == 0 || grid.values.size() != grid.count() * grid.patch_dim()) {
    throw ContractError("reconstruct: malformed patch grid");
  }
  Image img(grid.rows * p, grid.cols * p);
  auto dst = img.subpixels();
  const std::size_t row_len = p * Image::kChannels;
  for (std::size_t k = 0; k < grid.count(); ++k) {
    const std::size_t top = p * (k / grid.cols);
    const std::size_t left = p * (k % grid.cols);
    const double* src = &grid.values[k * grid.patch_dim()];
    for (std::size_t y = 0; y < p; ++y) {
      const std::size_t to = ((top + y) * img.width() + left) * Image::kChannels;
      for (std::size_t j = 0; j < row_len; ++j) dst[to + j] = static_cast<float>(src[y * row_len + j]);
    }
  }
  return img;
}

TokenSequence pad_to_sequence(const PatchGrid& grid, const PipelineConfig& cfg) {
  const std::size_t limit = cfg.max_tokens();
  if (grid.count() > limit) {
    throw ContractError("pad_to_sequence: " + std::to_string(grid.count()) + " patches exceed max_tokens " +
                        std::to_string(limit));
  }
  if (grid.patch_size != cfg.patch_size) throw ContractError("pad_to_sequence: patch size mismatch");
  TokenSequence seq;
  seq.length = limit;
  seq.token_dim = grid.patch_dim();
  seq.grid_rows = grid.rows;
  seq.grid_cols = grid.cols;
  seq.tokens.assign(limit * seq.token_dim, 0.0);
  std::copy(grid.values.begin(), grid.values.end(), seq.tokens.begin());
  seq.pad_mask.assign(limit, false);
  seq.coords.assign(limit, TokenCoord{0, 0, grid.rows, grid.cols});
  for (std::size_t k = 0; k < grid.count(); ++k) {
    seq.pad_mask[k] = true;
    seq.coords[k] = {k / grid.cols, k % grid.cols, grid.rows, grid.cols};
  }
  return seq;
}

std::vector<double> patch_normalize_target(std::span<const double> patch, double eps) {
  if (patch.empty()) return {};
  // Flat patches map to exact zeros.
  if (std::all_of(patch.begin(), patch.end(), [&](double v) { return v == patch[0]; })) {
    return std::vector<double>(patch.size(), 0.0);
  }
  const double n = static_cast<double>(patch.size());
  double mean = 0.0;
  for (double v : patch) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : patch) var += (v - mean) * (v - mean);
  var /= n;
  const double inv = 1.0 / std::sqrt(var + eps);
  std::vector<double> out(patch.size());
  for (std::size_t i = 0; i < patch.size(); ++i) out[i] = (patch[i] - mean) * inv;
  return out;
}

}  // namespace naraim
