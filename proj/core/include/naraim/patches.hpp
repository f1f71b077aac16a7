#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "naraim/image.hpp"

namespace naraim {

// Square patches in raster order. Each patch is its P x P x 3 block,
// row-major with interleaved channels.
struct PatchGrid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t patch_size = 0;
  std::vector<double> values;  // rows*cols*patch_dim()

  std::size_t count() const { return rows * cols; }
  std::size_t patch_dim() const { return Image::kChannels * patch_size * patch_size; }
  std::span<const double> patch(std::size_t k) const {
    return std::span<const double>(values).subspan(k * patch_dim(), patch_dim());
  }
};

struct TokenCoord {
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t grid_rows = 0;
  std::size_t grid_cols = 0;

  bool operator==(const TokenCoord&) const = default;
};

// Fixed-length model input. Real tokens form a prefix; padding is zero.
struct TokenSequence {
  std::size_t length = 0;     // N_max
  std::size_t token_dim = 0;  // 3P^2
  std::size_t grid_rows = 0;
  std::size_t grid_cols = 0;
  std::vector<double> tokens;  // length*token_dim
  std::vector<bool> pad_mask;  // true = real token
  std::vector<TokenCoord> coords;

  std::size_t real_count() const { return grid_rows * grid_cols; }
  std::span<const double> token(std::size_t i) const {
    return std::span<const double>(tokens).subspan(i * token_dim, token_dim);
  }
};

PatchGrid patchify(const Image& img, const PipelineConfig& cfg);
Image reconstruct(const PatchGrid& grid);
TokenSequence pad_to_sequence(const PatchGrid& grid, const PipelineConfig& cfg);

inline constexpr double kPatchNormEps = 1e-6;

// (x - mean) / sqrt(population variance + eps)
std::vector<double> patch_normalize_target(std::span<const double> patch, double eps = kPatchNormEps);

}  // namespace naraim
