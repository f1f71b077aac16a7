#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace naraim {

enum class PosEmbedMode { kAbsolute, kFractional };

std::string_view to_string(PosEmbedMode mode);
PosEmbedMode parse_pos_embed_mode(std::string_view text);

// Fixed sinusoidal table: the row embedding phi(h, .) concatenated with the
// column embedding phi(w, .), each of width d = d_model / 2 with sin on even
// slots and cos on odd slots. d_model must be a multiple of 4.
std::vector<double> absolute_pos_embed(std::size_t h, std::size_t w, std::size_t d_model);

// Learned maps for the proportion embedding f(h/H) + g(w/W).
struct FractionalPosParams {
  std::span<const double> row_weight;
  std::span<const double> row_bias;
  std::span<const double> col_weight;
  std::span<const double> col_bias;
};

std::vector<double> fractional_pos_embed(std::size_t h, std::size_t w, std::size_t grid_h, std::size_t grid_w,
                                         const FractionalPosParams& params, bool nonlinear = false);

}  // namespace naraim
