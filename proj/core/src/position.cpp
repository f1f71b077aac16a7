#include "naraim/position.hpp"

#include <cmath>
#include <string>

#include "naraim/errors.hpp"

namespace naraim {

std::string_view to_string(PosEmbedMode mode) {
  return mode == PosEmbedMode::kAbsolute ? "absolute" : "fractional";
}

PosEmbedMode parse_pos_embed_mode(std::string_view text) {
  if (text == "absolute") return PosEmbedMode::kAbsolute;
  if (text == "fractional") return PosEmbedMode::kFractional;
  throw ConfigError("unknown positional embedding mode '" + std::string(text) + "'");
}

std::vector<double> absolute_pos_embed(std::size_t h, std::size_t w, std::size_t d_model) {
  if (d_model == 0 || d_model % 4 != 0) {
    throw ConfigError("absolute_pos_embed: d_model " + std::to_string(d_model) +
                      " must split into two even halves");
  }
  const std::size_t d = d_model / 2;
  std::vector<double> out(d_model);
  for (std::size_t half = 0; half < 2; ++half) {
    const double pos = static_cast<double>(half == 0 ? h : w);
    for (std::size_t i = 0; i < d / 2; ++i) {
      const double angle = pos / std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(d));
      out[half * d + 2 * i] = std::sin(angle);
      out[half * d + 2 * i + 1] = std::cos(angle);
    }
  }
  return out;
}

std::vector<double> fractional_pos_embed(std::size_t h, std::size_t w, std::size_t grid_h, std::size_t grid_w,
                                         const FractionalPosParams& params, bool nonlinear) {
  if (grid_h == 0 || grid_w == 0 || h >= grid_h || w >= grid_w) {
    throw ContractError("fractional_pos_embed: position outside grid");
  }
  const std::size_t d = params.row_weight.size();
  if (params.row_bias.size() != d || params.col_weight.size() != d || params.col_bias.size() != d) {
    throw ShapeError("fractional_pos_embed: parameter widths differ");
  }
  const double fh = static_cast<double>(h) / static_cast<double>(grid_h);
  const double fw = static_cast<double>(w) / static_cast<double>(grid_w);
  auto act = [nonlinear](double v) { return nonlinear ? 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0))) : v; };
  std::vector<double> out(d);
  for (std::size_t i = 0; i < d; ++i) {
    out[i] = act(fh * params.row_weight[i] + params.row_bias[i]) + act(fw * params.col_weight[i] + params.col_bias[i]);
  }
  return out;
}

}  // namespace naraim
