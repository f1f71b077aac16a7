#include "naraim/image.hpp"

#include <cmath>
#include <string>

#include "naraim/errors.hpp"

namespace naraim {

Image::Image(std::size_t height, std::size_t width, float fill)
    : height_(height), width_(width), data_(height * width * kChannels, fill) {
  if (height == 0 || width == 0) throw InputError("image: dims must be at least 1x1");
}

Image::Image(std::size_t height, std::size_t width, std::vector<float> subpixels)
    : height_(height), width_(width), data_(std::move(subpixels)) {
  if (height == 0 || width == 0) throw InputError("image: dims must be at least 1x1");
  if (data_.size() != height * width * kChannels) {
    throw InputError("image: expected " + std::to_string(height * width * kChannels) + " subpixels, got " +
                     std::to_string(data_.size()));
  }
}

std::size_t PipelineConfig::square_side() const {
  const auto root = static_cast<std::size_t>(std::sqrt(static_cast<double>(pixel_budget)));
  std::size_t side = root;
  while (side * side > pixel_budget) --side;
  while ((side + 1) * (side + 1) <= pixel_budget) ++side;
  return patch_size * (side / patch_size);
}

void PipelineConfig::validate() const {
  if (patch_size == 0) throw ConfigError("pipeline: patch_size must be positive");
  if (pixel_budget < patch_size * patch_size) {
    throw ConfigError("pipeline: pixel_budget " + std::to_string(pixel_budget) + " is below one patch (" +
                      std::to_string(patch_size * patch_size) + " pixels)");
  }
}

Image flip_horizontal(const Image& img) {
  Image out(img.height(), img.width());
  for (std::size_t y = 0; y < img.height(); ++y)
    for (std::size_t x = 0; x < img.width(); ++x)
      for (std::size_t c = 0; c < Image::kChannels; ++c) out.at(y, img.width() - 1 - x, c) = img.at(y, x, c);
  return out;
}

Image horizontal_flip(const Image& img, Rng& rng, double p) {
  std::bernoulli_distribution coin(p);
  return coin(rng) ? flip_horizontal(img) : img;
}

}  // namespace naraim
