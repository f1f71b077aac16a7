#include <algorithm>
#include <cmath>

#include "naraim/errors.hpp"
#include "naraim/image.hpp"

namespace naraim {
namespace {

constexpr double kMinAreaFraction = 0.08;
constexpr double kMaxAreaFraction = 1.0;
constexpr double kMinRatio = 3.0 / 4.0;
constexpr double kMaxRatio = 4.0 / 3.0;
constexpr int kCropAttempts = 10;

std::size_t uniform_index(Rng& rng, std::size_t upper_inclusive) {
  return std::uniform_int_distribution<std::size_t>(0, upper_inclusive)(rng);
}

}  // namespace

CropRect sample_resized_crop(std::size_t height, std::size_t width, Rng& rng) {
  if (height == 0 || width == 0) throw InputError("resized crop: empty image");
  const double area = static_cast<double>(height) * static_cast<double>(width);
  std::uniform_real_distribution<double> area_dist(kMinAreaFraction, kMaxAreaFraction);
  std::uniform_real_distribution<double> log_ratio_dist(std::log(kMinRatio), std::log(kMaxRatio));
  for (int attempt = 0; attempt < kCropAttempts; ++attempt) {
    const double target = area * area_dist(rng);
    const double ratio = std::exp(log_ratio_dist(rng));
    const auto w = static_cast<std::size_t>(std::lround(std::sqrt(target * ratio)));
    const auto h = static_cast<std::size_t>(std::lround(std::sqrt(target / ratio)));
    if (w >= 1 && h >= 1 && w <= width && h <= height) {
      const std::size_t top = uniform_index(rng, height - h);
      const std::size_t left = uniform_index(rng, width - w);
      return {top, left, h, w};
    }
  }
  // Fallback: largest centered crop whose ratio is clamped into range.
  const double in_ratio = static_cast<double>(width) / static_cast<double>(height);
  std::size_t w = width, h = height;
  if (in_ratio < kMinRatio) {
    h = std::min(height, static_cast<std::size_t>(std::lround(static_cast<double>(width) / kMinRatio)));
  } else if (in_ratio > kMaxRatio) {
    w = std::min(width, static_cast<std::size_t>(std::lround(static_cast<double>(height) * kMaxRatio)));
  }
  h = std::max<std::size_t>(h, 1);
  w = std::max<std::size_t>(w, 1);
  return {(height - h) / 2, (width - w) / 2, h, w};
}

Image aim_train_resize(const Image& img, const PipelineConfig& cfg, Rng& rng) {
  if (img.empty()) throw InputError("aim train resize: empty image");
  const CropRect rect = sample_resized_crop(img.height(), img.width(), rng);
  return resized_crop(img, rect, cfg.square_side());
}

CropRect sample_native_crop(std::size_t height, std::size_t width, const PipelineConfig& cfg, Rng& rng) {
  if (height == 0 || width == 0) throw InputError("native crop: empty image");
  const double area = static_cast<double>(height) * static_cast<double>(width);
  const double budget = static_cast<double>(cfg.pixel_budget);
  if (area <= budget) return {0, 0, height, width};
  const double min_scale = std::sqrt(budget / area);
  const double k = std::uniform_real_distribution<double>(min_scale, 1.0)(rng);
  // Ceil keeps the crop area at or above the budget.
  const std::size_t h = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(static_cast<double>(height) * k)), 1, height);
  const std::size_t w = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(static_cast<double>(width) * k)), 1, width);
  const std::size_t top = uniform_index(rng, height - h);
  const std::size_t left = uniform_index(rng, width - w);
  return {top, left, h, w};
}

Image random_native_crop(const Image& img, const PipelineConfig& cfg, Rng& rng) {
  if (img.empty()) throw InputError("native crop: empty image");
  return crop(img, sample_native_crop(img.height(), img.width(), cfg, rng));
}

}  // namespace naraim
