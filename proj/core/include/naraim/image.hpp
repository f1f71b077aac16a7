#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace naraim {

using Rng = std::mt19937_64;

// RGB raster, subpixels in [0,1], row-major with interleaved channels.
class Image {
 public:
  static constexpr std::size_t kChannels = 3;

  Image() = default;
  Image(std::size_t height, std::size_t width, float fill = 0.0f);
  Image(std::size_t height, std::size_t width, std::vector<float> subpixels);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t pixel_count() const { return height_ * width_; }
  bool empty() const { return height_ == 0 || width_ == 0; }

  float& at(std::size_t y, std::size_t x, std::size_t c) { return data_[(y * width_ + x) * kChannels + c]; }
  float at(std::size_t y, std::size_t x, std::size_t c) const { return data_[(y * width_ + x) * kChannels + c]; }

  std::span<const float> subpixels() const { return data_; }
  std::span<float> subpixels() { return data_; }

  bool operator==(const Image& other) const = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<float> data_;
};

struct PipelineConfig {
  std::size_t pixel_budget = 224 * 224;
  std::size_t patch_size = 14;

  std::size_t max_tokens() const { return pixel_budget / (patch_size * patch_size); }
  std::size_t patch_dim() const { return Image::kChannels * patch_size * patch_size; }
  // Side of the square used by the AIM-style policies: the largest multiple
  // of the patch size not above sqrt(pixel_budget).
  std::size_t square_side() const;
  void validate() const;

  static PipelineConfig paper() { return {}; }
  static PipelineConfig desk() { return {64 * 64, 8}; }

  bool operator==(const PipelineConfig&) const = default;
};

struct CropRect {
  std::size_t top = 0;
  std::size_t left = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  bool operator==(const CropRect&) const = default;
};

// Bilinear resampling with half-pixel centers. Same-size input is returned
// unchanged.
Image resize_bilinear(const Image& img, std::size_t out_h, std::size_t out_w);
Image crop(const Image& img, const CropRect& rect);
Image flip_horizontal(const Image& img);

// Intermediate and final dims of the aspect-preserving resize.
struct NativeResizePlan {
  double scale = 0.0;
  std::size_t scaled_h = 0;  // before the top-left patch crop
  std::size_t scaled_w = 0;
  std::size_t out_h = 0;     // positive multiples of the patch size
  std::size_t out_w = 0;
  bool min_side_clamped = false;

  std::size_t patch_rows(std::size_t p) const { return out_h / p; }
  std::size_t patch_cols(std::size_t p) const { return out_w / p; }
};

NativeResizePlan plan_native_resize(std::size_t height, std::size_t width, const PipelineConfig& cfg);
Image native_aspect_ratio_resize(const Image& img, const PipelineConfig& cfg);

// Square-forcing baselines.
CropRect sample_resized_crop(std::size_t height, std::size_t width, Rng& rng);
Image resized_crop(const Image& img, const CropRect& rect, std::size_t side);
Image aim_train_resize(const Image& img, const PipelineConfig& cfg, Rng& rng);
Image aim_eval_resize(const Image& img, const PipelineConfig& cfg);
// Whole image squashed to square_side x square_side.
Image square_resize(const Image& img, const PipelineConfig& cfg);

// Aspect-preserving random crop holding at least pixel_budget pixels; images
// already below the budget come back unchanged.
CropRect sample_native_crop(std::size_t height, std::size_t width, const PipelineConfig& cfg, Rng& rng);
Image random_native_crop(const Image& img, const PipelineConfig& cfg, Rng& rng);

Image horizontal_flip(const Image& img, Rng& rng, double p = 0.5);

}  // namespace naraim
