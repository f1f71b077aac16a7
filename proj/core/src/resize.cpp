#include <algorithm>
#include <cmath>
#include <string>

#include "naraim/errors.hpp"
#include "naraim/image.hpp"

namespace naraim {
namespace {

struct Tap {
  std::size_t lo;
  std::size_t hi;
  double frac;
};

// Source taps for each output coordinate, half-pixel aligned.
std::vector<Tap> bilinear_taps(std::size_t in, std::size_t out) {
  std::vector<Tap> taps(out);
  const double ratio = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t i = 0; i < out; ++i) {
    double src = (static_cast<double>(i) + 0.5) * ratio - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const auto lo = static_cast<std::size_t>(src);
    taps[i] = {lo, std::min(lo + 1, in - 1), src - static_cast<double>(lo)};
  }
  return taps;
}

}  // namespace

Image resize_bilinear(const Image& img, std::size_t out_h, std::size_t out_w) {
  if (img.empty()) throw InputError("resize: empty image");
  if (out_h == 0 || out_w == 0) throw InputError("resize: target dims must be at least 1x1");
  if (out_h == img.height() && out_w == img.width()) return img;
  const auto ty = bilinear_taps(img.height(), out_h);
  const auto tx = bilinear_taps(img.width(), out_w);
  Image out(out_h, out_w);
  for (std::size_t y = 0; y < out_h; ++y) {
    const Tap& a = ty[y];
    for (std::size_t x = 0; x < out_w; ++x) {
      const Tap& b = tx[x];
      for (std::size_t c = 0; c < Image::kChannels; ++c) {
        const double top = img.at(a.lo, b.lo, c) * (1.0 - b.frac) + img.at(a.lo, b.hi, c) * b.frac;
        const double bottom = img.at(a.hi, b.lo, c) * (1.0 - b.frac) + img.at(a.hi, b.hi, c) * b.frac;
        out.at(y, x, c) = static_cast<float>(top * (1.0 - a.frac) + bottom * a.frac);
      }
    }
  }
  return out;
}

Image crop(const Image& img, const CropRect& rect) {
  if (rect.height == 0 || rect.width == 0 || rect.top + rect.height > img.height() ||
      rect.left + rect.width > img.width()) {
    throw ContractError("crop: rect " + std::to_string(rect.height) + "x" + std::to_string(rect.width) + "+" +
                        std::to_string(rect.top) + "+" + std::to_string(rect.left) + " outside " +
                        std::to_string(img.height()) + "x" + std::to_string(img.width()));
  }
  if (rect.height == img.height() && rect.width == img.width()) return img;
  Image out(rect.height, rect.width);
  const auto src = img.subpixels();
  auto dst = out.subpixels();
  const std::size_t row = rect.width * Image::kChannels;
  for (std::size_t y = 0; y < rect.height; ++y) {
    const std::size_t from = ((rect.top + y) * img.width() + rect.left) * Image::kChannels;
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(from), row, dst.begin() + static_cast<std::ptrdiff_t>(y * row));
  }
  return out;
}

NativeResizePlan plan_native_resize(std::size_t height, std::size_t width, const PipelineConfig& cfg) {
  if (height == 0 || width == 0) throw InputError("native resize: image smaller than 1x1");
  cfg.validate();
  const std::size_t p = cfg.patch_size;
  const double h = static_cast<double>(height);
  const double w = static_cast<double>(width);
  const double budget_scale = std::sqrt(static_cast<double>(cfg.pixel_budget) / (h * w));
  const double clamp_scale = static_cast<double>(p) / std::min(h, w);

  NativeResizePlan plan;
  plan.min_side_clamped = clamp_scale > budget_scale;
  plan.scale = std::max(budget_scale, clamp_scale);
  plan.scaled_h = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(h * plan.scale)));
  plan.scaled_w = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(w * plan.scale)));
  if (plan.min_side_clamped) {
    // Rounding must not push the short side below one patch.
    if (height <= width) plan.scaled_h = std::max(plan.scaled_h, p);
    if (width <= height) plan.scaled_w = std::max(plan.scaled_w, p);
  } else {
    // Floating point may overshoot the exact floor by one pixel.
    while (plan.scaled_h * plan.scaled_w > cfg.pixel_budget) {
      if (plan.scaled_h >= plan.scaled_w) --plan.scaled_h;
      else --plan.scaled_w;
    }
  }

  std::size_t rows = plan.scaled_h / p;
  std::size_t cols = plan.scaled_w / p;
  const std::size_t limit = cfg.max_tokens();
  while (rows * cols > limit) {
    if (cols >= rows) --cols;
    else --rows;
  }
  plan.out_h = rows * p;
  plan.out_w = cols * p;
  return plan;
}

Image native_aspect_ratio_resize(const Image& img, const PipelineConfig& cfg) {
  if (img.empty()) throw InputError("native resize: image smaller than 1x1");
  const auto plan = plan_native_resize(img.height(), img.width(), cfg);
  const Image scaled = resize_bilinear(img, plan.scaled_h, plan.scaled_w);
  return crop(scaled, {0, 0, plan.out_h, plan.out_w});
}

Image resized_crop(const Image& img, const CropRect& rect, std::size_t side) {
  return resize_bilinear(crop(img, rect), side, side);
}

Image aim_eval_resize(const Image& img, const PipelineConfig& cfg) {
  if (img.empty()) throw InputError("aim eval resize: empty image");
  const std::size_t side = cfg.square_side();
  const std::size_t short_target = side * 8 / 7;
  const double h = static_cast<double>(img.height());
  const double w = static_cast<double>(img.width());
  std::size_t rh = short_target, rw = short_target;
  if (img.height() < img.width()) {
    rw = static_cast<std::size_t>(std::floor(w * static_cast<double>(short_target) / h));
  } else if (img.width() < img.height()) {
    rh = static_cast<std::size_t>(std::floor(h * static_cast<double>(short_target) / w));
  }
  const Image scaled = resize_bilinear(img, rh, rw);
  return crop(scaled, {(rh - side) / 2, (rw - side) / 2, side, side});
}

Image square_resize(const Image& img, const PipelineConfig& cfg) {
  const std::size_t side = cfg.square_side();
  return resize_bilinear(img, side, side);
}

}  // namespace naraim
