#include "naraim/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "naraim/codec.hpp"
#include "naraim/errors.hpp"
#include "naraim/pipeline.hpp"

namespace naraim {
namespace {

constexpr float kBackgroundLow = 0.05f;
constexpr float kBackgroundHigh = 0.45f;
constexpr float kShapeLow = 0.6f;
constexpr float kShapeHigh = 0.95f;

struct Wave {
  double kx = 0.0;
  double ky = 0.0;
  double phase = 0.0;
};

Wave random_wave(Rng& rng, double short_side) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double angle = unit(rng) * std::numbers::pi;
  const double wavelength = short_side * (0.6 + 0.9 * unit(rng));
  const double k = 2.0 * std::numbers::pi / wavelength;
  return {k * std::cos(angle), k * std::sin(angle), unit(rng) * 2.0 * std::numbers::pi};
}

std::string image_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "images/%05zu.ppm", index);
  return buf;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (n == 0) throw ConfigError("synthetic: n must be positive");
  if (classes < 2) throw ConfigError("synthetic: need at least two classes");
  if (!(min_ratio > 0.0) || !(max_ratio >= min_ratio)) throw ConfigError("synthetic: bad ratio range");
  if (side < 8) throw ConfigError("synthetic: side too small");
  if (!(min_radius > 0.0) || !(max_radius >= min_radius) || max_radius >= 0.5) {
    throw ConfigError("synthetic: bad radius range");
  }
}

double class_axis_ratio(std::size_t label) { return 1.0 + 0.5 * static_cast<double>(label); }

SyntheticSample render_synthetic(const SyntheticSpec& spec, std::size_t index) {
  spec.validate();
  Rng rng = derive_rng(spec.seed, index, 0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SyntheticSample s;
  s.label = index % spec.classes;
  const double log_lo = std::log(spec.min_ratio), log_hi = std::log(spec.max_ratio);
  const double ratio = std::exp(log_lo + (log_hi - log_lo) * unit(rng));
  const double side = static_cast<double>(spec.side);
  const auto w = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(side * std::sqrt(ratio))));
  const auto h = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(side / std::sqrt(ratio))));
  s.aspect_ratio = static_cast<double>(w) / static_cast<double>(h);
  const double short_side = static_cast<double>(std::min(h, w));

  float lo[3], hi[3], fg[3];
  for (int c = 0; c < 3; ++c) {
    lo[c] = kBackgroundLow + 0.1f * static_cast<float>(unit(rng));
    hi[c] = kBackgroundHigh - 0.15f * static_cast<float>(unit(rng));
  }
  for (float& v : fg) v = kShapeLow + (kShapeHigh - kShapeLow) * static_cast<float>(unit(rng));
  const Wave w1 = random_wave(rng, short_side);
  const Wave w2 = random_wave(rng, short_side);

  const double q = class_axis_ratio(s.label);
  const double rho = short_side * (spec.min_radius + (spec.max_radius - spec.min_radius) * unit(rng));
  ShapeParams& shape = s.shape;
  shape.semi_major = rho * std::sqrt(q);
  shape.semi_minor = rho / std::sqrt(q);
  shape.angle = unit(rng) * std::numbers::pi;
  const double ca = std::cos(shape.angle), sa = std::sin(shape.angle);
  const double ext_x = std::hypot(shape.semi_major * ca, shape.semi_minor * sa);
  const double ext_y = std::hypot(shape.semi_major * sa, shape.semi_minor * ca);
  auto place = [&](double extent, double length) {
    const double lo_c = extent + 1.0, hi_c = length - extent - 1.0;
    return hi_c > lo_c ? lo_c + (hi_c - lo_c) * unit(rng) : length / 2.0;
  };
  shape.center_x = place(ext_x, static_cast<double>(w));
  shape.center_y = place(ext_y, static_cast<double>(h));

  const double inv_a2 = 1.0 / (shape.semi_major * shape.semi_major);
  const double inv_b2 = 1.0 / (shape.semi_minor * shape.semi_minor);
  auto inside = [&](double x, double y) {
    const double dx = x - shape.center_x, dy = y - shape.center_y;
    const double u = dx * ca + dy * sa, v = -dx * sa + dy * ca;
    return u * u * inv_a2 + v * v * inv_b2 <= 1.0;
  };

  s.image = Image(h, w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double px = static_cast<double>(x) + 0.5, py = static_cast<double>(y) + 0.5;
      const double t = 0.5 + 0.25 * std::sin(w1.kx * px + w1.ky * py + w1.phase) +
                       0.25 * std::sin(w2.kx * px + w2.ky * py + w2.phase);
      int hits = 0;
      for (double oy : {-0.25, 0.25}) {
        for (double ox : {-0.25, 0.25}) hits += inside(px + ox, py + oy) ? 1 : 0;
      }
      const float cover = static_cast<float>(hits) / 4.0f;
      for (std::size_t c = 0; c < 3; ++c) {
        const float bg = lo[c] + (hi[c] - lo[c]) * static_cast<float>(t);
        s.image.at(y, x, c) = bg + (fg[c] - bg) * cover;
      }
    }
  }
  return s;
}

DatasetManifest generate_synthetic(const SyntheticSpec& spec, const std::filesystem::path& out_dir) {
  spec.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "images", ec);
  if (ec) throw IoError("cannot create " + (out_dir / "images").string() + ": " + ec.message());
  DatasetManifest manifest;
  manifest.root = out_dir;
  manifest.classes = spec.classes;
  for (std::size_t c = 0; c < spec.classes; ++c) {
    manifest.class_names.push_back(c == 0 ? "circle" : "ellipse" + std::to_string(c));
  }
  for (std::size_t i = 0; i < spec.n; ++i) {
    const SyntheticSample s = render_synthetic(spec, i);
    const std::string name = image_name(i);
    write_ppm(out_dir / name, s.image);
    manifest.entries.push_back({name, s.label});
  }
  const std::string text = render_manifest(manifest);
  write_file_atomic(out_dir / "manifest.tsv", std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  return manifest;
}

SyntheticSource::SyntheticSource(SyntheticSpec spec) : spec_(spec) { spec_.validate(); }

std::size_t SyntheticSource::label(std::size_t index) const {
  if (index >= spec_.n) throw std::out_of_range("synthetic index");
  return index % spec_.classes;
}

Image SyntheticSource::load(std::size_t index) const {
  if (index >= spec_.n) throw std::out_of_range("synthetic index");
  return render_synthetic(spec_, index).image;
}

}  // namespace naraim
