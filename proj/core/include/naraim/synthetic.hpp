#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>

#include "naraim/dataset.hpp"
#include "naraim/image.hpp"

namespace naraim {

// Circle-versus-ellipse benchmark. Class c draws an ellipse with axis ratio
// 1 + 0.5c (class 0 is a circle) at a random orientation, over a smooth
// background, inside an image whose aspect ratio is log-uniform.
struct SyntheticSpec {
  std::size_t n = 64;
  std::size_t classes = 2;
  double min_ratio = 0.25;  // width / height
  double max_ratio = 4.0;
  std::uint64_t seed = 0;
  std::size_t side = 280;  // images hold about side^2 pixels
  double min_radius = 0.18;  // equal-area radius as a fraction of the short side
  double max_radius = 0.30;

  void validate() const;
};

struct ShapeParams {
  double center_y = 0.0;  // pixels
  double center_x = 0.0;
  double semi_major = 0.0;
  double semi_minor = 0.0;
  double angle = 0.0;  // radians, major axis from the x axis
};

struct SyntheticSample {
  Image image;
  std::size_t label = 0;
  double aspect_ratio = 1.0;  // width / height
  ShapeParams shape;
};

// Luminance of the shape is at least this; the background stays below it.
inline constexpr float kShapeThreshold = 0.525f;

double class_axis_ratio(std::size_t label);
SyntheticSample render_synthetic(const SyntheticSpec& spec, std::size_t index);

// Writes images/NNNNN.ppm and manifest.tsv under `out_dir`.
DatasetManifest generate_synthetic(const SyntheticSpec& spec, const std::filesystem::path& out_dir);

// Renders samples on demand, without touching the disk.
class SyntheticSource : public ImageSource {
 public:
  explicit SyntheticSource(SyntheticSpec spec);

  std::size_t size() const override { return spec_.n; }
  std::size_t classes() const override { return spec_.classes; }
  std::size_t label(std::size_t index) const override;
  Image load(std::size_t index) const override;

  const SyntheticSpec& spec() const { return spec_; }

 private:
  SyntheticSpec spec_;
};

}  // namespace naraim
