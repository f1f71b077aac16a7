#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "naraim/errors.hpp"
#include "naraim/image.hpp"
#include "naraim/patches.hpp"
#include "naraim/pipeline.hpp"

using namespace naraim;

namespace {

Image random_image(std::size_t h, std::size_t w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(0.0f, 1.0f);
  Image img(h, w);
  for (float& v : img.subpixels()) v = dist(rng);
  return img;
}

}  // namespace

TEST(Image, RejectsEmptyDims) {
  EXPECT_THROW(Image(0, 3), InputError);
  EXPECT_THROW(Image(2, 2, std::vector<float>(5)), InputError);
}

TEST(PipelineConfig, Defaults) {
  PipelineConfig cfg;
  EXPECT_EQ(cfg.pixel_budget, 50176u);
  EXPECT_EQ(cfg.patch_size, 14u);
  EXPECT_EQ(cfg.max_tokens(), 256u);
  EXPECT_EQ(cfg.square_side(), 224u);
  EXPECT_EQ(PipelineConfig::desk().max_tokens(), 64u);
  EXPECT_THROW((PipelineConfig{10, 4}.validate()), ConfigError);
}

TEST(ResizeBilinear, HalfPixelUpsample) {
  Image img(1, 2);
  for (std::size_t c = 0; c < 3; ++c) {
    img.at(0, 0, c) = 0.0f;
    img.at(0, 1, c) = 1.0f;
  }
  Image out = resize_bilinear(img, 1, 4);
  EXPECT_FLOAT_EQ(out.at(0, 0, 0), 0.0f);
  EXPECT_FLOAT_EQ(out.at(0, 1, 1), 0.25f);
  EXPECT_FLOAT_EQ(out.at(0, 2, 2), 0.75f);
  EXPECT_FLOAT_EQ(out.at(0, 3, 0), 1.0f);
}

TEST(ResizeBilinear, SameSizeIsIdentityAndHalvingAverages) {
  Image img = random_image(6, 4, 1);
  EXPECT_EQ(resize_bilinear(img, 6, 4), img);
  Image half = resize_bilinear(img, 3, 2);
  const float expect = (img.at(0, 0, 1) + img.at(0, 1, 1) + img.at(1, 0, 1) + img.at(1, 1, 1)) / 4.0f;
  EXPECT_NEAR(half.at(0, 0, 1), expect, 1e-6);
}

TEST(NativeResize, SquareHalving) {
  const auto plan = plan_native_resize(448, 448, PipelineConfig{});
  EXPECT_EQ(plan.out_h, 224u);
  EXPECT_EQ(plan.out_w, 224u);
  EXPECT_EQ(plan.patch_rows(14) * plan.patch_cols(14), 256u);
  EXPECT_FALSE(plan.min_side_clamped);
}

TEST(NativeResize, LandscapeExample) {
  const double s = std::sqrt(50176.0 / 120000.0);
  EXPECT_NEAR(s, 0.64664, 1e-5);
  const auto plan = plan_native_resize(300, 400, PipelineConfig{});
  EXPECT_EQ(plan.scaled_h, static_cast<std::size_t>(std::floor(300 * s)));
  EXPECT_EQ(plan.scaled_w, static_cast<std::size_t>(std::floor(400 * s)));
  EXPECT_EQ(plan.scaled_w, 258u);
  EXPECT_EQ(plan.out_h, 182u);
  EXPECT_EQ(plan.out_w, 252u);
  EXPECT_EQ(plan.patch_rows(14) * plan.patch_cols(14), 234u);

  Image out = native_aspect_ratio_resize(random_image(300, 400, 2), PipelineConfig{});
  EXPECT_EQ(out.height(), 182u);
  EXPECT_EQ(out.width(), 252u);
}

TEST(NativeResize, ExtremeStripClampsAndCropsColumns) {
  const auto plan = plan_native_resize(10, 4000, PipelineConfig{});
  EXPECT_TRUE(plan.min_side_clamped);
  EXPECT_DOUBLE_EQ(plan.scale, 1.4);
  EXPECT_EQ(plan.scaled_h, 14u);
  EXPECT_EQ(plan.out_h, 14u);
  EXPECT_LE(plan.patch_rows(14) * plan.patch_cols(14), 256u);
  EXPECT_EQ(plan.out_w, 256u * 14u);
  Image out = native_aspect_ratio_resize(random_image(10, 4000, 3), PipelineConfig{});
  EXPECT_EQ(out.height(), 14u);
  EXPECT_EQ(out.width(), 256u * 14u);
}

TEST(NativeResize, TinyImageUpscalesToOnePatch) {
  Image out = native_aspect_ratio_resize(random_image(1, 1, 4), PipelineConfig::desk());
  EXPECT_EQ(out.height() % 8, 0u);
  EXPECT_EQ(out.width() % 8, 0u);
  EXPECT_GE(out.height(), 8u);
}

TEST(NativeResize, RandomDimsRespectBudget) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::size_t> dim(1, 4000);
  for (const PipelineConfig cfg : {PipelineConfig::paper(), PipelineConfig::desk()}) {
    const std::size_t p = cfg.patch_size;
    for (int i = 0; i < 2000; ++i) {
      const std::size_t h = dim(rng), w = dim(rng);
      const auto plan = plan_native_resize(h, w, cfg);
      ASSERT_GT(plan.out_h, 0u);
      ASSERT_GT(plan.out_w, 0u);
      ASSERT_EQ(plan.out_h % p, 0u);
      ASSERT_EQ(plan.out_w % p, 0u);
      ASSERT_LE(plan.patch_rows(p) * plan.patch_cols(p), cfg.max_tokens()) << h << "x" << w;
      if (!plan.min_side_clamped) {
        ASSERT_LE(plan.out_h * plan.out_w, cfg.pixel_budget);
        ASSERT_LE(plan.scaled_h * plan.scaled_w, cfg.pixel_budget);
      }
      const double r = static_cast<double>(w) / static_cast<double>(h);
      const double r2 = static_cast<double>(plan.scaled_w) / static_cast<double>(plan.scaled_h);
      const double bound = r * (1.0 / static_cast<double>(plan.scaled_h) + 1.0 / static_cast<double>(plan.scaled_w));
      ASSERT_LE(std::abs(r2 - r), bound * (1.0 + 1e-12)) << h << "x" << w;
    }
  }
}

TEST(AimTrainResize, AlwaysSquare) {
  const PipelineConfig cfg;
  Rng rng(5);
  for (auto [h, w] : {std::pair<std::size_t, std::size_t>{300, 400}, {50, 900}, {224, 224}, {17, 5}}) {
    Image out = aim_train_resize(random_image(h, w, h + w), cfg, rng);
    EXPECT_EQ(out.height(), 224u);
    EXPECT_EQ(out.width(), 224u);
  }
}

TEST(AimTrainResize, FullCropOfSquareIsIdentity) {
  Image img = random_image(224, 224, 6);
  EXPECT_EQ(resized_crop(img, {0, 0, 224, 224}, 224), img);
}

TEST(AimTrainResize, FixedSeedIsBitIdentical) {
  Image img = random_image(120, 200, 7);
  Rng a(42), b(42);
  EXPECT_EQ(aim_train_resize(img, PipelineConfig::desk(), a), aim_train_resize(img, PipelineConfig::desk(), b));
}

TEST(AimTrainResize, CropParametersInRange) {
  Rng rng(8);
  int fallbacks = 0;
  for (int i = 0; i < 2000; ++i) {
    const CropRect r = sample_resized_crop(300, 400, rng);
    ASSERT_LE(r.top + r.height, 300u);
    ASSERT_LE(r.left + r.width, 400u);
    const double frac = static_cast<double>(r.height * r.width) / 120000.0;
    const double ratio = static_cast<double>(r.width) / static_cast<double>(r.height);
    if (r.height == 300 && r.width == 400) {
      ++fallbacks;
      continue;
    }
    EXPECT_GE(frac, 0.079);
    EXPECT_LE(frac, 1.0);
    EXPECT_GE(ratio, 0.74);
    EXPECT_LE(ratio, 1.35);
  }
  EXPECT_LT(fallbacks, 100);
}

TEST(AimEvalResize, SquareInputCentersCrop) {
  Image img = random_image(256, 256, 9);
  EXPECT_EQ(aim_eval_resize(img, PipelineConfig{}), crop(img, {16, 16, 224, 224}));
}

TEST(AimEvalResize, WideInputCropsCenterColumns) {
  Image img = random_image(256, 512, 10);
  EXPECT_EQ(aim_eval_resize(img, PipelineConfig{}), crop(img, {16, 144, 224, 224}));
}

TEST(AimEvalResize, SmallInputUpscalesFirst) {
  Image img = random_image(128, 128, 11);
  EXPECT_EQ(aim_eval_resize(img, PipelineConfig{}), crop(resize_bilinear(img, 256, 256), {16, 16, 224, 224}));
}

TEST(SquareResize, SquashesWholeImage) {
  Image img = random_image(30, 90, 12);
  Image out = square_resize(img, PipelineConfig::desk());
  EXPECT_EQ(out, resize_bilinear(img, 64, 64));
}

TEST(NativeCrop, SmallImageIsIdentity) {
  Image img = random_image(40, 50, 13);
  Rng rng(1);
  EXPECT_EQ(random_native_crop(img, PipelineConfig{}, rng), img);
}

TEST(NativeCrop, KeepsAspectAndBudget) {
  const PipelineConfig cfg;
  const double kmin = std::sqrt(50176.0 / 480000.0);
  Rng rng(14);
  for (int i = 0; i < 1000; ++i) {
    const CropRect r = sample_native_crop(600, 800, cfg, rng);
    ASSERT_LE(r.top + r.height, 600u);
    ASSERT_LE(r.left + r.width, 800u);
    ASSERT_GE(r.height * r.width, cfg.pixel_budget);
    const double kh = static_cast<double>(r.height) / 600.0;
    const double kw = static_cast<double>(r.width) / 800.0;
    ASSERT_GE(kh, kmin - 1e-12);
    ASSERT_LE(kh, 1.0);
    ASSERT_NEAR(kh, kw, 2.0 / 600.0);
  }
}

TEST(NativeCrop, FixedSeedIsDeterministic) {
  Rng a(3), b(3);
  EXPECT_EQ(sample_native_crop(600, 800, PipelineConfig{}, a), sample_native_crop(600, 800, PipelineConfig{}, b));
}

TEST(HorizontalFlip, Examples) {
  Image img(1, 2);
  img.at(0, 0, 0) = 0.25f;
  img.at(0, 1, 0) = 0.75f;
  Image flipped = flip_horizontal(img);
  EXPECT_EQ(flipped.at(0, 0, 0), 0.75f);
  EXPECT_EQ(flipped.at(0, 1, 0), 0.25f);

  Image big = random_image(5, 7, 15);
  Rng rng(0);
  EXPECT_EQ(horizontal_flip(horizontal_flip(big, rng, 1.0), rng, 1.0), big);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(horizontal_flip(big, rng, 0.0), big);
}

TEST(HorizontalFlip, HalfProbability) {
  Image img = random_image(2, 3, 16);
  Rng rng(17);
  int flips = 0;
  for (int i = 0; i < 4000; ++i) flips += horizontal_flip(img, rng) == img ? 0 : 1;
  EXPECT_NEAR(flips / 4000.0, 0.5, 0.03);
}

TEST(Patchify, SinglePatchIsFlattenedImage) {
  const PipelineConfig cfg{64, 4};
  Image img = random_image(4, 4, 18);
  PatchGrid grid = patchify(img, cfg);
  ASSERT_EQ(grid.count(), 1u);
  for (std::size_t i = 0; i < grid.values.size(); ++i) EXPECT_EQ(grid.values[i], img.subpixels()[i]);
}

TEST(Patchify, RasterOrderTopBlockFirst) {
  const PipelineConfig cfg{64, 4};
  Image img = random_image(8, 4, 19);
  PatchGrid grid = patchify(img, cfg);
  ASSERT_EQ(grid.rows, 2u);
  ASSERT_EQ(grid.cols, 1u);
  EXPECT_EQ(grid.patch(0)[0], img.at(0, 0, 0));
  EXPECT_EQ(grid.patch(1)[0], img.at(4, 0, 0));
  EXPECT_EQ(grid.patch(1)[3 * 4 + 2], img.at(5, 0, 2));
}

TEST(Patchify, PatchLayoutRowMajorInterleaved) {
  const PipelineConfig cfg{64, 2};
  Image img = random_image(4, 6, 20);
  PatchGrid grid = patchify(img, cfg);
  ASSERT_EQ(grid.count(), 6u);
  for (std::size_t k = 0; k < 6; ++k) {
    for (std::size_t y = 0; y < 2; ++y) {
      for (std::size_t x = 0; x < 2; ++x) {
        for (std::size_t c = 0; c < 3; ++c) {
          EXPECT_EQ(grid.patch(k)[(y * 2 + x) * 3 + c], img.at(2 * (k / 3) + y, 2 * (k % 3) + x, c));
        }
      }
    }
  }
}

TEST(Patchify, ReconstructRoundTrip) {
  const PipelineConfig cfg = PipelineConfig::desk();
  Image img = random_image(24, 40, 21);
  EXPECT_EQ(reconstruct(patchify(img, cfg)), img);
}

TEST(Patchify, NonMultipleIsContractError) {
  EXPECT_THROW(patchify(random_image(9, 8, 22), PipelineConfig::desk()), ContractError);
}

TEST(PadToSequence, FullGridAllReal) {
  const PipelineConfig cfg{16, 2};
  TokenSequence seq = pad_to_sequence(patchify(random_image(4, 4, 23), cfg), cfg);
  EXPECT_EQ(seq.length, 4u);
  EXPECT_EQ(seq.pad_mask, std::vector<bool>(4, true));
}

TEST(PadToSequence, PartialGridPadsWithZeros) {
  const PipelineConfig cfg{16, 2};
  TokenSequence seq = pad_to_sequence(patchify(random_image(2, 6, 24), cfg), cfg);
  EXPECT_EQ(seq.pad_mask, (std::vector<bool>{true, true, true, false}));
  for (double v : seq.token(3)) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(seq.coords[2], (TokenCoord{0, 2, 1, 3}));
  EXPECT_EQ(seq.coords[3], (TokenCoord{0, 0, 1, 3}));
}

TEST(PadToSequence, TooManyPatchesIsContractError) {
  const PipelineConfig small{16, 2};
  EXPECT_THROW(pad_to_sequence(patchify(random_image(2, 10, 25), small), small), ContractError);
}

TEST(PadToSequence, RealCountMatchesGrid) {
  const PipelineConfig cfg = PipelineConfig::desk();
  std::mt19937_64 rng(26);
  for (int i = 0; i < 1000; ++i) {
    PatchGrid grid;
    grid.patch_size = 8;
    grid.rows = 1 + rng() % 8;
    grid.cols = 1 + rng() % (64 / grid.rows);
    grid.values.assign(grid.count() * grid.patch_dim(), 0.5);
    TokenSequence seq = pad_to_sequence(grid, cfg);
    std::size_t real = 0;
    for (bool b : seq.pad_mask) real += b ? 1 : 0;
    ASSERT_EQ(real, grid.count());
    for (std::size_t k = 0; k < real; ++k) ASSERT_TRUE(seq.pad_mask[k]);
  }
}

TEST(PatchNormalize, ConstantPatchIsZero) {
  std::vector<double> patch(12, 0.3);
  for (double v : patch_normalize_target(patch)) EXPECT_EQ(v, 0.0);
}

TEST(PatchNormalize, TwoValuePatch) {
  std::vector<double> patch(12, 0.0);
  for (std::size_t i = 6; i < 12; ++i) patch[i] = 1.0;
  const double expect = 0.5 / std::sqrt(0.25 + 1e-6);
  auto out = patch_normalize_target(patch);
  for (std::size_t i = 0; i < 12; ++i) EXPECT_NEAR(out[i], i < 6 ? -expect : expect, 1e-15);
  EXPECT_NEAR(expect, 1.0, 1e-5);
}

TEST(PatchNormalize, RandomPatchMoments) {
  std::mt19937_64 rng(27);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> patch(192);
    for (double& v : patch) v = dist(rng);
    auto out = patch_normalize_target(patch);
    double mean = 0.0, sq = 0.0;
    for (double v : out) mean += v;
    mean /= 192.0;
    for (double v : out) sq += (v - mean) * (v - mean);
    EXPECT_LE(std::abs(mean), 1e-9);
    EXPECT_NEAR(std::sqrt(sq / 192.0), 1.0, 1e-3);
  }
}

TEST(Pipeline, PolicyTransforms) {
  const PipelineConfig cfg = PipelineConfig::desk();
  Image img = random_image(90, 30, 28);
  Image native = eval_transform(img, Policy::kNaraim, cfg);
  EXPECT_EQ(native.height(), plan_native_resize(90, 30, cfg).out_h);
  EXPECT_EQ(eval_transform(img, Policy::kSquare, cfg).height(), 64u);
  EXPECT_EQ(eval_transform(img, Policy::kAim, cfg), aim_eval_resize(img, cfg));
  EXPECT_EQ(to_sequence(native, cfg).real_count(), (native.height() / 8) * (native.width() / 8));
  EXPECT_EQ(parse_policy(to_string(Policy::kSquare)), Policy::kSquare);
  EXPECT_THROW(parse_policy("bogus"), ConfigError);
}

TEST(Pipeline, TrainTransformDeterministicPerStream) {
  const PipelineConfig cfg = PipelineConfig::desk();
  Image img = random_image(100, 140, 29);
  AugmentOptions aug;
  aug.random_crop = true;
  for (Policy policy : {Policy::kNaraim, Policy::kAim, Policy::kSquare}) {
    Rng a = derive_rng(1, 5, 2), b = derive_rng(1, 5, 2);
    EXPECT_EQ(train_transform(img, policy, cfg, aug, a), train_transform(img, policy, cfg, aug, b));
  }
  Rng x = derive_rng(1, 5, 2), y = derive_rng(1, 5, 3), z = derive_rng(1, 6, 2);
  EXPECT_NE(x(), y());
  EXPECT_NE(derive_rng(1, 5, 2)(), z());
}
