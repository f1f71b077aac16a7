#include <benchmark/benchmark.h>

#include <random>

#include "naraim/autodiff.hpp"
#include "naraim/image.hpp"
#include "naraim/masks.hpp"
#include "naraim/model.hpp"
#include "naraim/patches.hpp"
#include "naraim/pipeline.hpp"

using namespace naraim;

namespace {

Tensor random_tensor(Shape dims, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Tensor t(std::move(dims));
  for (double& v : t.data()) v = dist(rng);
  return t;
}

Image random_image(std::size_t h, std::size_t w, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> dist(0.0f, 1.0f);
  Image img(h, w);
  for (float& v : img.subpixels()) v = dist(rng);
  return img;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  const Tensor a = random_tensor({n, n}, rng), b = random_tensor({n, n}, rng);
  for (auto _ : state) {
    Tape tape;
    Var c = ops::matmul(tape.constant(a), tape.constant(b));
    benchmark::DoNotOptimize(c.value().storage().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(64)->Arg(128);

void BM_MatmulBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  const ParamTree params{{"a", random_tensor({n, n}, rng)}, {"b", random_tensor({n, n}, rng)}};
  for (auto _ : state) {
    Tape tape;
    const VarMap v = tape.bind(params);
    ParamTree g = gradient(ops::sum(ops::matmul(v.at("a"), v.at("b"))), v);
    benchmark::DoNotOptimize(g);
  }
}
BENCHMARK(BM_MatmulBackward)->Arg(64);

void BM_BackboneForward(benchmark::State& state) {
  const BackboneConfig cfg = BackboneConfig::desk();
  const PipelineConfig pipeline = PipelineConfig::desk();
  Rng rng(3);
  const ParamTree params = init_params(cfg, rng);
  std::mt19937_64 img_rng(4);
  std::vector<TokenSequence> seqs;
  std::vector<MaskMatrix> masks;
  for (int i = 0; i < state.range(0); ++i) {
    const Image img = native_aspect_ratio_resize(random_image(60 + 10 * i, 90, img_rng), pipeline);
    seqs.push_back(to_sequence(img, pipeline));
    masks.push_back(build_mask({seqs.back().length, 0, seqs.back().pad_mask}, Phase::kPretrain));
  }
  const TokenBatch batch = TokenBatch::from(seqs);
  const Tensor blocked = blocked_attention(masks);
  for (auto _ : state) {
    Tape tape;
    const VarMap v = tape.bind(params, false);
    Var out = backbone_forward(cfg, v, batch, blocked);
    benchmark::DoNotOptimize(out.value().storage().data());
  }
}
BENCHMARK(BM_BackboneForward)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_NativeResize(benchmark::State& state) {
  std::mt19937_64 rng(5);
  const Image img = random_image(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)), rng);
  const PipelineConfig cfg = PipelineConfig::paper();
  for (auto _ : state) {
    Image out = native_aspect_ratio_resize(img, cfg);
    benchmark::DoNotOptimize(out.subpixels().data());
  }
}
BENCHMARK(BM_NativeResize)->Args({300, 400})->Args({480, 640})->Args({1080, 1920})->Unit(benchmark::kMillisecond);

void BM_PlanNativeResize(benchmark::State& state) {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<std::size_t> dim(1, 4000);
  const PipelineConfig cfg = PipelineConfig::paper();
  for (auto _ : state) {
    NativeResizePlan plan = plan_native_resize(dim(rng), dim(rng), cfg);
    benchmark::DoNotOptimize(plan);
  }
}
BENCHMARK(BM_PlanNativeResize);

}  // namespace

BENCHMARK_MAIN();
