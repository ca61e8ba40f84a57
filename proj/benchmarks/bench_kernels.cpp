#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "swindet/detect.hpp"
#include "swindet/fpn.hpp"
#include "swindet/swin.hpp"
#include "swindet/tensor.hpp"
#include "swindet/weights.hpp"

using swindet::Box;
using swindet::Tensor;

namespace {

Tensor random_tensor(std::vector<int> shape, std::uint64_t seed) {
    Tensor t(std::move(shape));
    std::uint64_t state = seed;
    for (float& v : t.values()) {
        v = static_cast<float>(
                static_cast<double>(swindet::splitmix64_next(state) >> 40) / 16777216.0) -
            0.5f;
    }
    return t;
}

void BM_Matmul(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const Tensor a = random_tensor({n, n}, 1);
    const Tensor b = random_tensor({n, n}, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(swindet::matmul(a, b));
    }
    state.SetItemsProcessed(state.iterations() * 2ll * n * n * n);
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(128)->Arg(256);

void BM_Conv3x3(benchmark::State& state) {
    const int c = static_cast<int>(state.range(0));
    const Tensor x = random_tensor({c, 32, 32}, 3);
    const Tensor w = random_tensor({c, c, 3, 3}, 4);
    const Tensor b = random_tensor({c}, 5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(swindet::conv2d(x, w, b, 1, 1));
    }
    state.SetItemsProcessed(state.iterations() * 2ll * c * c * 9 * 32 * 32);
}
BENCHMARK(BM_Conv3x3)->Arg(64)->Arg(128)->Arg(256);

void BM_SoftmaxRows(benchmark::State& state) {
    const Tensor x = random_tensor({2048, 49}, 6);
    for (auto _ : state) {
        benchmark::DoNotOptimize(swindet::softmax_rows(x));
    }
}
BENCHMARK(BM_SoftmaxRows);

void BM_WindowAttention(benchmark::State& state) {
    const int c = 96, t = 49, heads = 3;
    const Tensor windows = random_tensor({64, t, c}, 7);
    const Tensor wqkv = random_tensor({c, 3 * c}, 8);
    const Tensor bqkv = random_tensor({3 * c}, 9);
    const Tensor wproj = random_tensor({c, c}, 10);
    const Tensor bproj = random_tensor({c}, 11);
    const Tensor rel_bias = random_tensor({heads, t, t}, 12);
    for (auto _ : state) {
        benchmark::DoNotOptimize(swindet::window_attention(windows, heads, wqkv, bqkv,
                                                           wproj, bproj, rel_bias,
                                                           Tensor()));
    }
}
BENCHMARK(BM_WindowAttention);

void BM_RoiAlign(benchmark::State& state) {
    const Tensor feature = random_tensor({256, 32, 32}, 13);
    const Box roi{17.3, 9.8, 101.6, 88.4};
    for (auto _ : state) {
        benchmark::DoNotOptimize(swindet::roi_align(feature, roi, 4.0, 7, 2));
    }
}
BENCHMARK(BM_RoiAlign);

void BM_Nms(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    std::vector<Box> boxes;
    std::vector<double> scores;
    std::uint64_t rng = 14;
    for (int i = 0; i < n; ++i) {
        const double x = static_cast<double>(swindet::splitmix64_next(rng) % 480);
        const double y = static_cast<double>(swindet::splitmix64_next(rng) % 480);
        const double w = 8.0 + static_cast<double>(swindet::splitmix64_next(rng) % 64);
        boxes.push_back(Box{x, y, x + w, y + w});
        scores.push_back(static_cast<double>(swindet::splitmix64_next(rng) % 1000) / 1000.0);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(swindet::nms(boxes, scores, 0.7));
    }
}
BENCHMARK(BM_Nms)->Arg(200)->Arg(1000);

void BM_SwinForward64(benchmark::State& state) {
    swindet::SwinConfig cfg;
    cfg.img_size = 64;
    const auto weights = swindet::seeded_weights(swindet::swin_weight_spec(cfg), 15);
    const Tensor image = random_tensor({3, 64, 64}, 16);
    for (auto _ : state) {
        benchmark::DoNotOptimize(swindet::swin_forward(image, weights, cfg));
    }
}
BENCHMARK(BM_SwinForward64);

void BM_DetectSmall(benchmark::State& state) {
    swindet::SwinConfig scfg;
    scfg.img_size = 64;
    scfg.embed_dim = 48;
    swindet::DetectorConfig dcfg;
    dcfg.pre_nms_topk = 128;
    dcfg.post_nms_topk = 8;
    dcfg.roi_output = 2;
    dcfg.head_hidden = 16;
    const auto weights =
        swindet::seeded_weights(swindet::model_weight_spec(scfg, dcfg), 17);
    const Tensor image = random_tensor({3, 64, 64}, 18);
    for (auto _ : state) {
        benchmark::DoNotOptimize(swindet::detect(image, weights, scfg, dcfg));
    }
}
BENCHMARK(BM_DetectSmall);

}  // namespace

BENCHMARK_MAIN();
