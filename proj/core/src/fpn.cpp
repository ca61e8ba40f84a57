#include "swindet/fpn.hpp"

#include <string>

namespace swindet {

namespace {

constexpr int kFpnChannels = 256;

std::string lateral_prefix(int i) { return "fpn.lateral" + std::to_string(i) + "."; }
std::string output_prefix(int i) { return "fpn.output" + std::to_string(i) + "."; }

}  // namespace

FeaturePyramid build_pyramid(const FeatureHierarchy& h, const WeightMap& weights,
                             const SwinConfig& cfg) {
    std::array<Tensor, 4> lateral;
    for (int i = 0; i < 4; ++i) {
        const Tensor& stage = h.stages[static_cast<std::size_t>(i)];
        const int want_c = cfg.embed_dim << i;
        if (stage.rank() != 3 || stage.dim(0) != want_c) {
            throw Error("fpn: stage " + std::to_string(i) + " must have " +
                        std::to_string(want_c) + " channels");
        }
        const std::string p = lateral_prefix(i);
        lateral[static_cast<std::size_t>(i)] =
            conv2d(stage, fetch_weight(weights, p + "weight", {kFpnChannels, want_c, 1, 1}),
                   fetch_weight(weights, p + "bias", {kFpnChannels}), 1, 0);
    }

    std::array<Tensor, 4> top_down;
    top_down[3] = std::move(lateral[3]);
    for (int i = 2; i >= 0; --i) {
        top_down[static_cast<std::size_t>(i)] =
            add(lateral[static_cast<std::size_t>(i)],
                upsample_nearest2x(top_down[static_cast<std::size_t>(i) + 1]));
    }

    FeaturePyramid out;
    for (int i = 0; i < 4; ++i) {
        const std::string p = output_prefix(i);
        out.levels[static_cast<std::size_t>(i)] = conv2d(
            top_down[static_cast<std::size_t>(i)],
            fetch_weight(weights, p + "weight", {kFpnChannels, kFpnChannels, 3, 3}),
            fetch_weight(weights, p + "bias", {kFpnChannels}), 1, 1);
    }
    out.levels[4] = maxpool2(out.levels[3]);
    return out;
}

std::vector<WeightSpec> fpn_weight_spec(const SwinConfig& cfg) {
    std::vector<WeightSpec> spec;
    for (int i = 0; i < 4; ++i) {
        const int c = cfg.embed_dim << i;
        spec.push_back({lateral_prefix(i) + "weight", {kFpnChannels, c, 1, 1}});
        spec.push_back({lateral_prefix(i) + "bias", {kFpnChannels}});
        spec.push_back({output_prefix(i) + "weight", {kFpnChannels, kFpnChannels, 3, 3}});
        spec.push_back({output_prefix(i) + "bias", {kFpnChannels}});
    }
    return spec;
}

}  // namespace swindet
