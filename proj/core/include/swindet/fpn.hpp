#pragma once

#include <array>

#include "swindet/swin.hpp"

namespace swindet {

/// Levels P2..P6, each [256, S, S] with S halving per level
/// (128, 64, 32, 16, 8 for a 512x512 input).
struct FeaturePyramid {
    std::array<Tensor, 5> levels;

    const Tensor& p(int level) const {
        if (level < 2 || level > 6) throw Error("fpn: level must be in [2,6]");
        return levels[static_cast<std::size_t>(level - 2)];
    }
};

/// Lateral 1x1 projections of the four stages to 256 channels, top-down
/// nearest-neighbor 2x upsampling with addition, a 3x3 smoothing conv per
/// level, and P6 = 2x2 stride-2 max-pool of P5.
FeaturePyramid build_pyramid(const FeatureHierarchy& h, const WeightMap& weights,
                             const SwinConfig& cfg = {});

/// Names and shapes of every parameter build_pyramid reads.
std::vector<WeightSpec> fpn_weight_spec(const SwinConfig& cfg = {});

}  // namespace swindet
