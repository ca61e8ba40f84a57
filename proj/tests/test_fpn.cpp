#include <doctest.h>

#include <array>
#include <cmath>
#include <random>
#include <set>
#include <string>

#include "support/oracles.hpp"
#include "swindet/fpn.hpp"

using swindet::Error;
using swindet::FeatureHierarchy;
using swindet::FeaturePyramid;
using swindet::SwinConfig;
using swindet::Tensor;

namespace {

FeatureHierarchy random_hierarchy(const SwinConfig& cfg, std::mt19937& rng,
                                  float scale) {
    FeatureHierarchy h;
    std::uniform_real_distribution<float> dist(-scale, scale);
    const int side0 = cfg.img_size / cfg.patch;
    for (int i = 0; i < 4; ++i) {
        Tensor s({cfg.embed_dim << i, side0 >> i, side0 >> i});
        for (float& v : s.values()) v = dist(rng);
        h.stages[static_cast<std::size_t>(i)] = std::move(s);
    }
    return h;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    REQUIRE(a.shape() == b.shape());
    double worst = 0.0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(a.numel()); ++i) {
        worst = std::max(worst,
                         std::abs(static_cast<double>(a.data()[i]) - b.data()[i]));
    }
    return worst;
}

}  // namespace

TEST_CASE("build_pyramid shapes for a 64px input") {
    SwinConfig cfg;
    cfg.img_size = 64;
    std::mt19937 rng(31);
    const FeatureHierarchy h = random_hierarchy(cfg, rng, 1.0f);
    const auto weights = swindet::seeded_weights(swindet::fpn_weight_spec(cfg), 5);
    const FeaturePyramid pyr = swindet::build_pyramid(h, weights, cfg);
    int side = 16;
    for (int level = 2; level <= 5; ++level) {
        const Tensor& p = pyr.p(level);
        REQUIRE(p.rank() == 3);
        CHECK(p.dim(0) == 256);
        CHECK(p.dim(1) == side);
        CHECK(p.dim(2) == side);
        CHECK(swindet::all_finite(p));
        side /= 2;
    }
    CHECK(pyr.p(6).dim(0) == 256);
    CHECK(pyr.p(6).dim(1) == 1);
    CHECK_THROWS_AS(pyr.p(1), Error);
    CHECK_THROWS_AS(pyr.p(7), Error);
}

TEST_CASE("zero hierarchy gives a zero pyramid") {
    SwinConfig cfg;
    cfg.img_size = 32;
    FeatureHierarchy h;
    const int side0 = cfg.img_size / cfg.patch;
    for (int i = 0; i < 4; ++i) {
        h.stages[static_cast<std::size_t>(i)] =
            Tensor({cfg.embed_dim << i, side0 >> i, side0 >> i});
    }
    // seeded biases are zero, so only the biases could leak through
    const auto weights = swindet::seeded_weights(swindet::fpn_weight_spec(cfg), 11);
    const FeaturePyramid pyr = swindet::build_pyramid(h, weights, cfg);
    for (int level = 2; level <= 6; ++level) {
        for (float v : pyr.p(level).values()) CHECK(v == 0.0f);
    }
}

TEST_CASE("build_pyramid matches the naive composition") {
    SwinConfig cfg;
    cfg.img_size = 32;
    cfg.embed_dim = 8;
    std::mt19937 rng(32);
    const FeatureHierarchy h = random_hierarchy(cfg, rng, 0.5f);
    const auto weights = swindet::seeded_weights(swindet::fpn_weight_spec(cfg), 9);
    const FeaturePyramid got = swindet::build_pyramid(h, weights, cfg);

    auto w = [&](const std::string& name) { return weights.at(name); };
    std::array<Tensor, 4> lateral;
    for (int i = 0; i < 4; ++i) {
        const std::string p = "fpn.lateral" + std::to_string(i) + ".";
        lateral[static_cast<std::size_t>(i)] = testsupport::naive_conv2d(
            h.stages[static_cast<std::size_t>(i)], w(p + "weight"), w(p + "bias"), 1, 0);
    }
    std::array<Tensor, 4> td;
    td[3] = lateral[3];
    for (int i = 2; i >= 0; --i) {
        const Tensor up = testsupport::naive_upsample2x(td[static_cast<std::size_t>(i) + 1]);
        td[static_cast<std::size_t>(i)] = lateral[static_cast<std::size_t>(i)];
        Tensor& dst = td[static_cast<std::size_t>(i)];
        for (std::size_t k = 0; k < dst.values().size(); ++k) {
            dst.values()[k] += up.values()[k];
        }
    }
    for (int i = 0; i < 4; ++i) {
        const std::string p = "fpn.output" + std::to_string(i) + ".";
        const Tensor want = testsupport::naive_conv2d(td[static_cast<std::size_t>(i)],
                                                      w(p + "weight"), w(p + "bias"), 1, 1);
        CHECK(max_abs_diff(got.p(2 + i), want) <= 2e-3);
    }
    CHECK(max_abs_diff(got.p(6), testsupport::naive_maxpool2(got.p(5))) == 0.0);
}

TEST_CASE("build_pyramid validates stages and weights") {
    SwinConfig cfg;
    cfg.img_size = 32;
    std::mt19937 rng(33);
    FeatureHierarchy h = random_hierarchy(cfg, rng, 1.0f);
    auto weights = swindet::seeded_weights(swindet::fpn_weight_spec(cfg), 2);

    SUBCASE("missing weight is named") {
        weights.erase("fpn.output2.weight");
        CHECK_THROWS_WITH_AS(swindet::build_pyramid(h, weights, cfg),
                             doctest::Contains("fpn.output2.weight"), Error);
    }
    SUBCASE("stage channel mismatch is rejected") {
        h.stages[0] = Tensor({97, 8, 8});
        CHECK_THROWS_WITH_AS(swindet::build_pyramid(h, weights, cfg),
                             doctest::Contains("stage 0"), Error);
    }
}

TEST_CASE("fpn_weight_spec names are unique") {
    const auto spec = swindet::fpn_weight_spec();
    CHECK(spec.size() == 16);
    std::set<std::string> names;
    for (const auto& ws : spec) CHECK(names.insert(ws.name).second);
    CHECK(names.count("fpn.lateral0.weight"));
    CHECK(names.count("fpn.output3.bias"));
}
