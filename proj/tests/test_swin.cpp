#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <string>

#include "support/oracles.hpp"
#include "swindet/swin.hpp"
#include "swindet/weights.hpp"

using swindet::Error;
using swindet::SwinConfig;
using swindet::Tensor;

namespace {

Tensor random_tensor(std::vector<int> shape, std::mt19937& rng, float scale = 1.0f) {
    Tensor t(std::move(shape));
    std::uniform_real_distribution<float> dist(-scale, scale);
    for (float& v : t.values()) v = dist(rng);
    return t;
}

Tensor identity_matrix(int n) {
    Tensor t({n, n});
    for (int i = 0; i < n; ++i) t.at(i, i) = 1.0f;
    return t;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(a.numel()); ++i) {
        worst = std::max(worst,
                         std::abs(static_cast<double>(a.data()[i]) - b.data()[i]));
    }
    return worst;
}

// wqkv that passes the tokens straight through as Q, K and V.
Tensor passthrough_qkv(int c) {
    Tensor w({c, 3 * c});
    for (int part = 0; part < 3; ++part) {
        for (int i = 0; i < c; ++i) w.at(i, part * c + i) = 1.0f;
    }
    return w;
}

}  // namespace

TEST_CASE("patch_partition token count and layout") {
    std::mt19937 rng(21);
    const Tensor img = random_tensor({3, 8, 8}, rng);
    const Tensor tokens = swindet::patch_partition(img, 4);
    REQUIRE(tokens.dim(0) == 4);
    REQUIRE(tokens.dim(1) == 48);
    // token 0 covers the top-left 4x4 patch, values ordered (c, dy, dx)
    CHECK(tokens.at(0, 0) == img.at(0, 0, 0));
    CHECK(tokens.at(0, 1) == img.at(0, 0, 1));
    CHECK(tokens.at(0, 4) == img.at(0, 1, 0));
    CHECK(tokens.at(0, 16) == img.at(1, 0, 0));
    // token 1 is the patch to the right
    CHECK(tokens.at(1, 0) == img.at(0, 0, 4));

    SUBCASE("constant image gives identical tokens") {
        const Tensor tk = swindet::patch_partition(Tensor::full({3, 8, 8}, 2.5f), 4);
        for (int t = 0; t < tk.dim(0); ++t) {
            for (int i = 0; i < tk.dim(1); ++i) CHECK(tk.at(t, i) == 2.5f);
        }
    }
    SUBCASE("unpartition inverts partition") {
        const Tensor back = swindet::patch_unpartition(tokens, 4, 3, 8, 8);
        CHECK(max_abs_diff(back, img) == 0.0);
    }
    SUBCASE("indivisible side is rejected") {
        CHECK_THROWS_AS(swindet::patch_partition(Tensor({3, 7, 8}), 4), Error);
    }
}

TEST_CASE("linear_embed with zero weights is the bias") {
    std::mt19937 rng(22);
    const Tensor tokens = random_tensor({5, 4}, rng);
    Tensor w({4, 3});
    Tensor b({3});
    b.values() = {1.0f, -2.0f, 0.5f};
    const Tensor out = swindet::linear_embed(tokens, w, b);
    for (int t = 0; t < 5; ++t) {
        CHECK(out.at(t, 0) == 1.0f);
        CHECK(out.at(t, 1) == -2.0f);
        CHECK(out.at(t, 2) == 0.5f);
    }
}

TEST_CASE("window_partition and reverse") {
    std::mt19937 rng(23);
    const Tensor x = random_tensor({6, 6, 2}, rng);
    SUBCASE("single window keeps row-major order") {
        const Tensor one = swindet::window_partition(
            random_tensor({3, 3, 1}, rng), 3);
        REQUIRE(one.dim(0) == 1);
        REQUIRE(one.dim(1) == 9);
    }
    SUBCASE("round trip") {
        const Tensor wins = swindet::window_partition(x, 3);
        REQUIRE(wins.dim(0) == 4);
        REQUIRE(wins.dim(1) == 9);
        REQUIRE(wins.dim(2) == 2);
        const Tensor back = swindet::window_reverse(wins, 3, 6, 6);
        CHECK(max_abs_diff(back, x) == 0.0);
    }
    SUBCASE("window order is row-major over the grid") {
        const Tensor wins = swindet::window_partition(x, 3);
        // window 1 starts at canvas column 3
        CHECK(wins.at(1, 0, 0) == x.at(0, 3, 0));
        // window 2 starts at canvas row 3
        CHECK(wins.at(2, 0, 0) == x.at(3, 0, 0));
    }
}

TEST_CASE("cyclic_shift") {
    Tensor x({3, 3, 1});
    for (int y = 0; y < 3; ++y) {
        for (int xx = 0; xx < 3; ++xx) x.at(y, xx, 0) = static_cast<float>(3 * y + xx);
    }
    const Tensor rolled = swindet::cyclic_shift(x, -1, -1);
    // out(y, x) = in(y + 1, x + 1)
    CHECK(rolled.at(0, 0, 0) == 4.0f);
    CHECK(rolled.at(2, 2, 0) == 0.0f);
    CHECK(rolled.at(2, 0, 0) == 1.0f);
    const Tensor back = swindet::cyclic_shift(rolled, 1, 1);
    CHECK(max_abs_diff(back, x) == 0.0);
}

TEST_CASE("shift_region_ids bands and padding") {
    SUBCASE("no shift labels every real token 0") {
        const auto ids = swindet::shift_region_ids(6, 6, 6, 6, 3, 0);
        for (int id : ids) CHECK(id == 0);
    }
    SUBCASE("shifted 6x6 canvas gets the nine-band labels") {
        const auto ids = swindet::shift_region_ids(6, 6, 6, 6, 3, 1);
        auto band = [](int v) { return v < 3 ? 0 : (v < 5 ? 1 : 2); };
        for (int y = 0; y < 6; ++y) {
            for (int x = 0; x < 6; ++x) {
                CHECK(ids[static_cast<std::size_t>(y) * 6 + x] == 3 * band(y) + band(x));
            }
        }
    }
    SUBCASE("padding positions get -1") {
        // 5x5 canvas padded to 6x6, shift 1: post position (y,x) sources
        // pre cell ((y+1) mod 6, (x+1) mod 6), padding when that is >= 5.
        const auto ids = swindet::shift_region_ids(5, 5, 6, 6, 3, 1);
        for (int y = 0; y < 6; ++y) {
            for (int x = 0; x < 6; ++x) {
                const bool pad = ((y + 1) % 6) >= 5 || ((x + 1) % 6) >= 5;
                const int id = ids[static_cast<std::size_t>(y) * 6 + x];
                if (pad) {
                    CHECK(id == -1);
                } else {
                    CHECK(id >= 0);
                }
            }
        }
    }
}

TEST_CASE("attention_mask_from_ids masks cross-region and padding pairs") {
    const auto ids = swindet::shift_region_ids(6, 6, 6, 6, 3, 1);
    const Tensor mask = swindet::attention_mask_from_ids(ids, 6, 6, 3);
    REQUIRE(mask.dim(0) == 4);
    REQUIRE(mask.dim(1) == 9);
    REQUIRE(mask.dim(2) == 9);
    // window 0 covers rows 0..2, cols 0..2: all region 0 -> fully unmasked
    for (int i = 0; i < 9; ++i) {
        for (int j = 0; j < 9; ++j) CHECK(mask.at(0, i, j) == 0.0f);
    }
    // window 3 covers rows 3..5, cols 3..5: regions {4,5,7,8} mix
    bool any_masked = false, any_open = false;
    for (int i = 0; i < 9; ++i) {
        for (int j = 0; j < 9; ++j) {
            if (mask.at(3, i, j) < -1e8f) {
                any_masked = true;
            } else {
                any_open = true;
            }
            CHECK(mask.at(3, i, i) == 0.0f);  // self always allowed
        }
    }
    CHECK(any_masked);
    CHECK(any_open);
}

TEST_CASE("relative_bias_matrix expands the table") {
    const int window = 2;  // offsets dy, dx in {-1, 0, 1}, table is 9 x heads
    Tensor table({9, 2});
    for (int i = 0; i < 9; ++i) {
        table.at(i, 0) = static_cast<float>(i);
        table.at(i, 1) = static_cast<float>(-i);
    }
    const Tensor bias = swindet::relative_bias_matrix(table, window);
    REQUIRE(bias.dim(0) == 2);
    REQUIRE(bias.dim(1) == 4);
    REQUIRE(bias.dim(2) == 4);
    // token 0 = (0,0), token 3 = (1,1): dy = dx = -1 -> index 0
    CHECK(bias.at(0, 0, 3) == 0.0f);
    // token 3 vs token 0: dy = dx = 1 -> index (1+1)*3 + (1+1) = 8
    CHECK(bias.at(0, 3, 0) == 8.0f);
    // diagonal: dy = dx = 0 -> index (0+1)*3 + 1 = 4, second head negated
    CHECK(bias.at(1, 1, 1) == -4.0f);
}

TEST_CASE("window_attention over identical tokens returns the value projection") {
    const int c = 4, t = 9;
    Tensor windows({2, t, c});
    for (int w = 0; w < 2; ++w) {
        for (int i = 0; i < t; ++i) {
            for (int k = 0; k < c; ++k) {
                windows.at(w, i, k) = 0.25f * static_cast<float>(k + 1);
            }
        }
    }
    const Tensor out = swindet::window_attention(
        windows, 2, passthrough_qkv(c), Tensor({3 * c}), identity_matrix(c),
        Tensor({c}), Tensor(), Tensor());
    // uniform attention over identical values reproduces the tokens
    CHECK(max_abs_diff(out, windows) <= 1e-6);
}

TEST_CASE("window_attention matches the dense oracle") {
    std::mt19937 rng(24);
    const int heads = 2, c = 8, t = 4;
    const Tensor tokens = random_tensor({1, t, c}, rng);
    const Tensor wqkv = random_tensor({c, 3 * c}, rng, 0.5f);
    const Tensor bqkv = random_tensor({3 * c}, rng, 0.2f);
    const Tensor wproj = random_tensor({c, c}, rng, 0.5f);
    const Tensor bproj = random_tensor({c}, rng, 0.2f);

    const Tensor got = swindet::window_attention(tokens, heads, wqkv, bqkv, wproj,
                                                 bproj, Tensor(), Tensor());

    Tensor flat({t, c});
    for (int i = 0; i < t; ++i) {
        for (int k = 0; k < c; ++k) flat.at(i, k) = tokens.at(0, i, k);
    }
    const Tensor want =
        testsupport::dense_attention(flat, heads, wqkv, bqkv, wproj, bproj,
                                     Tensor(), Tensor());
    CHECK(max_abs_diff(got, want) <= 1e-5);
}

TEST_CASE("window_attention rejects channels not divisible by heads") {
    CHECK_THROWS_AS(swindet::window_attention(Tensor({1, 4, 6}), 4, Tensor({6, 18}),
                                              Tensor({18}), Tensor({6, 6}), Tensor({6}),
                                              Tensor(), Tensor()),
                    Error);
}

TEST_CASE("masked attention weights are exactly zero across regions") {
    // One-hot values turn the attention output into the weight matrix.
    const int t = 9, c = t;
    const auto ids = swindet::shift_region_ids(6, 6, 6, 6, 3, 1);
    const Tensor mask = swindet::attention_mask_from_ids(ids, 6, 6, 3);

    std::mt19937 rng(25);
    Tensor windows({4, t, c});
    for (int w = 0; w < 4; ++w) {
        for (int i = 0; i < t; ++i) windows.at(w, i, i) = 1.0f;
    }
    // queries and keys random through the Q/K parts, identity V part
    Tensor wqkv({c, 3 * c});
    std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
    for (int i = 0; i < c; ++i) {
        for (int j = 0; j < 2 * c; ++j) wqkv.at(i, j) = dist(rng);
        wqkv.at(i, 2 * c + i) = 1.0f;
    }
    const Tensor out = swindet::window_attention(windows, 1, wqkv, Tensor({3 * c}),
                                                 identity_matrix(c), Tensor({c}),
                                                 Tensor(), mask);
    for (int w = 0; w < 4; ++w) {
        const int wy = (w / 2) * 3, wx = (w % 2) * 3;
        for (int i = 0; i < t; ++i) {
            const int gi = ids[static_cast<std::size_t>(wy + i / 3) * 6 + (wx + i % 3)];
            double row_sum = 0.0;
            for (int j = 0; j < t; ++j) {
                const int gj =
                    ids[static_cast<std::size_t>(wy + j / 3) * 6 + (wx + j % 3)];
                const float weight = out.at(w, i, j);
                row_sum += weight;
                if (gi != gj || gi < 0) {
                    CHECK(std::abs(weight) <= 1e-7f);
                }
            }
            CHECK(row_sum == doctest::Approx(1.0).epsilon(1e-5));
        }
    }
}

TEST_CASE("patch_merge") {
    SUBCASE("halves the canvas and doubles channels") {
        std::mt19937 rng(26);
        const int c = 3;
        const Tensor x = random_tensor({4, 4, c}, rng);
        Tensor gamma({4 * c}), beta({4 * c});
        for (float& v : gamma.values()) v = 1.0f;
        const Tensor reduce = random_tensor({4 * c, 2 * c}, rng);
        const Tensor out = swindet::patch_merge(x, gamma, beta, reduce);
        REQUIRE(out.dim(0) == 2);
        REQUIRE(out.dim(1) == 2);
        REQUIRE(out.dim(2) == 2 * c);
    }
    SUBCASE("concatenation order is (0,0),(1,0),(0,1),(1,1)") {
        // distinguish neighbors by value, undo the layer norm analytically
        const int c = 1;
        Tensor x({2, 2, c});
        x.at(0, 0, 0) = 1.0f;  // (y=0,x=0)
        x.at(1, 0, 0) = 2.0f;  // (y=1,x=0)
        x.at(0, 1, 0) = 3.0f;  // (y=0,x=1)
        x.at(1, 1, 0) = 4.0f;  // (y=1,x=1)
        Tensor gamma({4}), beta({4});
        for (float& v : gamma.values()) v = 1.0f;
        // pick off one concatenated channel at a time
        for (int pick = 0; pick < 4; ++pick) {
            Tensor reduce({4, 2});
            reduce.at(pick, 0) = 1.0f;
            const Tensor out = swindet::patch_merge(x, gamma, beta, reduce);
            // normalized vector of (1,2,3,4): mean 2.5, var 1.25
            const double want = (1.0 + pick - 2.5) / std::sqrt(1.25 + 1e-5);
            CHECK(out.at(0, 0, 0) == doctest::Approx(want).epsilon(1e-4));
        }
    }
}

TEST_CASE("swin_forward shapes and weight validation") {
    SwinConfig cfg;
    cfg.img_size = 64;
    const auto spec = swindet::swin_weight_spec(cfg);
    swindet::WeightMap weights = swindet::seeded_weights(spec, 3);

    std::mt19937 rng(27);
    const Tensor img = random_tensor({3, 64, 64}, rng);
    const swindet::FeatureHierarchy h = swindet::swin_forward(img, weights, cfg);
    REQUIRE(h.stages.size() == 4);
    CHECK(h.stages[0].dim(0) == 96);
    CHECK(h.stages[0].dim(1) == 16);
    CHECK(h.stages[1].dim(0) == 192);
    CHECK(h.stages[1].dim(1) == 8);
    CHECK(h.stages[2].dim(0) == 384);
    CHECK(h.stages[2].dim(1) == 4);
    CHECK(h.stages[3].dim(0) == 768);
    CHECK(h.stages[3].dim(1) == 2);
    for (const Tensor& s : h.stages) CHECK(swindet::all_finite(s));

    SUBCASE("forward is deterministic") {
        const swindet::FeatureHierarchy again = swindet::swin_forward(img, weights, cfg);
        for (int i = 0; i < 4; ++i) {
            CHECK(max_abs_diff(h.stages[static_cast<std::size_t>(i)],
                               again.stages[static_cast<std::size_t>(i)]) == 0.0);
        }
    }
    SUBCASE("missing weight is named in the error") {
        weights.erase("swin.s2.b3.mlp.fc1.weight");
        CHECK_THROWS_WITH_AS(swindet::swin_forward(img, weights, cfg),
                             doctest::Contains("swin.s2.b3.mlp.fc1.weight"), Error);
    }
    SUBCASE("wrong input side is rejected") {
        CHECK_THROWS_AS(swindet::swin_forward(Tensor({3, 48, 48}), weights, cfg), Error);
    }
    SUBCASE("wrong channel count is rejected") {
        CHECK_THROWS_AS(swindet::swin_forward(Tensor({1, 64, 64}), weights, cfg), Error);
    }
}

TEST_CASE("swin_weight_spec names are unique and complete") {
    const auto spec = swindet::swin_weight_spec();
    std::set<std::string> names;
    for (const auto& ws : spec) CHECK(names.insert(ws.name).second);
    CHECK(names.count("swin.patch_embed.weight"));
    CHECK(names.count("swin.s0.b0.attn.qkv.weight"));
    CHECK(names.count("swin.s2.b5.mlp.fc2.bias"));
    CHECK(names.count("swin.s3.b1.attn.rel_bias"));
    CHECK(names.count("swin.merge0.reduce.weight"));
    // depths 2,2,6,2: no block 2 in stage 0, no merge after stage 3
    CHECK_FALSE(names.count("swin.s0.b2.norm1.gamma"));
    CHECK_FALSE(names.count("swin.merge3.reduce.weight"));
}
