#include <doctest.h>

#include <cstring>

#include "support/temp_dir.hpp"
#include "swindet/weights.hpp"

using swindet::Error;
using swindet::Tensor;
using swindet::WeightMap;
using swindet::WeightSpec;

namespace {

WeightMap sample_weights() {
    WeightMap w;
    w.emplace("alpha.weight", Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
    w.emplace("beta.bias", Tensor({4}, {0.5f, -0.5f, 0.25f, 0.0f}));
    return w;
}

}  // namespace

TEST_CASE("archive magic and layout") {
    const std::string bytes = swindet::serialize_weights(sample_weights());
    REQUIRE(bytes.size() > 10);
    CHECK(bytes.substr(0, 6) == "NTAR1\n");
    // count field: 2 entries, little endian
    CHECK(static_cast<unsigned char>(bytes[6]) == 2);
    CHECK(static_cast<unsigned char>(bytes[7]) == 0);
}

TEST_CASE("archive round trip is byte identical") {
    const std::string first = swindet::serialize_weights(sample_weights());
    const WeightMap parsed = swindet::parse_weights(first);
    REQUIRE(parsed.size() == 2);
    CHECK(parsed.at("alpha.weight").dim(1) == 3);
    CHECK(swindet::serialize_weights(parsed) == first);
}

TEST_CASE("file round trip") {
    testsupport::TempDir tmp;
    const std::string path = tmp.file("w.ntar");
    swindet::write_weights(sample_weights(), path);
    const WeightMap back = swindet::read_weights(path);
    CHECK(back.at("beta.bias").data()[0] == 0.5f);
    CHECK_THROWS_AS(swindet::read_weights(tmp.file("missing.ntar")), Error);
}

TEST_CASE("parser rejects malformed archives") {
    const std::string good = swindet::serialize_weights(sample_weights());
    SUBCASE("bad magic") {
        std::string bad = good;
        bad[0] = 'X';
        CHECK_THROWS_WITH_AS(swindet::parse_weights(bad), doctest::Contains("magic"),
                             Error);
    }
    SUBCASE("truncated") {
        CHECK_THROWS_AS(swindet::parse_weights(good.substr(0, good.size() - 3)), Error);
    }
    SUBCASE("trailing bytes") {
        CHECK_THROWS_AS(swindet::parse_weights(good + "x"), Error);
    }
    SUBCASE("empty input") { CHECK_THROWS_AS(swindet::parse_weights(""), Error); }
}

TEST_CASE("seeded weights are deterministic and honor suffix rules") {
    const std::vector<WeightSpec> spec = {
        WeightSpec{"block.norm1.gamma", {4}},
        WeightSpec{"block.norm1.beta", {4}},
        WeightSpec{"block.attn.qkv.weight", {4, 12}},
        WeightSpec{"block.attn.qkv.bias", {12}},
        WeightSpec{"block.attn.rel_bias", {9, 2}},
    };
    const WeightMap a = swindet::seeded_weights(spec, 42);
    const WeightMap b = swindet::seeded_weights(spec, 42);
    const WeightMap c = swindet::seeded_weights(spec, 43);

    for (float v : a.at("block.norm1.gamma").values()) CHECK(v == 1.0f);
    for (float v : a.at("block.norm1.beta").values()) CHECK(v == 0.0f);
    for (float v : a.at("block.attn.qkv.bias").values()) CHECK(v == 0.0f);

    // rel_bias does not end in ".bias", so it gets random values
    bool any_nonzero = false;
    for (float v : a.at("block.attn.rel_bias").values()) any_nonzero |= (v != 0.0f);
    CHECK(any_nonzero);

    // random weights live in [-0.05, 0.05)
    for (float v : a.at("block.attn.qkv.weight").values()) {
        CHECK(v >= -0.05f);
        CHECK(v < 0.05f);
    }

    CHECK(a.at("block.attn.qkv.weight").values() ==
          b.at("block.attn.qkv.weight").values());
    CHECK(a.at("block.attn.qkv.weight").values() !=
          c.at("block.attn.qkv.weight").values());
    // per-name streams differ
    CHECK(a.at("block.attn.qkv.weight").at(0, 0) != a.at("block.attn.rel_bias").at(0, 0));
}

TEST_CASE("splitmix64 reference values") {
    // first outputs for state 0, from the published splitmix64 reference
    std::uint64_t state = 0;
    CHECK(swindet::splitmix64_next(state) == 0xe220a8397b1dcdafULL);
    CHECK(swindet::splitmix64_next(state) == 0x6e789e6aa1b965f4ULL);
}

TEST_CASE("fnv1a64 reference values") {
    CHECK(swindet::fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(swindet::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("fetch_weight validates shapes") {
    const WeightMap w = sample_weights();
    CHECK_NOTHROW(swindet::fetch_weight(w, "alpha.weight", {2, 3}));
    CHECK_THROWS_WITH_AS(swindet::fetch_weight(w, "alpha.weight", {3, 2}),
                         doctest::Contains("alpha.weight"), Error);
    CHECK_THROWS_WITH_AS(swindet::fetch_weight(w, "gamma.weight", {1}),
                         doctest::Contains("gamma.weight"), Error);
}

TEST_CASE("total_parameters sums element counts") {
    CHECK(swindet::total_parameters(sample_weights()) == 10);
}
