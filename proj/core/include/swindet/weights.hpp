#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "swindet/tensor.hpp"

namespace swindet {

/// Named tensors, kept sorted by name so that serialization is canonical.
using WeightMap = std::map<std::string, Tensor>;

/// Name and shape of one parameter a model expects to find in an archive.
struct WeightSpec {
    std::string name;
    std::vector<int> shape;
};

/// NTAR1 container: magic "NTAR1\n", u32 LE entry count, then per entry a
/// u16 LE name length, the UTF-8 name, a u8 rank, rank u32 LE dims and the
/// float32 LE payload. Entries are written in name order.
std::string serialize_weights(const WeightMap& weights);

/// Strict parser: rejects bad magic, duplicate names, truncation and
/// trailing bytes. parse then serialize reproduces the input exactly.
WeightMap parse_weights(const std::string& bytes);

void write_weights(const WeightMap& weights, const std::string& path);
WeightMap read_weights(const std::string& path);

std::uint64_t fnv1a64(std::string_view s);

/// splitmix64 step: advances the state and returns the next value.
std::uint64_t splitmix64_next(std::uint64_t& state);

/// Deterministic per-tensor initialization. The stream is seeded with
/// seed ^ fnv1a64(name), so a tensor's values do not depend on archive
/// order. Names ending in ".gamma" are all ones, names ending in ".beta"
/// or ".bias" all zeros; everything else draws uniform values in
/// [-0.05, 0.05) from the top 24 bits of each splitmix64 output.
Tensor seeded_tensor(const std::string& name, const std::vector<int>& shape,
                     std::uint64_t seed);

WeightMap seeded_weights(const std::vector<WeightSpec>& spec, std::uint64_t seed);

std::uint64_t total_parameters(const WeightMap& weights);

/// Lookup that throws a named error when the tensor is missing; the
/// overload with a shape also enforces it.
const Tensor& fetch_weight(const WeightMap& weights, const std::string& name);
const Tensor& fetch_weight(const WeightMap& weights, const std::string& name,
                           const std::vector<int>& shape);

}  // namespace swindet
