#include "swindet/weights.hpp"

#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace swindet {

static_assert(std::numeric_limits<float>::is_iec559, "requires IEEE-754 float32");

namespace {

constexpr char kMagic[] = "NTAR1\n";
constexpr std::size_t kMagicLen = 6;

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct Cursor {
    const std::string& bytes;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (bytes.size() - pos < n) throw Error("weights: truncated archive");
    }
    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(bytes[pos++]);
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint16_t>(static_cast<std::uint8_t>(bytes[pos]) |
                                                     (static_cast<std::uint8_t>(bytes[pos + 1]) << 8));
        pos += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[pos + i])) << (8 * i);
        }
        pos += 4;
        return v;
    }
    std::string str(std::size_t n) {
        need(n);
        std::string s = bytes.substr(pos, n);
        pos += n;
        return s;
    }
};

}  // namespace

std::string serialize_weights(const WeightMap& weights) {
    std::string out(kMagic, kMagicLen);
    if (weights.size() > std::numeric_limits<std::uint32_t>::max()) {
        throw Error("weights: too many entries");
    }
    put_u32(out, static_cast<std::uint32_t>(weights.size()));
    for (const auto& [name, tensor] : weights) {
        if (name.empty() || name.size() > std::numeric_limits<std::uint16_t>::max()) {
            throw Error("weights: invalid name length for '" + name + "'");
        }
        if (tensor.rank() < 1 || tensor.rank() > 255) {
            throw Error("weights: unsupported rank for '" + name + "'");
        }
        put_u16(out, static_cast<std::uint16_t>(name.size()));
        out += name;
        out.push_back(static_cast<char>(tensor.rank()));
        for (int d : tensor.shape()) put_u32(out, static_cast<std::uint32_t>(d));
        const float* p = tensor.data();
        for (std::int64_t i = 0; i < tensor.numel(); ++i) {
            std::uint32_t bits;
            std::memcpy(&bits, &p[i], 4);
            put_u32(out, bits);
        }
    }
    return out;
}

WeightMap parse_weights(const std::string& bytes) {
    Cursor c{bytes};
    if (c.str(kMagicLen) != std::string(kMagic, kMagicLen)) {
        throw Error("weights: bad magic, not an NTAR1 archive");
    }
    const std::uint32_t count = c.u32();
    WeightMap out;
    for (std::uint32_t e = 0; e < count; ++e) {
        const std::uint16_t name_len = c.u16();
        if (name_len == 0) throw Error("weights: empty tensor name");
        const std::string name = c.str(name_len);
        const std::uint8_t rank = c.u8();
        if (rank == 0) throw Error("weights: rank 0 not supported ('" + name + "')");
        std::vector<int> shape(rank);
        std::int64_t numel = 1;
        for (std::uint8_t d = 0; d < rank; ++d) {
            const std::uint32_t dim = c.u32();
            if (dim == 0 || dim > (1u << 30)) {
                throw Error("weights: bad dimension in '" + name + "'");
            }
            shape[d] = static_cast<int>(dim);
            numel *= dim;
            if (numel > (std::int64_t{1} << 32)) {
                throw Error("weights: tensor '" + name + "' too large");
            }
        }
        std::vector<float> values(static_cast<std::size_t>(numel));
        for (std::int64_t i = 0; i < numel; ++i) {
            const std::uint32_t bits = c.u32();
            std::memcpy(&values[static_cast<std::size_t>(i)], &bits, 4);
        }
        if (!out.emplace(name, Tensor(std::move(shape), std::move(values))).second) {
            throw Error("weights: duplicate tensor name '" + name + "'");
        }
    }
    if (c.pos != bytes.size()) throw Error("weights: trailing bytes after last entry");
    return out;
}

void write_weights(const WeightMap& weights, const std::string& path) {
    const std::string bytes = serialize_weights(weights);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("weights: cannot open '" + path + "' for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw Error("weights: write failed for '" + path + "'");
}

WeightMap read_weights(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("weights: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_weights(ss.str());
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

Tensor seeded_tensor(const std::string& name, const std::vector<int>& shape,
                     std::uint64_t seed) {
    const std::string_view sv(name);
    if (sv.ends_with(".gamma")) return Tensor::full(shape, 1.0f);
    if (sv.ends_with(".beta") || sv.ends_with(".bias")) return Tensor(shape);

    Tensor t(shape);
    std::uint64_t state = seed ^ fnv1a64(name);
    float* p = t.data();
    for (std::int64_t i = 0; i < t.numel(); ++i) {
        const std::uint64_t u = splitmix64_next(state);
        const double unit = static_cast<double>(u >> 40) / 16777216.0;
        p[i] = static_cast<float>(unit * 0.1 - 0.05);
    }
    return t;
}

WeightMap seeded_weights(const std::vector<WeightSpec>& spec, std::uint64_t seed) {
    WeightMap out;
    for (const auto& s : spec) {
        if (!out.emplace(s.name, seeded_tensor(s.name, s.shape, seed)).second) {
            throw Error("weights: duplicate name in spec '" + s.name + "'");
        }
    }
    return out;
}

std::uint64_t total_parameters(const WeightMap& weights) {
    std::uint64_t n = 0;
    for (const auto& [name, tensor] : weights) {
        n += static_cast<std::uint64_t>(tensor.numel());
    }
    return n;
}

const Tensor& fetch_weight(const WeightMap& weights, const std::string& name) {
    auto it = weights.find(name);
    if (it == weights.end()) throw Error("weights: missing tensor '" + name + "'");
    return it->second;
}

const Tensor& fetch_weight(const WeightMap& weights, const std::string& name,
                           const std::vector<int>& shape) {
    const Tensor& t = fetch_weight(weights, name);
    if (t.shape() != shape) {
        std::string want, got;
        for (int d : shape) want += (want.empty() ? "" : "x") + std::to_string(d);
        for (int d : t.shape()) got += (got.empty() ? "" : "x") + std::to_string(d);
        throw Error("weights: tensor '" + name + "' has shape " + got + ", expected " + want);
    }
    return t;
}

}  // namespace swindet
