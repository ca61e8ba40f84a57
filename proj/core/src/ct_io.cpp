#include "swindet/ct_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

namespace swindet {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

double parse_double_strict(const std::string& s, const std::string& context) {
    const std::string t = trim(s);
    if (t.empty()) throw Error(context + ": empty number");
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size()) throw Error(context + ": malformed number '" + t + "'");
    return v;
}

std::vector<double> parse_numbers(const std::string& value, const std::string& context) {
    std::vector<double> out;
    std::istringstream iss(value);
    std::string tok;
    while (iss >> tok) out.push_back(parse_double_strict(tok, context));
    return out;
}

bool parse_bool(const std::string& value) {
    std::string v = trim(value);
    std::transform(v.begin(), v.end(), v.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return v == "true" || v == "1";
}

}  // namespace

double Mat3::det() const {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
}

Mat3 Mat3::inverse() const {
    const double d = det();
    if (std::abs(d) <= 1e-9) throw Error("ct_io: direction matrix is singular");
    const double inv = 1.0 / d;
    Mat3 r;
    r.m[0] = (m[4] * m[8] - m[5] * m[7]) * inv;
    r.m[1] = (m[2] * m[7] - m[1] * m[8]) * inv;
    r.m[2] = (m[1] * m[5] - m[2] * m[4]) * inv;
    r.m[3] = (m[5] * m[6] - m[3] * m[8]) * inv;
    r.m[4] = (m[0] * m[8] - m[2] * m[6]) * inv;
    r.m[5] = (m[2] * m[3] - m[0] * m[5]) * inv;
    r.m[6] = (m[3] * m[7] - m[4] * m[6]) * inv;
    r.m[7] = (m[1] * m[6] - m[0] * m[7]) * inv;
    r.m[8] = (m[0] * m[4] - m[1] * m[3]) * inv;
    return r;
}

Vec3 Mat3::apply(const Vec3& v) const {
    return Vec3{m[0] * v.x + m[1] * v.y + m[2] * v.z,
                m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
}

VolumeMeta parse_mhd(const std::string& header_text) {
    VolumeMeta meta;
    bool have_dims = false, have_spacing = false, have_data_file = false;

    std::istringstream lines(header_text);
    std::string line;
    while (std::getline(lines, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw Error("mhd: line without '=': '" + trim(line) + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        if (key == "NDims") {
            if (value != "3") throw Error("mhd: unsupported NDims = " + value);
        } else if (key == "DimSize") {
            const auto nums = parse_numbers(value, "mhd: DimSize");
            if (nums.size() != 3) throw Error("mhd: DimSize must have 3 entries");
            meta.nx = static_cast<int>(nums[0]);
            meta.ny = static_cast<int>(nums[1]);
            meta.nz = static_cast<int>(nums[2]);
            if (meta.nx <= 0 || meta.ny <= 0 || meta.nz <= 0) {
                throw Error("mhd: DimSize entries must be positive");
            }
            have_dims = true;
        } else if (key == "ElementSpacing") {
            const auto nums = parse_numbers(value, "mhd: ElementSpacing");
            if (nums.size() != 3) throw Error("mhd: ElementSpacing must have 3 entries");
            meta.spacing = Vec3{nums[0], nums[1], nums[2]};
            if (nums[0] <= 0 || nums[1] <= 0 || nums[2] <= 0) {
                throw Error("mhd: ElementSpacing entries must be positive");
            }
            have_spacing = true;
        } else if (key == "Offset") {
            const auto nums = parse_numbers(value, "mhd: Offset");
            if (nums.size() != 3) throw Error("mhd: Offset must have 3 entries");
            meta.origin = Vec3{nums[0], nums[1], nums[2]};
        } else if (key == "TransformMatrix") {
            const auto nums = parse_numbers(value, "mhd: TransformMatrix");
            if (nums.size() != 9) throw Error("mhd: TransformMatrix must have 9 entries");
            std::copy(nums.begin(), nums.end(), meta.direction.m.begin());
            if (std::abs(meta.direction.det()) <= 1e-9) {
                throw Error("mhd: TransformMatrix is singular");
            }
        } else if (key == "ElementType") {
            if (value != "MET_SHORT") throw Error("mhd: unsupported ElementType = " + value);
        } else if (key == "ElementByteOrderMSB" || key == "BinaryDataByteOrderMSB") {
            if (parse_bool(value)) throw Error("mhd: big-endian data unsupported (" + key + ")");
        } else if (key == "CompressedData") {
            if (parse_bool(value)) throw Error("mhd: CompressedData = True unsupported");
        } else if (key == "ElementDataFile") {
            if (value.empty()) throw Error("mhd: ElementDataFile is empty");
            meta.data_file = value;
            have_data_file = true;
        }
        // all other keys ignored
    }

    if (!have_dims) throw Error("mhd: missing required key DimSize");
    if (!have_spacing) throw Error("mhd: missing required key ElementSpacing");
    if (!have_data_file) throw Error("mhd: missing required key ElementDataFile");
    return meta;
}

CtVolume load_volume(const VolumeMeta& meta, const std::vector<std::uint8_t>& raw_bytes) {
    const std::size_t count = static_cast<std::size_t>(meta.nx) * meta.ny * meta.nz;
    const std::size_t expected = count * 2;
    if (raw_bytes.size() != expected) {
        throw Error("ct_io: raw payload size mismatch: expected " + std::to_string(expected) +
                    " bytes, got " + std::to_string(raw_bytes.size()));
    }
    CtVolume vol;
    vol.meta = meta;
    vol.voxels.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint16_t lo = raw_bytes[2 * i];
        const std::uint16_t hi = raw_bytes[2 * i + 1];
        vol.voxels[i] = static_cast<std::int16_t>(static_cast<std::uint16_t>(lo | (hi << 8)));
    }
    return vol;
}

std::vector<NoduleAnnotation> parse_annotations_csv(const std::string& text) {
    std::istringstream lines(text);
    std::string line;
    if (!std::getline(lines, line)) throw Error("annotations: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::vector<std::string> cols;
    {
        std::istringstream hs(line);
        std::string tok;
        while (std::getline(hs, tok, ',')) cols.push_back(trim(tok));
    }
    const std::vector<std::string> expected = {"seriesuid", "coordX", "coordY", "coordZ",
                                               "diameter_mm"};
    if (cols != expected) {
        throw Error("annotations: header must be seriesuid,coordX,coordY,coordZ,diameter_mm");
    }

    std::vector<NoduleAnnotation> out;
    int line_no = 1;
    while (std::getline(lines, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        std::vector<std::string> fields;
        std::istringstream fs(line);
        std::string tok;
        while (std::getline(fs, tok, ',')) fields.push_back(tok);
        if (fields.size() != 5) {
            throw Error("annotations: line " + std::to_string(line_no) + ": expected 5 fields, got " +
                        std::to_string(fields.size()));
        }
        const std::string ctx = "annotations: line " + std::to_string(line_no);
        NoduleAnnotation a;
        a.series_uid = trim(fields[0]);
        a.world.x = parse_double_strict(fields[1], ctx);
        a.world.y = parse_double_strict(fields[2], ctx);
        a.world.z = parse_double_strict(fields[3], ctx);
        a.diameter_mm = parse_double_strict(fields[4], ctx);
        if (a.diameter_mm <= 0.0) throw Error(ctx + ": diameter_mm must be positive");
        out.push_back(std::move(a));
    }
    return out;
}

Vec3 world_to_voxel(const Vec3& p_mm, const VolumeMeta& meta) {
    const Mat3 inv = meta.direction.inverse();
    const Vec3 rel{p_mm.x - meta.origin.x, p_mm.y - meta.origin.y, p_mm.z - meta.origin.z};
    const Vec3 rot = inv.apply(rel);
    return Vec3{rot.x / meta.spacing.x, rot.y / meta.spacing.y, rot.z / meta.spacing.z};
}

Vec3 voxel_to_world(const Vec3& v, const VolumeMeta& meta) {
    const Vec3 scaled{v.x * meta.spacing.x, v.y * meta.spacing.y, v.z * meta.spacing.z};
    const Vec3 rot = meta.direction.apply(scaled);
    return Vec3{rot.x + meta.origin.x, rot.y + meta.origin.y, rot.z + meta.origin.z};
}

std::pair<std::int16_t, std::int16_t> hu_min_max(const CtVolume& vol) {
    std::int16_t lo = std::numeric_limits<std::int16_t>::max();
    std::int16_t hi = std::numeric_limits<std::int16_t>::min();
    for (std::int16_t v : vol.voxels) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return {lo, hi};
}

}  // namespace swindet
