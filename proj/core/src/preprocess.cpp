#include "swindet/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace swindet {

std::uint16_t window_and_quantize(int hu, int lo, int hi) {
    const int clamped = std::min(std::max(hu, lo), hi);
    const double scaled = static_cast<double>(clamped - lo) / static_cast<double>(hi - lo) * 4095.0;
    return static_cast<std::uint16_t>(std::floor(scaled + 0.5));
}

std::vector<SliceMatch> select_nodule_slices(const CtVolume& vol,
                                             const std::vector<NoduleAnnotation>& annotations,
                                             double margin_factor) {
    std::vector<SliceMatch> out;
    std::vector<std::vector<NoduleAnnotation>> per_slice(static_cast<std::size_t>(vol.meta.nz));
    for (const auto& a : annotations) {
        if (!vol.series_uid.empty() && !a.series_uid.empty() && a.series_uid != vol.series_uid) {
            continue;
        }
        const Vec3 v = world_to_voxel(a.world, vol.meta);
        for (int z = 0; z < vol.meta.nz; ++z) {
            const double plane_z = voxel_to_world(Vec3{v.x, v.y, static_cast<double>(z)}, vol.meta).z;
            if (std::abs(plane_z - a.world.z) <= margin_factor * a.diameter_mm) {
                per_slice[static_cast<std::size_t>(z)].push_back(a);
            }
        }
    }
    for (int z = 0; z < vol.meta.nz; ++z) {
        if (!per_slice[static_cast<std::size_t>(z)].empty()) {
            out.push_back(SliceMatch{z, std::move(per_slice[static_cast<std::size_t>(z)])});
        }
    }
    return out;
}

Box annotation_to_bbox(const NoduleAnnotation& a, const VolumeMeta& meta) {
    const Vec3 v = world_to_voxel(a.world, meta);
    const double rx = a.diameter_mm / (2.0 * meta.spacing.x);
    const double ry = a.diameter_mm / (2.0 * meta.spacing.y);
    return Box{v.x - rx, v.y - ry, v.x + rx, v.y + ry};
}

Box clip_bbox_to_canvas(const Box& b, int width, int height, const std::string& context) {
    const Box c = clip_box(b, static_cast<double>(width), static_cast<double>(height));
    if (c.width() <= 0.0 || c.height() <= 0.0) {
        throw Error("preprocess: box fully outside canvas (" + context + ")");
    }
    return c;
}

SliceImage extract_slice(const CtVolume& vol, int z, int hu_lo, int hu_hi) {
    if (z < 0 || z >= vol.meta.nz) {
        throw Error("preprocess: slice index " + std::to_string(z) + " out of range");
    }
    SliceImage s;
    s.series_uid = vol.series_uid;
    s.z_index = z;
    s.width = vol.meta.nx;
    s.height = vol.meta.ny;
    s.px_spacing_x = vol.meta.spacing.x;
    s.px_spacing_y = vol.meta.spacing.y;
    s.pixels.resize(static_cast<std::size_t>(s.width) * s.height);
    for (int y = 0; y < s.height; ++y) {
        for (int x = 0; x < s.width; ++x) {
            s.pixels[static_cast<std::size_t>(y) * s.width + x] =
                window_and_quantize(vol.at(x, y, z), hu_lo, hu_hi);
        }
    }
    return s;
}

std::string encode_pgm(const SliceImage& s) {
    for (std::uint16_t p : s.pixels) {
        if (p > 4095) throw Error("pgm: pixel value " + std::to_string(p) + " exceeds 4095");
    }
    if (static_cast<std::size_t>(s.width) * s.height != s.pixels.size()) {
        throw Error("pgm: pixel count does not match width*height");
    }
    std::string out = "P5\n" + std::to_string(s.width) + " " + std::to_string(s.height) + "\n4095\n";
    out.reserve(out.size() + s.pixels.size() * 2);
    for (std::uint16_t p : s.pixels) {
        out.push_back(static_cast<char>(p >> 8));
        out.push_back(static_cast<char>(p & 0xff));
    }
    return out;
}

namespace {

// Reads one whitespace-delimited PGM header token, skipping '#' comments.
std::string next_pgm_token(const std::string& bytes, std::size_t& pos) {
    while (pos < bytes.size()) {
        const char c = bytes[pos];
        if (c == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            ++pos;
        } else {
            break;
        }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) throw Error("pgm: truncated header");
    return bytes.substr(start, pos - start);
}

}  // namespace

SliceImage decode_pgm(const std::string& bytes) {
    std::size_t pos = 0;
    if (next_pgm_token(bytes, pos) != "P5") throw Error("pgm: not a binary PGM (magic != P5)");
    SliceImage s;
    try {
        s.width = std::stoi(next_pgm_token(bytes, pos));
        s.height = std::stoi(next_pgm_token(bytes, pos));
        const int maxval = std::stoi(next_pgm_token(bytes, pos));
        if (maxval != 4095) throw Error("pgm: maxval must be 4095, got " + std::to_string(maxval));
    } catch (const Error&) {
        throw;
    } catch (const std::exception&) {
        throw Error("pgm: malformed header");
    }
    if (s.width <= 0 || s.height <= 0) throw Error("pgm: non-positive dimensions");
    if (pos >= bytes.size()) throw Error("pgm: missing payload");
    ++pos;  // single whitespace byte after maxval
    const std::size_t count = static_cast<std::size_t>(s.width) * s.height;
    if (bytes.size() - pos != count * 2) {
        throw Error("pgm: payload size mismatch: expected " + std::to_string(count * 2) +
                    " bytes, got " + std::to_string(bytes.size() - pos));
    }
    s.pixels.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint16_t hi = static_cast<std::uint8_t>(bytes[pos + 2 * i]);
        const std::uint16_t lo = static_cast<std::uint8_t>(bytes[pos + 2 * i + 1]);
        const std::uint16_t v = static_cast<std::uint16_t>((hi << 8) | lo);
        if (v > 4095) throw Error("pgm: sample exceeds 4095");
        s.pixels[i] = v;
    }
    return s;
}

void write_slice_pgm(const SliceImage& s, const std::string& path) {
    const std::string bytes = encode_pgm(s);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("pgm: cannot open '" + path + "' for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw Error("pgm: write failed for '" + path + "'");
}

SliceImage read_slice_pgm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("pgm: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return decode_pgm(ss.str());
}

std::string slice_file_name(const std::string& series_uid, int z_index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d", z_index);
    return series_uid + "_z" + buf + ".pgm";
}

CocoDataset export_coco(const std::vector<SliceImage>& slices,
                        const std::vector<BoxLabel>& labels) {
    std::vector<std::size_t> order(slices.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (slices[a].series_uid != slices[b].series_uid) {
            return slices[a].series_uid < slices[b].series_uid;
        }
        return slices[a].z_index < slices[b].z_index;
    });

    CocoDataset d;
    std::vector<int> id_of_slice(slices.size(), 0);
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        const SliceImage& s = slices[order[rank]];
        CocoImage im;
        im.id = static_cast<int>(rank) + 1;
        im.file_name = slice_file_name(s.series_uid, s.z_index);
        im.width = s.width;
        im.height = s.height;
        d.images.push_back(std::move(im));
        id_of_slice[order[rank]] = static_cast<int>(rank) + 1;
    }

    std::vector<std::size_t> label_order(labels.size());
    std::iota(label_order.begin(), label_order.end(), 0);
    for (std::size_t i : label_order) {
        const BoxLabel& l = labels[i];
        if (l.slice_index < 0 || static_cast<std::size_t>(l.slice_index) >= slices.size()) {
            throw Error("preprocess: label references missing slice index " +
                        std::to_string(l.slice_index));
        }
        if (l.w <= 0.0 || l.h <= 0.0) {
            throw Error("preprocess: label has non-positive size");
        }
    }
    std::stable_sort(label_order.begin(), label_order.end(), [&](std::size_t a, std::size_t b) {
        return id_of_slice[static_cast<std::size_t>(labels[a].slice_index)] <
               id_of_slice[static_cast<std::size_t>(labels[b].slice_index)];
    });
    int next_ann_id = 1;
    for (std::size_t i : label_order) {
        const BoxLabel& l = labels[i];
        CocoAnnotation a;
        a.id = next_ann_id++;
        a.image_id = id_of_slice[static_cast<std::size_t>(l.slice_index)];
        a.category_id = 1;
        a.bbox = {snap6(l.x), snap6(l.y), snap6(l.w), snap6(l.h)};
        a.area = snap6(a.bbox[2] * a.bbox[3]);
        a.iscrowd = 0;
        d.annotations.push_back(a);
    }
    return d;
}

}  // namespace swindet
