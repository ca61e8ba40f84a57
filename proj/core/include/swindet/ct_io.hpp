#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "swindet/error.hpp"

namespace swindet {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

/// 3x3 matrix, row-major.
struct Mat3 {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Mat3 identity() { return Mat3{}; }
    double det() const;
    /// Closed-form adjugate inverse; throws on |det| <= 1e-9.
    Mat3 inverse() const;
    Vec3 apply(const Vec3& v) const;
};

/// Geometry and layout of one MetaImage volume.
struct VolumeMeta {
    int nx = 0, ny = 0, nz = 0;        // voxels per axis
    Vec3 spacing{1.0, 1.0, 1.0};       // mm per voxel, all > 0
    Vec3 origin{0.0, 0.0, 0.0};        // mm
    Mat3 direction;                    // invertible; identity when absent
    std::string data_file;             // relative path from the header
};

/// 3D signed HU voxel grid, z-major (x fastest).
struct CtVolume {
    std::string series_uid;
    VolumeMeta meta;
    std::vector<std::int16_t> voxels;

    std::int16_t at(int x, int y, int z) const {
        return voxels[(static_cast<std::size_t>(z) * meta.ny + y) * meta.nx + x];
    }
};

struct NoduleAnnotation {
    std::string series_uid;
    Vec3 world;           // mm
    double diameter_mm = 0.0;
};

/// Parses a MetaImage text header (key = value lines).
///
/// Required keys: DimSize, ElementSpacing, ElementDataFile. TransformMatrix
/// defaults to identity, Offset to zero. Only NDims = 3, ElementType =
/// MET_SHORT, little-endian, uncompressed volumes are accepted; anything
/// else is rejected with an error naming the offending key.
VolumeMeta parse_mhd(const std::string& header_text);

/// Decodes little-endian signed 16-bit voxels. The payload length must be
/// exactly 2*nx*ny*nz bytes.
CtVolume load_volume(const VolumeMeta& meta, const std::vector<std::uint8_t>& raw_bytes);

/// Parses a LUNA16-style annotations CSV with header
/// seriesuid,coordX,coordY,coordZ,diameter_mm.
std::vector<NoduleAnnotation> parse_annotations_csv(const std::string& text);

/// v = direction^-1 (p - origin) / spacing  (componentwise division).
Vec3 world_to_voxel(const Vec3& p_mm, const VolumeMeta& meta);

/// p = direction (v * spacing) + origin. Exact inverse of world_to_voxel.
Vec3 voxel_to_world(const Vec3& v, const VolumeMeta& meta);

/// Min/max HU over the volume, for plausibility warnings.
std::pair<std::int16_t, std::int16_t> hu_min_max(const CtVolume& vol);

}  // namespace swindet
