#include "support/fixtures.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace testsupport {

using swindet::Mat3;
using swindet::Vec3;
using swindet::VolumeMeta;

namespace {

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("fixture: cannot write " + path.string());
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// world = origin + direction * (voxel * spacing), written out longhand so
// the fixture does not depend on the code under test.
Vec3 to_world(const VolumeMeta& m, double vx, double vy, double vz) {
    const double sx = vx * m.spacing.x, sy = vy * m.spacing.y, sz = vz * m.spacing.z;
    const auto& d = m.direction.m;
    return Vec3{m.origin.x + d[0] * sx + d[1] * sy + d[2] * sz,
                m.origin.y + d[3] * sx + d[4] * sy + d[5] * sz,
                m.origin.z + d[6] * sx + d[7] * sy + d[8] * sz};
}

// Background -1000 HU with +100 HU spheres at the nodule centers.
std::vector<std::int16_t> render_voxels(const VolumeMeta& m,
                                        const std::vector<FixtureNodule>& nodules) {
    std::vector<std::int16_t> voxels(
        static_cast<std::size_t>(m.nx) * m.ny * m.nz, -1000);
    for (int z = 0; z < m.nz; ++z) {
        for (int y = 0; y < m.ny; ++y) {
            for (int x = 0; x < m.nx; ++x) {
                const Vec3 w = to_world(m, x, y, z);
                for (const FixtureNodule& n : nodules) {
                    const double dx = w.x - n.wx, dy = w.y - n.wy, dz = w.z - n.wz;
                    if (std::sqrt(dx * dx + dy * dy + dz * dz) <= n.diameter_mm / 2.0) {
                        voxels[(static_cast<std::size_t>(z) * m.ny + y) * m.nx + x] = 100;
                    }
                }
            }
        }
    }
    return voxels;
}

std::string csv_row(const FixtureNodule& n) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%.6f\n", n.uid.c_str(), n.wx,
                  n.wy, n.wz, n.diameter_mm);
    return buf;
}

}  // namespace

std::string serialize_mhd(const VolumeMeta& meta) {
    std::string out;
    out += "ObjectType = Image\n";
    out += "NDims = 3\n";
    out += "DimSize = " + std::to_string(meta.nx) + " " + std::to_string(meta.ny) + " " +
           std::to_string(meta.nz) + "\n";
    out += "ElementSpacing = " + num(meta.spacing.x) + " " + num(meta.spacing.y) + " " +
           num(meta.spacing.z) + "\n";
    out += "Offset = " + num(meta.origin.x) + " " + num(meta.origin.y) + " " +
           num(meta.origin.z) + "\n";
    out += "TransformMatrix =";
    for (double v : meta.direction.m) out += " " + num(v);
    out += "\n";
    out += "ElementType = MET_SHORT\n";
    out += "ElementDataFile = " + meta.data_file + "\n";
    return out;
}

std::vector<std::uint8_t> serialize_voxels(const std::vector<std::int16_t>& voxels) {
    std::vector<std::uint8_t> out;
    out.reserve(voxels.size() * 2);
    for (std::int16_t v : voxels) {
        const auto u = static_cast<std::uint16_t>(v);
        out.push_back(static_cast<std::uint8_t>(u & 0xff));
        out.push_back(static_cast<std::uint8_t>(u >> 8));
    }
    return out;
}

void write_volume(const std::filesystem::path& dir, const std::string& uid,
                  const VolumeMeta& meta, const std::vector<std::int16_t>& voxels) {
    VolumeMeta m = meta;
    if (m.data_file.empty()) m.data_file = uid + ".raw";
    write_file(dir / (uid + ".mhd"), serialize_mhd(m));
    const std::vector<std::uint8_t> bytes = serialize_voxels(voxels);
    write_file(dir / m.data_file,
               std::string(bytes.begin(), bytes.end()));
}

std::vector<FixtureNodule> write_fixture_set(const std::filesystem::path& scans_dir,
                                             const std::filesystem::path& csv_path) {
    std::filesystem::create_directories(scans_dir);

    VolumeMeta va;
    va.nx = va.ny = 64;
    va.nz = 10;
    va.spacing = Vec3{0.7, 0.7, 2.5};
    va.origin = Vec3{-100.0, -80.0, 40.0};

    VolumeMeta vb;
    vb.nx = vb.ny = 64;
    vb.nz = 8;
    vb.spacing = Vec3{0.5, 0.5, 2.0};
    vb.origin = Vec3{0.0, 0.0, 0.0};

    VolumeMeta vc;
    vc.nx = vc.ny = 64;
    vc.nz = 6;
    vc.spacing = Vec3{0.8, 0.8, 2.5};
    vc.origin = Vec3{50.0, 60.0, -20.0};
    vc.direction.m = {-1, 0, 0, 0, -1, 0, 0, 0, 1};

    std::vector<FixtureNodule> nodules;
    auto add = [&](const std::string& uid, const VolumeMeta& m, double vx, double vy,
                   double vz, double diameter) {
        const Vec3 w = to_world(m, vx, vy, vz);
        nodules.push_back(FixtureNodule{uid, w.x, w.y, w.z, diameter});
    };
    // Box areas (diameter/spacing)^2: 100, ~204, 64, 1024, ~56 px^2 - the
    // five spread across small/medium/large whatever tertile cut falls out.
    add("vol_a", va, 20, 24, 4, 7.0);
    add("vol_a", va, 44, 40, 7, 10.0);
    add("vol_b", vb, 32, 32, 3, 4.0);
    add("vol_b", vb, 40, 40, 6, 16.0);
    add("vol_c", vc, 16, 16, 2, 6.0);

    auto mine = [&](const std::string& uid) {
        std::vector<FixtureNodule> out;
        for (const FixtureNodule& n : nodules) {
            if (n.uid == uid) out.push_back(n);
        }
        return out;
    };
    write_volume(scans_dir, "vol_a", va, render_voxels(va, mine("vol_a")));
    write_volume(scans_dir, "vol_b", vb, render_voxels(vb, mine("vol_b")));
    write_volume(scans_dir, "vol_c", vc, render_voxels(vc, mine("vol_c")));

    std::string csv = "seriesuid,coordX,coordY,coordZ,diameter_mm\n";
    for (const FixtureNodule& n : nodules) csv += csv_row(n);
    write_file(csv_path, csv);
    return nodules;
}

void write_single_volume_fixture(const std::filesystem::path& scans_dir,
                                 const std::filesystem::path& csv_path) {
    std::filesystem::create_directories(scans_dir);
    VolumeMeta m;
    m.nx = m.ny = 64;
    m.nz = 6;
    m.spacing = Vec3{0.7, 0.7, 2.5};
    m.origin = Vec3{-10.0, -20.0, 30.0};

    FixtureNodule n{"vol_single", 0, 0, 0, 7.0};
    const Vec3 w = to_world(m, 32, 32, 3);
    n.wx = w.x;
    n.wy = w.y;
    n.wz = w.z;

    write_volume(scans_dir, "vol_single", m, render_voxels(m, {n}));
    write_file(csv_path, "seriesuid,coordX,coordY,coordZ,diameter_mm\n" + csv_row(n));
}

}  // namespace testsupport
