#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "swindet/ct_io.hpp"

namespace testsupport {

/// MetaImage header text for a volume we are about to write. Test-side
/// counterpart of the parser, kept independent on purpose.
std::string serialize_mhd(const swindet::VolumeMeta& meta);

/// Little-endian MET_SHORT payload.
std::vector<std::uint8_t> serialize_voxels(const std::vector<std::int16_t>& voxels);

/// Writes <uid>.mhd plus its raw payload into dir.
void write_volume(const std::filesystem::path& dir, const std::string& uid,
                  const swindet::VolumeMeta& meta,
                  const std::vector<std::int16_t>& voxels);

struct FixtureNodule {
    std::string uid;
    double wx, wy, wz;  // world mm
    double diameter_mm;
};

/// The synthetic scan set used across the app tests: three small volumes
/// (one with a flipped direction matrix) carrying five nodules whose box
/// areas span the three size bins. Writes .mhd/.raw files plus the
/// annotations CSV and returns the nodule list.
std::vector<FixtureNodule> write_fixture_set(const std::filesystem::path& scans_dir,
                                             const std::filesystem::path& csv_path);

/// A single tiny volume with one centered nodule (for focused tests).
void write_single_volume_fixture(const std::filesystem::path& scans_dir,
                                 const std::filesystem::path& csv_path);

}  // namespace testsupport
