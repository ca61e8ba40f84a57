#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "swindet/box.hpp"
#include "swindet/coco.hpp"
#include "swindet/ct_io.hpp"

namespace swindet {

/// One windowed axial slice, 12-bit pixels (values <= 4095).
struct SliceImage {
    std::string series_uid;
    int z_index = 0;
    int width = 0;   // nx
    int height = 0;  // ny
    std::vector<std::uint16_t> pixels;  // row-major
    double px_spacing_x = 1.0;          // mm
    double px_spacing_y = 1.0;
};

/// Ground-truth box in COCO corner+size form, referencing a slice by its
/// index into the slice list handed to export_coco.
struct BoxLabel {
    int slice_index = 0;
    double x = 0.0, y = 0.0, w = 0.0, h = 0.0;
};

/// Clamps hu to [lo,hi] and rescales to [0,4095], rounding half up.
/// Monotone non-decreasing in hu.
std::uint16_t window_and_quantize(int hu, int lo = -1000, int hi = 400);

struct SliceMatch {
    int z_index = 0;
    std::vector<NoduleAnnotation> matched;
};

/// Slice z contains nodule a iff the world-z distance between the slice
/// plane (through the nodule's in-plane position) and a's center is at
/// most margin_factor * diameter. Only slices with >= 1 match are
/// returned, ordered by z, each with all of its matches.
std::vector<SliceMatch> select_nodule_slices(const CtVolume& vol,
                                             const std::vector<NoduleAnnotation>& annotations,
                                             double margin_factor = 0.5);

/// In-plane box of a nodule: center from world_to_voxel, radius
/// diameter/(2*spacing) per axis. Unclipped, floating point.
Box annotation_to_bbox(const NoduleAnnotation& a, const VolumeMeta& meta);

/// Clips to the canvas; throws if the box lies fully outside, naming the
/// context (series uid / slice).
Box clip_bbox_to_canvas(const Box& b, int width, int height, const std::string& context);

/// Windows the z-th axial slice of the volume into a SliceImage.
SliceImage extract_slice(const CtVolume& vol, int z, int hu_lo, int hu_hi);

/// Binary PGM, "P5\n<w> <h>\n4095\n" + big-endian 2-byte samples.
std::string encode_pgm(const SliceImage& s);
SliceImage decode_pgm(const std::string& bytes);
void write_slice_pgm(const SliceImage& s, const std::string& path);
SliceImage read_slice_pgm(const std::string& path);

/// Deterministic file name for a slice: <series_uid>_z<0000>.pgm.
std::string slice_file_name(const std::string& series_uid, int z_index);

/// Builds the COCO dataset: image ids follow (series_uid, z_index) order,
/// annotation ids follow (image, label) order, all floats snapped to
/// their 6-decimal rendering. A label whose slice_index does not exist is
/// a consistency error.
CocoDataset export_coco(const std::vector<SliceImage>& slices,
                        const std::vector<BoxLabel>& labels);

}  // namespace swindet
