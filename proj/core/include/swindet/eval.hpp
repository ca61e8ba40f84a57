#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "swindet/box.hpp"
#include "swindet/coco.hpp"

namespace swindet {

/// 0.50, 0.55, ..., 0.95.
std::vector<double> default_iou_thresholds();

struct EvalConfig {
    std::vector<double> iou_thresholds = default_iou_thresholds();
    /// Upper area limits of the small and medium bins in px^2. Values <= 0
    /// mean "derive both cuts as nearest-rank tertiles of the ground-truth
    /// areas of the evaluated set".
    double small_max = 0.0;
    double medium_max = 0.0;
    int max_detections = 100;
    double histogram_bin_width = 100.0;
};

/// Greedy per-image matching at one IoU threshold. Detections must already
/// be sorted by descending score. Each detection takes the unmatched ground
/// truth with the highest IoU >= t, preferring non-ignored ground truths
/// (ties toward the lower gt index); a detection whose only match is an
/// ignored gt becomes ignored itself instead of a false positive.
struct MatchResult {
    std::vector<int> det_match;     // gt index or -1
    std::vector<bool> det_tp;       // matched a non-ignored gt
    std::vector<bool> det_ignored;  // matched an ignored gt
    std::vector<bool> gt_matched;
};

MatchResult match_detections(const std::vector<Box>& dets, const std::vector<Box>& gts,
                             const std::vector<bool>& gt_ignore, double iou_thresh);

/// 101-point interpolated average precision over pooled, globally sorted
/// true-positive flags. Returns 0 when there are detections but no hits;
/// the caller is responsible for not calling this with gt_count == 0.
double ap_101(const std::vector<char>& tp_flags, int gt_count);

struct BinResult {
    std::string name;            // small | medium | large | all
    int gt_count = 0;            // non-ignored ground truths in the bin
    std::vector<double> ap;      // per threshold; -1 when the bin has no gts
    std::vector<double> recall;  // per threshold; -1 when the bin has no gts
    double map = -1.0;
    double mar = -1.0;
};

struct EvalResult {
    std::vector<double> thresholds;
    double small_max = 0.0;   // resolved cut points
    double medium_max = 0.0;
    std::vector<BinResult> bins;  // small, medium, large, all
};

/// Nearest-rank tertiles of the given areas (lower cut, upper cut).
std::array<double, 2> area_tertiles(std::vector<double> areas);

/// COCO-style evaluation of results against ground truth. Detections are
/// capped at max_detections per image (by score, ties toward the earlier
/// entry), pooled across images per (threshold, bin) and sorted by
/// (score desc, image id, entry index). A ground truth belongs to a bin by
/// its area field, boundaries going to the lower bin.
EvalResult evaluate(const CocoDataset& gt, const std::vector<CocoResult>& results,
                    const EvalConfig& cfg = {});

/// Non-empty histogram buckets over areas: (bucket start, count), bucket k
/// covering [k*w, (k+1)*w).
std::vector<std::pair<double, int>> area_histogram(const std::vector<double>& areas,
                                                   double bin_width);

/// "bucket_start,count" CSV with a header line.
std::string histogram_csv(const std::vector<std::pair<double, int>>& buckets);

/// AP/AR at IoU 0.50/0.75/0.95 per bin plus the 0.50:0.95 means, as a
/// fixed-width text table. Absent values print as '-'.
std::string format_report(const EvalResult& r);

/// Canonical JSON rendering (sorted keys, %.6f floats, trailing newline).
/// Absent metrics appear as -1.
std::string eval_result_json(const EvalResult& r);

}  // namespace swindet
