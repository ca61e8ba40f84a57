#pragma once

#include <array>
#include <vector>

#include "swindet/box.hpp"
#include "swindet/fpn.hpp"

namespace swindet {

struct BoxDetection {
    Box box;
    double score = 0.0;
    int label = 1;
};

struct DetectorConfig {
    std::array<double, 5> anchor_sizes{32.0, 64.0, 128.0, 256.0, 512.0};  // P2..P6
    std::array<double, 3> ratios{0.5, 1.0, 2.0};
    int pre_nms_topk = 1000;
    double rpn_nms_iou = 0.7;
    int post_nms_topk = 1000;
    int roi_output = 7;
    int roi_samples = 2;
    double score_thresh = 0.05;
    double final_nms_iou = 0.5;
    int level_k0 = 4;
    double level_canonical = 224.0;
    int head_hidden = 1024;
};

/// One box per (cell, ratio), ordered row-major over cells with the ratio
/// index fastest. Anchor (i,j,r) is centered at ((j+0.5)*stride,
/// (i+0.5)*stride) with w = size/sqrt(r), h = size*sqrt(r).
std::vector<Box> generate_anchors(double size, const std::array<double, 3>& ratios,
                                  int rows, int cols, int stride);

/// Faster-R-CNN delta parameterization: tx = (xb-xa)/wa, ty = (yb-ya)/ha,
/// tw = ln(wb/wa), th = ln(hb/ha), with (x,y) box centers.
std::array<double, 4> encode_deltas(const Box& anchor, const Box& target);

/// Inverse of encode_deltas. tw and th are clamped to ln(1000) before the
/// exponential and the result is clipped to the canvas.
Box decode_deltas(const Box& anchor, const std::array<double, 4>& deltas, double img_w,
                  double img_h);

/// Greedy non-maximum suppression. Boxes are visited in score order (ties
/// broken toward the lower index); a box is kept when its IoU with every
/// previously kept box is <= iou_thresh. Returns kept indices in visit
/// order, i.e. sorted by descending score.
std::vector<int> nms(const std::vector<Box>& boxes, const std::vector<double>& scores,
                     double iou_thresh);

struct RpnOutput {
    std::array<Tensor, 5> objectness;  // [A,S,S] logits per level
    std::array<Tensor, 5> deltas;      // [4A,S,S] per level
};

/// Shared 3x3 conv + ReLU, then 1x1 objectness and regression heads, the
/// same weights applied to every pyramid level.
RpnOutput rpn_forward(const FeaturePyramid& pyramid, const WeightMap& weights,
                      const DetectorConfig& cfg = {});

/// Per-level inputs to proposal selection, flattened to anchor order.
struct LevelProposals {
    std::vector<Box> anchors;
    std::vector<double> scores;  // sigmoid objectness
    std::vector<std::array<double, 4>> deltas;
};

/// Flattens one level of RPN output ([A,S,S] logits, [4A,S,S] deltas) next
/// to its anchors; scores are sigmoided logits.
LevelProposals level_proposals_from_rpn(const Tensor& objectness, const Tensor& deltas,
                                        std::vector<Box> anchors);

/// Per level: top pre_nms_topk by score (ties toward the lower anchor
/// index), decode against the anchors, clip, drop boxes under 1 px a side;
/// then one NMS at rpn_nms_iou over the union and keep post_nms_topk.
std::vector<Box> select_proposals(const std::vector<LevelProposals>& levels, double img_w,
                                  double img_h, const DetectorConfig& cfg);

/// k = clamp(floor(k0 + log2(sqrt(w*h)/canonical)), 2, 5).
int assign_level(const Box& roi, const DetectorConfig& cfg = {});

/// RoIAlign over one feature map. The roi is given in image pixels and is
/// divided by stride without rounding; each of the out_size^2 bins averages
/// samples^2 bilinear reads at offsets (s+0.5)/samples inside the bin.
/// Reads whose bilinear corners fall outside the map contribute zero.
Tensor roi_align(const Tensor& feature, const Box& roi, double stride, int out_size,
                 int samples);

struct HeadOutput {
    Tensor cls_scores;  // [N,2] softmax over {background, nodule}
    Tensor deltas;      // [N,4] class-agnostic
};

/// Two ReLU hidden layers over the flattened [N, 256*roi*roi] features,
/// then a softmax classification head and a regression head.
HeadOutput box_head_forward(const Tensor& roi_features, const WeightMap& weights,
                            const DetectorConfig& cfg = {});

/// Keeps nodule scores >= score_thresh, decodes the deltas against the
/// proposals, clips, drops degenerate boxes, applies NMS at final_nms_iou
/// and returns detections sorted by descending score (ties toward the
/// lower proposal index).
std::vector<BoxDetection> postprocess(const std::vector<Box>& proposals,
                                      const Tensor& cls_scores, const Tensor& deltas,
                                      double img_w, double img_h,
                                      const DetectorConfig& cfg);

/// Full pipeline: backbone, pyramid, RPN, proposal selection, per-roi
/// align at its assigned level, box head, postprocess.
std::vector<BoxDetection> detect(const Tensor& image, const WeightMap& weights,
                                 const SwinConfig& scfg = {},
                                 const DetectorConfig& dcfg = {});

/// swin + fpn + rpn + box-head parameters in one list.
std::vector<WeightSpec> model_weight_spec(const SwinConfig& scfg = {},
                                          const DetectorConfig& dcfg = {});

}  // namespace swindet
