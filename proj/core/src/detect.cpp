#include "swindet/detect.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <string>

namespace swindet {

namespace {

constexpr double kMaxLogScale = 6.907755278982137;  // ln(1000)

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

float bilinear_read(const float* plane, int h, int w, double y, double x) {
    const int y0 = static_cast<int>(std::floor(y));
    const int x0 = static_cast<int>(std::floor(x));
    const double fy = y - y0;
    const double fx = x - x0;
    auto read = [&](int yy, int xx) -> double {
        if (yy < 0 || yy >= h || xx < 0 || xx >= w) return 0.0;
        return plane[static_cast<std::size_t>(yy) * w + xx];
    };
    const double v = (1.0 - fy) * ((1.0 - fx) * read(y0, x0) + fx * read(y0, x0 + 1)) +
                     fy * ((1.0 - fx) * read(y0 + 1, x0) + fx * read(y0 + 1, x0 + 1));
    return static_cast<float>(v);
}

}  // namespace

std::vector<Box> generate_anchors(double size, const std::array<double, 3>& ratios,
                                  int rows, int cols, int stride) {
    if (size <= 0.0 || rows <= 0 || cols <= 0 || stride <= 0) {
        throw Error("detect: invalid anchor grid parameters");
    }
    std::vector<Box> out;
    out.reserve(static_cast<std::size_t>(rows) * cols * ratios.size());
    for (int i = 0; i < rows; ++i) {
        const double cy = (i + 0.5) * stride;
        for (int j = 0; j < cols; ++j) {
            const double cx = (j + 0.5) * stride;
            for (double r : ratios) {
                const double w = size / std::sqrt(r);
                const double h = size * std::sqrt(r);
                out.push_back(Box{cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0});
            }
        }
    }
    return out;
}

std::array<double, 4> encode_deltas(const Box& anchor, const Box& target) {
    const double wa = anchor.width(), ha = anchor.height();
    if (wa <= 0.0 || ha <= 0.0) throw Error("detect: degenerate anchor in encode_deltas");
    const double wb = target.width(), hb = target.height();
    if (wb <= 0.0 || hb <= 0.0) throw Error("detect: degenerate target in encode_deltas");
    return {(target.cx() - anchor.cx()) / wa, (target.cy() - anchor.cy()) / ha,
            std::log(wb / wa), std::log(hb / ha)};
}

Box decode_deltas(const Box& anchor, const std::array<double, 4>& deltas, double img_w,
                  double img_h) {
    const double wa = anchor.width(), ha = anchor.height();
    const double cx = anchor.cx() + deltas[0] * wa;
    const double cy = anchor.cy() + deltas[1] * ha;
    const double w = wa * std::exp(std::min(deltas[2], kMaxLogScale));
    const double h = ha * std::exp(std::min(deltas[3], kMaxLogScale));
    return clip_box(Box{cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0}, img_w,
                    img_h);
}

std::vector<int> nms(const std::vector<Box>& boxes, const std::vector<double>& scores,
                     double iou_thresh) {
    if (boxes.size() != scores.size()) throw Error("detect: nms box/score count mismatch");
    std::vector<int> order(boxes.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (scores[static_cast<std::size_t>(a)] != scores[static_cast<std::size_t>(b)]) {
            return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
        }
        return a < b;
    });
    std::vector<int> kept;
    for (int idx : order) {
        bool suppressed = false;
        for (int k : kept) {
            if (iou(boxes[static_cast<std::size_t>(idx)], boxes[static_cast<std::size_t>(k)]) >
                iou_thresh) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(idx);
    }
    return kept;
}

RpnOutput rpn_forward(const FeaturePyramid& pyramid, const WeightMap& weights,
                      const DetectorConfig& cfg) {
    const int a = static_cast<int>(cfg.ratios.size());
    const Tensor& conv_w = fetch_weight(weights, "rpn.conv.weight", {256, 256, 3, 3});
    const Tensor& conv_b = fetch_weight(weights, "rpn.conv.bias", {256});
    const Tensor& cls_w = fetch_weight(weights, "rpn.cls.weight", {a, 256, 1, 1});
    const Tensor& cls_b = fetch_weight(weights, "rpn.cls.bias", {a});
    const Tensor& reg_w = fetch_weight(weights, "rpn.reg.weight", {4 * a, 256, 1, 1});
    const Tensor& reg_b = fetch_weight(weights, "rpn.reg.bias", {4 * a});

    RpnOutput out;
    for (std::size_t l = 0; l < pyramid.levels.size(); ++l) {
        const Tensor& level = pyramid.levels[l];
        if (level.rank() != 3 || level.dim(0) != 256) {
            throw Error("detect: pyramid level must be [256,S,S]");
        }
        Tensor t = relu(conv2d(level, conv_w, conv_b, 1, 1));
        out.objectness[l] = conv2d(t, cls_w, cls_b, 1, 0);
        out.deltas[l] = conv2d(t, reg_w, reg_b, 1, 0);
    }
    return out;
}

LevelProposals level_proposals_from_rpn(const Tensor& objectness, const Tensor& deltas,
                                        std::vector<Box> anchors) {
    if (objectness.rank() != 3 || deltas.rank() != 3) {
        throw Error("detect: rpn level tensors must be rank 3");
    }
    const int a = objectness.dim(0);
    const int rows = objectness.dim(1), cols = objectness.dim(2);
    if (deltas.dim(0) != 4 * a || deltas.dim(1) != rows || deltas.dim(2) != cols) {
        throw Error("detect: rpn delta tensor does not match objectness geometry");
    }
    const std::size_t count = static_cast<std::size_t>(rows) * cols * a;
    if (anchors.size() != count) {
        throw Error("detect: anchor count does not match rpn output");
    }
    LevelProposals out;
    out.anchors = std::move(anchors);
    out.scores.resize(count);
    out.deltas.resize(count);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            for (int r = 0; r < a; ++r) {
                const std::size_t idx =
                    (static_cast<std::size_t>(i) * cols + j) * a + r;
                out.scores[idx] = sigmoid(objectness.at(r, i, j));
                out.deltas[idx] = {deltas.at(4 * r, i, j), deltas.at(4 * r + 1, i, j),
                                   deltas.at(4 * r + 2, i, j), deltas.at(4 * r + 3, i, j)};
            }
        }
    }
    return out;
}

std::vector<Box> select_proposals(const std::vector<LevelProposals>& levels, double img_w,
                                  double img_h, const DetectorConfig& cfg) {
    struct Candidate {
        double score;
        int level;
        int index;
        Box box;
    };
    std::vector<Candidate> pool;
    for (std::size_t l = 0; l < levels.size(); ++l) {
        const LevelProposals& lp = levels[l];
        if (lp.scores.size() != lp.anchors.size() || lp.deltas.size() != lp.anchors.size()) {
            throw Error("detect: level proposal arrays must have equal length");
        }
        std::vector<int> order(lp.scores.size());
        std::iota(order.begin(), order.end(), 0);
        const std::size_t take =
            std::min<std::size_t>(order.size(), static_cast<std::size_t>(cfg.pre_nms_topk));
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take),
                          order.end(), [&](int x, int y) {
                              const double sx = lp.scores[static_cast<std::size_t>(x)];
                              const double sy = lp.scores[static_cast<std::size_t>(y)];
                              if (sx != sy) return sx > sy;
                              return x < y;
                          });
        for (std::size_t k = 0; k < take; ++k) {
            const int idx = order[k];
            const Box decoded =
                decode_deltas(lp.anchors[static_cast<std::size_t>(idx)],
                              lp.deltas[static_cast<std::size_t>(idx)], img_w, img_h);
            if (decoded.width() < 1.0 || decoded.height() < 1.0) continue;
            pool.push_back(Candidate{lp.scores[static_cast<std::size_t>(idx)],
                                     static_cast<int>(l), idx, decoded});
        }
    }
    std::sort(pool.begin(), pool.end(), [](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.level != b.level) return a.level < b.level;
        return a.index < b.index;
    });
    std::vector<Box> boxes;
    std::vector<double> scores;
    boxes.reserve(pool.size());
    scores.reserve(pool.size());
    for (const Candidate& c : pool) {
        boxes.push_back(c.box);
        scores.push_back(c.score);
    }
    const std::vector<int> kept = nms(boxes, scores, cfg.rpn_nms_iou);
    std::vector<Box> out;
    const std::size_t keep =
        std::min<std::size_t>(kept.size(), static_cast<std::size_t>(cfg.post_nms_topk));
    out.reserve(keep);
    for (std::size_t k = 0; k < keep; ++k) {
        out.push_back(boxes[static_cast<std::size_t>(kept[k])]);
    }
    return out;
}

int assign_level(const Box& roi, const DetectorConfig& cfg) {
    const double w = roi.width(), h = roi.height();
    if (w <= 0.0 || h <= 0.0) throw Error("detect: assign_level needs positive roi area");
    const double k = cfg.level_k0 + std::log2(std::sqrt(w * h) / cfg.level_canonical);
    const int level = static_cast<int>(std::floor(k));
    return std::min(5, std::max(2, level));
}

Tensor roi_align(const Tensor& feature, const Box& roi, double stride, int out_size,
                 int samples) {
    if (feature.rank() != 3) throw Error("detect: roi_align expects [C,H,W] features");
    if (out_size <= 0 || samples <= 0 || stride <= 0.0) {
        throw Error("detect: roi_align parameters must be positive");
    }
    const int c = feature.dim(0), fh = feature.dim(1), fw = feature.dim(2);
    const double x1 = roi.x1 / stride, y1 = roi.y1 / stride;
    const double bin_w = (roi.x2 - roi.x1) / stride / out_size;
    const double bin_h = (roi.y2 - roi.y1) / stride / out_size;
    const float inv_count = 1.0f / static_cast<float>(samples * samples);

    Tensor out({c, out_size, out_size});
    for (int ci = 0; ci < c; ++ci) {
        const float* plane = feature.data() + static_cast<std::size_t>(ci) * fh * fw;
        for (int by = 0; by < out_size; ++by) {
            for (int bx = 0; bx < out_size; ++bx) {
                float acc = 0.0f;
                for (int sy = 0; sy < samples; ++sy) {
                    const double y = y1 + (by + (sy + 0.5) / samples) * bin_h;
                    for (int sx = 0; sx < samples; ++sx) {
                        const double x = x1 + (bx + (sx + 0.5) / samples) * bin_w;
                        acc += bilinear_read(plane, fh, fw, y, x);
                    }
                }
                out.at(ci, by, bx) = acc * inv_count;
            }
        }
    }
    return out;
}

HeadOutput box_head_forward(const Tensor& roi_features, const WeightMap& weights,
                            const DetectorConfig& cfg) {
    const int in_dim = 256 * cfg.roi_output * cfg.roi_output;
    if (roi_features.rank() != 2 || roi_features.dim(1) != in_dim) {
        throw Error("detect: box head expects [N," + std::to_string(in_dim) + "] features");
    }
    const int hidden = cfg.head_hidden;
    Tensor x = relu(linear(roi_features,
                           fetch_weight(weights, "head.fc1.weight", {in_dim, hidden}),
                           fetch_weight(weights, "head.fc1.bias", {hidden})));
    x = relu(linear(x, fetch_weight(weights, "head.fc2.weight", {hidden, hidden}),
                    fetch_weight(weights, "head.fc2.bias", {hidden})));
    HeadOutput out;
    out.cls_scores = softmax_rows(linear(x, fetch_weight(weights, "head.cls.weight", {hidden, 2}),
                                         fetch_weight(weights, "head.cls.bias", {2})));
    out.deltas = linear(x, fetch_weight(weights, "head.reg.weight", {hidden, 4}),
                        fetch_weight(weights, "head.reg.bias", {4}));
    return out;
}

std::vector<BoxDetection> postprocess(const std::vector<Box>& proposals,
                                      const Tensor& cls_scores, const Tensor& deltas,
                                      double img_w, double img_h,
                                      const DetectorConfig& cfg) {
    const int n = static_cast<int>(proposals.size());
    if (n == 0) return {};
    if (cls_scores.rank() != 2 || cls_scores.dim(0) != n || cls_scores.dim(1) != 2 ||
        deltas.rank() != 2 || deltas.dim(0) != n || deltas.dim(1) != 4) {
        throw Error("detect: postprocess tensor shapes do not match proposals");
    }
    struct Candidate {
        double score;
        int index;
        Box box;
    };
    std::vector<Candidate> cands;
    for (int i = 0; i < n; ++i) {
        const double score = cls_scores.at(i, 1);
        if (score < cfg.score_thresh) continue;
        const Box box = decode_deltas(
            proposals[static_cast<std::size_t>(i)],
            {static_cast<double>(deltas.at(i, 0)), static_cast<double>(deltas.at(i, 1)),
             static_cast<double>(deltas.at(i, 2)), static_cast<double>(deltas.at(i, 3))},
            img_w, img_h);
        if (box.width() <= 0.0 || box.height() <= 0.0) continue;
        cands.push_back(Candidate{score, i, box});
    }
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.index < b.index;
    });
    std::vector<Box> boxes;
    std::vector<double> scores;
    for (const Candidate& c : cands) {
        boxes.push_back(c.box);
        scores.push_back(c.score);
    }
    const std::vector<int> kept = nms(boxes, scores, cfg.final_nms_iou);
    std::vector<BoxDetection> out;
    out.reserve(kept.size());
    for (int k : kept) {
        out.push_back(BoxDetection{boxes[static_cast<std::size_t>(k)],
                                   scores[static_cast<std::size_t>(k)], 1});
    }
    return out;
}

std::vector<BoxDetection> detect(const Tensor& image, const WeightMap& weights,
                                 const SwinConfig& scfg, const DetectorConfig& dcfg) {
    const FeatureHierarchy hierarchy = swin_forward(image, weights, scfg);
    const FeaturePyramid pyramid = build_pyramid(hierarchy, weights, scfg);
    const RpnOutput rpn = rpn_forward(pyramid, weights, dcfg);

    const double img_h = image.dim(1), img_w = image.dim(2);
    std::vector<LevelProposals> levels;
    for (int l = 0; l < 5; ++l) {
        const int stride = 1 << (l + 2);
        const Tensor& level = pyramid.levels[static_cast<std::size_t>(l)];
        levels.push_back(level_proposals_from_rpn(
            rpn.objectness[static_cast<std::size_t>(l)],
            rpn.deltas[static_cast<std::size_t>(l)],
            generate_anchors(dcfg.anchor_sizes[static_cast<std::size_t>(l)], dcfg.ratios,
                             level.dim(1), level.dim(2), stride)));
    }
    const std::vector<Box> proposals = select_proposals(levels, img_w, img_h, dcfg);
    if (proposals.empty()) return {};

    const int feat_len = 256 * dcfg.roi_output * dcfg.roi_output;
    Tensor roi_feats({static_cast<int>(proposals.size()), feat_len});
    for (std::size_t i = 0; i < proposals.size(); ++i) {
        const int level = assign_level(proposals[i], dcfg);
        const double stride = static_cast<double>(1 << level);
        const Tensor aligned = roi_align(pyramid.p(level), proposals[i], stride,
                                         dcfg.roi_output, dcfg.roi_samples);
        std::memcpy(roi_feats.data() + i * static_cast<std::size_t>(feat_len),
                    aligned.data(), sizeof(float) * static_cast<std::size_t>(feat_len));
    }
    const HeadOutput head = box_head_forward(roi_feats, weights, dcfg);
    return postprocess(proposals, head.cls_scores, head.deltas, img_w, img_h, dcfg);
}

std::vector<WeightSpec> model_weight_spec(const SwinConfig& scfg,
                                          const DetectorConfig& dcfg) {
    std::vector<WeightSpec> spec = swin_weight_spec(scfg);
    std::vector<WeightSpec> fpn = fpn_weight_spec(scfg);
    spec.insert(spec.end(), fpn.begin(), fpn.end());

    const int a = static_cast<int>(dcfg.ratios.size());
    spec.push_back({"rpn.conv.weight", {256, 256, 3, 3}});
    spec.push_back({"rpn.conv.bias", {256}});
    spec.push_back({"rpn.cls.weight", {a, 256, 1, 1}});
    spec.push_back({"rpn.cls.bias", {a}});
    spec.push_back({"rpn.reg.weight", {4 * a, 256, 1, 1}});
    spec.push_back({"rpn.reg.bias", {4 * a}});

    const int in_dim = 256 * dcfg.roi_output * dcfg.roi_output;
    const int hidden = dcfg.head_hidden;
    spec.push_back({"head.fc1.weight", {in_dim, hidden}});
    spec.push_back({"head.fc1.bias", {hidden}});
    spec.push_back({"head.fc2.weight", {hidden, hidden}});
    spec.push_back({"head.fc2.bias", {hidden}});
    spec.push_back({"head.cls.weight", {hidden, 2}});
    spec.push_back({"head.cls.bias", {2}});
    spec.push_back({"head.reg.weight", {hidden, 4}});
    spec.push_back({"head.reg.bias", {4}});
    return spec;
}

}  // namespace swindet
