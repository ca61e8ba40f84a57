#include "app.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "swindet/detect.hpp"
#include "swindet/eval.hpp"
#include "swindet/fpn.hpp"
#include "swindet/weights.hpp"

namespace swindet::app {

namespace {

double rnd01(std::uint64_t& state) {
    return static_cast<double>(splitmix64_next(state) >> 40) / 16777216.0;
}

Box rnd_box(std::uint64_t& state, double extent) {
    const double x1 = rnd01(state) * extent * 0.8;
    const double y1 = rnd01(state) * extent * 0.8;
    const double w = 1.0 + rnd01(state) * extent * 0.2;
    const double h = 1.0 + rnd01(state) * extent * 0.2;
    return Box{x1, y1, x1 + w, y1 + h};
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

// Hand-checkable IoU cases.
bool suite_iou(std::string& detail) {
    const Box a{0, 0, 2, 2};
    if (!near(iou(a, a), 1.0, 1e-12)) {
        detail = "identity box IoU != 1";
        return false;
    }
    if (!near(iou(a, Box{5, 5, 6, 6}), 0.0, 1e-12)) {
        detail = "disjoint boxes IoU != 0";
        return false;
    }
    if (!near(iou(a, Box{2, 0, 4, 2}), 0.0, 1e-12)) {
        detail = "edge-touching boxes IoU != 0";
        return false;
    }
    // areas 4 and 4, intersection 1 -> union 7
    if (!near(iou(a, Box{1, 1, 3, 3}), 1.0 / 7.0, 1e-12)) {
        detail = "quarter-overlap IoU != 1/7";
        return false;
    }
    return true;
}

// Greedy suppression re-derived with a mark array instead of a keep list.
std::vector<int> nms_reference(const std::vector<Box>& boxes,
                               const std::vector<double>& scores, double thresh) {
    const int n = static_cast<int>(boxes.size());
    std::vector<char> removed(static_cast<std::size_t>(n), 0);
    std::vector<int> kept;
    for (;;) {
        int best = -1;
        for (int i = 0; i < n; ++i) {
            if (removed[static_cast<std::size_t>(i)]) continue;
            if (best < 0 || scores[static_cast<std::size_t>(i)] >
                                scores[static_cast<std::size_t>(best)]) {
                best = i;
            }
        }
        if (best < 0) break;
        kept.push_back(best);
        removed[static_cast<std::size_t>(best)] = 1;
        for (int i = 0; i < n; ++i) {
            if (removed[static_cast<std::size_t>(i)]) continue;
            if (iou(boxes[static_cast<std::size_t>(best)],
                    boxes[static_cast<std::size_t>(i)]) > thresh) {
                removed[static_cast<std::size_t>(i)] = 1;
            }
        }
    }
    return kept;
}

bool suite_nms(std::string& detail) {
    std::uint64_t state = fnv1a64("selftest.nms");
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + static_cast<int>(splitmix64_next(state) % 120);
        std::vector<Box> boxes;
        std::vector<double> scores;
        for (int i = 0; i < n; ++i) {
            boxes.push_back(rnd_box(state, 40.0));
            // Quantized scores so ties actually occur.
            scores.push_back(std::floor(rnd01(state) * 8.0) / 8.0);
        }
        const double thresh = 0.2 + 0.6 * rnd01(state);
        if (nms(boxes, scores, thresh) != nms_reference(boxes, scores, thresh)) {
            detail = "mismatch vs reference on trial " + std::to_string(trial);
            return false;
        }
    }
    return true;
}

bool suite_ap(std::string& detail) {
    // One TP then one FP over a single object: envelope precision 1 at the
    // reached recall, so AP = 1.
    if (!near(ap_101({1, 0}, 1), 1.0, 1e-12)) {
        detail = "TP-then-FP should score 1.0";
        return false;
    }
    // FP first halves the envelope.
    if (!near(ap_101({0, 1}, 1), 0.5, 1e-12)) {
        detail = "FP-then-TP should score 0.5";
        return false;
    }
    if (!near(ap_101({}, 3), 0.0, 1e-12)) {
        detail = "no detections should score 0.0";
        return false;
    }
    // One of two objects found: 51 of the 101 grid points lie at recall <= 0.5.
    if (!near(ap_101({1}, 2), 51.0 / 101.0, 1e-12)) {
        detail = "half recall should score 51/101";
        return false;
    }
    return true;
}

double bilinear_oracle(const Tensor& f, int c, double y, double x) {
    const int y0 = static_cast<int>(std::floor(y));
    const int x0 = static_cast<int>(std::floor(x));
    double v = 0.0;
    for (int dy = 0; dy <= 1; ++dy) {
        for (int dx = 0; dx <= 1; ++dx) {
            const int yy = y0 + dy, xx = x0 + dx;
            if (yy < 0 || yy >= f.dim(1) || xx < 0 || xx >= f.dim(2)) continue;
            const double wy = dy ? y - y0 : 1.0 - (y - y0);
            const double wx = dx ? x - x0 : 1.0 - (x - x0);
            v += wy * wx * f.at(c, yy, xx);
        }
    }
    return v;
}

bool suite_roi_align(bool perturb, std::string& detail) {
    std::uint64_t state = fnv1a64("selftest.roi");
    for (int trial = 0; trial < 40; ++trial) {
        Tensor f({2, 8, 8});
        for (float& v : f.values()) v = static_cast<float>(rnd01(state) * 2.0 - 1.0);
        const double stride = 4.0;
        Box roi = rnd_box(state, 30.0);
        const int out_size = 2 + static_cast<int>(splitmix64_next(state) % 4);
        const int samples = 2;
        const Tensor got = roi_align(f, roi, stride, out_size, samples);
        for (int c = 0; c < 2; ++c) {
            for (int by = 0; by < out_size; ++by) {
                for (int bx = 0; bx < out_size; ++bx) {
                    const double bw = (roi.x2 - roi.x1) / stride / out_size;
                    const double bh = (roi.y2 - roi.y1) / stride / out_size;
                    double acc = 0.0;
                    for (int sy = 0; sy < samples; ++sy) {
                        for (int sx = 0; sx < samples; ++sx) {
                            const double y =
                                roi.y1 / stride + (by + (sy + 0.5) / samples) * bh;
                            const double x =
                                roi.x1 / stride + (bx + (sx + 0.5) / samples) * bw;
                            acc += bilinear_oracle(f, c, y, x);
                        }
                    }
                    double want = acc / (samples * samples);
                    if (perturb && trial == 0 && c == 0 && by == 0 && bx == 0) {
                        want += 1e-3;  // deliberate corruption to prove the fail path
                    }
                    if (!near(got.at(c, by, bx), want, 1e-5)) {
                        detail = "bin mismatch on trial " + std::to_string(trial);
                        return false;
                    }
                }
            }
        }
    }
    return true;
}

bool suite_deltas(std::string& detail) {
    std::uint64_t state = fnv1a64("selftest.deltas");
    for (int trial = 0; trial < 200; ++trial) {
        const Box anchor = rnd_box(state, 200.0);
        const Box target = rnd_box(state, 200.0);
        const Box back =
            decode_deltas(anchor, encode_deltas(anchor, target), 512.0, 512.0);
        if (!near(back.x1, target.x1, 1e-4) || !near(back.y1, target.y1, 1e-4) ||
            !near(back.x2, target.x2, 1e-4) || !near(back.y2, target.y2, 1e-4)) {
            detail = "round trip drift on trial " + std::to_string(trial);
            return false;
        }
    }
    return true;
}

bool suite_shapes(std::string& detail) {
    SwinConfig cfg;
    cfg.img_size = 64;
    std::vector<WeightSpec> spec = swin_weight_spec(cfg);
    const std::vector<WeightSpec> fpn_spec = fpn_weight_spec(cfg);
    spec.insert(spec.end(), fpn_spec.begin(), fpn_spec.end());
    const WeightMap weights = seeded_weights(spec, 7);

    Tensor image({3, 64, 64});
    std::uint64_t state = fnv1a64("selftest.shapes");
    for (float& v : image.values()) v = static_cast<float>(rnd01(state));

    const FeatureHierarchy h = swin_forward(image, weights, cfg);
    for (int i = 0; i < 4; ++i) {
        const int want_c = cfg.embed_dim << i;
        const int want_s = 16 >> i;
        const Tensor& s = h.stages[static_cast<std::size_t>(i)];
        if (s.rank() != 3 || s.dim(0) != want_c || s.dim(1) != want_s ||
            s.dim(2) != want_s) {
            detail = "stage " + std::to_string(i) + " has wrong shape";
            return false;
        }
        if (!all_finite(s)) {
            detail = "stage " + std::to_string(i) + " has non-finite values";
            return false;
        }
    }
    const FeaturePyramid pyr = build_pyramid(h, weights, cfg);
    for (int level = 2; level <= 6; ++level) {
        const int want_s = 64 >> level;
        const Tensor& p = pyr.p(level);
        if (p.rank() != 3 || p.dim(0) != 256 || p.dim(1) != std::max(want_s, 1) ||
            p.dim(2) != std::max(want_s, 1)) {
            detail = "P" + std::to_string(level) + " has wrong shape";
            return false;
        }
    }
    return true;
}

}  // namespace

int run_selftest(std::ostream& out, bool perturb_kernel) {
    struct Entry {
        const char* name;
        bool ok;
        std::string detail;
    };
    std::vector<Entry> entries;
    const auto run = [&](const char* name, auto&& fn) {
        std::string detail;
        bool ok = false;
        try {
            ok = fn(detail);
        } catch (const std::exception& e) {
            detail = e.what();
        }
        entries.push_back(Entry{name, ok, detail});
    };
    run("iou", suite_iou);
    run("nms", suite_nms);
    run("ap", suite_ap);
    run("roi_align",
        [&](std::string& d) { return suite_roi_align(perturb_kernel, d); });
    run("deltas", suite_deltas);
    run("shapes", suite_shapes);

    int failed = 0;
    for (const Entry& e : entries) {
        char line[160];
        std::snprintf(line, sizeof(line), "%-10s %s", e.name, e.ok ? "pass" : "FAIL");
        out << line;
        if (!e.ok) {
            ++failed;
            if (!e.detail.empty()) out << "  (" << e.detail << ")";
        }
        out << "\n";
    }
    if (failed == 0) {
        out << "all suites passed\n";
    } else {
        out << failed << " suite(s) failed\n";
    }
    return failed == 0 ? 0 : 1;
}

}  // namespace swindet::app
