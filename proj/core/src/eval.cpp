#include "swindet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

namespace swindet {

namespace {

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string join6(const std::vector<double>& vs) {
    std::string out;
    for (std::size_t i = 0; i < vs.size(); ++i) {
        if (i) out += ",";
        out += fmt6(vs[i]);
    }
    return out;
}

}  // namespace

std::vector<double> default_iou_thresholds() {
    std::vector<double> t;
    t.reserve(10);
    for (int i = 0; i < 10; ++i) t.push_back((50 + 5 * i) / 100.0);
    return t;
}

MatchResult match_detections(const std::vector<Box>& dets, const std::vector<Box>& gts,
                             const std::vector<bool>& gt_ignore, double iou_thresh) {
    if (gt_ignore.size() != gts.size()) {
        throw Error("eval: ignore flag count does not match ground truths");
    }
    MatchResult r;
    r.det_match.assign(dets.size(), -1);
    r.det_tp.assign(dets.size(), false);
    r.det_ignored.assign(dets.size(), false);
    r.gt_matched.assign(gts.size(), false);

    for (std::size_t d = 0; d < dets.size(); ++d) {
        auto pick = [&](bool want_ignored) {
            int best = -1;
            double best_v = -1.0;
            for (std::size_t g = 0; g < gts.size(); ++g) {
                if (r.gt_matched[g] || gt_ignore[g] != want_ignored) continue;
                const double v = iou(dets[d], gts[g]);
                if (v < iou_thresh) continue;
                if (v > best_v) {
                    best_v = v;
                    best = static_cast<int>(g);
                }
            }
            return best;
        };
        int g = pick(false);
        if (g >= 0) {
            r.det_match[d] = g;
            r.det_tp[d] = true;
            r.gt_matched[static_cast<std::size_t>(g)] = true;
            continue;
        }
        g = pick(true);
        if (g >= 0) {
            r.det_match[d] = g;
            r.det_ignored[d] = true;
            r.gt_matched[static_cast<std::size_t>(g)] = true;
        }
    }
    return r;
}

double ap_101(const std::vector<char>& tp_flags, int gt_count) {
    if (gt_count <= 0) throw Error("eval: ap_101 requires a positive gt count");
    const std::size_t n = tp_flags.size();
    if (n == 0) return 0.0;
    std::vector<double> precision(n), recall(n);
    int tp = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (tp_flags[k]) ++tp;
        precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
        recall[k] = static_cast<double>(tp) / gt_count;
    }
    for (std::size_t k = n - 1; k > 0; --k) {
        precision[k - 1] = std::max(precision[k - 1], precision[k]);
    }
    double sum = 0.0;
    for (int i = 0; i <= 100; ++i) {
        const double r = i / 100.0;
        auto it = std::lower_bound(recall.begin(), recall.end(), r);
        if (it != recall.end()) {
            sum += precision[static_cast<std::size_t>(it - recall.begin())];
        }
    }
    return sum / 101.0;
}

std::array<double, 2> area_tertiles(std::vector<double> areas) {
    if (areas.empty()) return {0.0, 0.0};
    std::sort(areas.begin(), areas.end());
    const std::size_t n = areas.size();
    const std::size_t r1 = (n + 2) / 3;          // ceil(n/3)
    const std::size_t r2 = (2 * n + 2) / 3;      // ceil(2n/3)
    return {areas[r1 - 1], areas[r2 - 1]};
}

EvalResult evaluate(const CocoDataset& gt, const std::vector<CocoResult>& results,
                    const EvalConfig& cfg) {
    validate_coco(gt);
    const std::vector<double>& ts = cfg.iou_thresholds;
    if (ts.empty()) throw Error("eval: at least one IoU threshold required");
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (ts[i] <= 0.0 || ts[i] >= 1.0) throw Error("eval: thresholds must lie in (0,1)");
        if (i > 0 && ts[i] <= ts[i - 1]) {
            throw Error("eval: thresholds must be strictly increasing");
        }
    }
    if (cfg.max_detections < 1) throw Error("eval: max_detections must be >= 1");

    std::set<int> image_ids;
    for (const CocoImage& im : gt.images) image_ids.insert(im.id);

    struct Det {
        Box box;
        double score;
        int idx;
    };
    struct Gt {
        Box box;
        double area;
    };
    std::map<int, std::vector<Det>> dets_by_image;
    std::map<int, std::vector<Gt>> gts_by_image;
    std::vector<double> all_areas;

    for (std::size_t i = 0; i < results.size(); ++i) {
        const CocoResult& r = results[i];
        if (!image_ids.count(r.image_id)) {
            throw Error("eval: result references unknown image id " +
                        std::to_string(r.image_id));
        }
        if (r.category_id != 1) {
            throw Error("eval: unexpected category id " + std::to_string(r.category_id));
        }
        if (!(r.score >= 0.0 && r.score <= 1.0)) {
            throw Error("eval: detection score outside [0,1]");
        }
        if (r.bbox[2] < 0.0 || r.bbox[3] < 0.0) {
            throw Error("eval: detection bbox has negative size");
        }
        dets_by_image[r.image_id].push_back(
            Det{Box{r.bbox[0], r.bbox[1], r.bbox[0] + r.bbox[2], r.bbox[1] + r.bbox[3]},
                r.score, static_cast<int>(i)});
    }
    for (auto& [id, dets] : dets_by_image) {
        std::sort(dets.begin(), dets.end(), [](const Det& a, const Det& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.idx < b.idx;
        });
        if (dets.size() > static_cast<std::size_t>(cfg.max_detections)) {
            dets.resize(static_cast<std::size_t>(cfg.max_detections));
        }
    }
    for (const CocoAnnotation& a : gt.annotations) {
        gts_by_image[a.image_id].push_back(
            Gt{Box{a.bbox[0], a.bbox[1], a.bbox[0] + a.bbox[2], a.bbox[1] + a.bbox[3]},
               a.area});
        all_areas.push_back(a.area);
    }

    double c1 = cfg.small_max, c2 = cfg.medium_max;
    if (c1 <= 0.0 || c2 <= 0.0) {
        const std::array<double, 2> cuts = area_tertiles(all_areas);
        c1 = cuts[0];
        c2 = cuts[1];
    }
    if (c2 < c1) throw Error("eval: medium_max must be >= small_max");

    EvalResult out;
    out.thresholds = ts;
    out.small_max = c1;
    out.medium_max = c2;

    static const char* kNames[4] = {"small", "medium", "large", "all"};
    for (int b = 0; b < 4; ++b) {
        auto in_bin = [&](double area) {
            switch (b) {
                case 0: return area <= c1;
                case 1: return area > c1 && area <= c2;
                case 2: return area > c2;
                default: return true;
            }
        };
        BinResult br;
        br.name = kNames[b];
        for (const auto& [id, gts] : gts_by_image) {
            for (const Gt& g : gts) {
                if (in_bin(g.area)) ++br.gt_count;
            }
        }
        for (double t : ts) {
            struct Pooled {
                double score;
                int image_id;
                int idx;
                char tp;
            };
            std::vector<Pooled> pooled;
            for (int id : image_ids) {
                const auto git = gts_by_image.find(id);
                const auto dit = dets_by_image.find(id);
                std::vector<Box> gt_boxes;
                std::vector<bool> ignore;
                if (git != gts_by_image.end()) {
                    for (const Gt& g : git->second) {
                        gt_boxes.push_back(g.box);
                        ignore.push_back(!in_bin(g.area));
                    }
                }
                if (dit == dets_by_image.end()) continue;
                std::vector<Box> det_boxes;
                for (const Det& d : dit->second) det_boxes.push_back(d.box);
                const MatchResult m = match_detections(det_boxes, gt_boxes, ignore, t);
                for (std::size_t k = 0; k < det_boxes.size(); ++k) {
                    if (m.det_ignored[k]) continue;
                    pooled.push_back(Pooled{dit->second[k].score, id, dit->second[k].idx,
                                            static_cast<char>(m.det_tp[k] ? 1 : 0)});
                }
            }
            std::sort(pooled.begin(), pooled.end(), [](const Pooled& a, const Pooled& p) {
                if (a.score != p.score) return a.score > p.score;
                if (a.image_id != p.image_id) return a.image_id < p.image_id;
                return a.idx < p.idx;
            });
            if (br.gt_count == 0) {
                br.ap.push_back(-1.0);
                br.recall.push_back(-1.0);
                continue;
            }
            std::vector<char> flags;
            int tp_total = 0;
            for (const Pooled& p : pooled) {
                flags.push_back(p.tp);
                tp_total += p.tp;
            }
            br.ap.push_back(ap_101(flags, br.gt_count));
            br.recall.push_back(static_cast<double>(tp_total) / br.gt_count);
        }
        if (br.gt_count > 0) {
            double ap_sum = 0.0, r_sum = 0.0;
            for (std::size_t i = 0; i < ts.size(); ++i) {
                ap_sum += br.ap[i];
                r_sum += br.recall[i];
            }
            br.map = ap_sum / static_cast<double>(ts.size());
            br.mar = r_sum / static_cast<double>(ts.size());
        }
        out.bins.push_back(std::move(br));
    }
    return out;
}

std::vector<std::pair<double, int>> area_histogram(const std::vector<double>& areas,
                                                   double bin_width) {
    if (bin_width <= 0.0) throw Error("eval: histogram bin width must be positive");
    std::map<long long, int> counts;
    for (double a : areas) {
        if (a < 0.0) throw Error("eval: negative area in histogram input");
        ++counts[static_cast<long long>(std::floor(a / bin_width))];
    }
    std::vector<std::pair<double, int>> out;
    out.reserve(counts.size());
    for (const auto& [bucket, count] : counts) {
        out.emplace_back(static_cast<double>(bucket) * bin_width, count);
    }
    return out;
}

std::string histogram_csv(const std::vector<std::pair<double, int>>& buckets) {
    std::string out = "bucket_start,count\n";
    for (const auto& [start, count] : buckets) {
        out += fmt6(start) + "," + std::to_string(count) + "\n";
    }
    return out;
}

std::string format_report(const EvalResult& r) {
    auto cell = [](double v) {
        char buf[32];
        if (v < 0.0) {
            std::snprintf(buf, sizeof(buf), "%10s", "-");
        } else {
            std::snprintf(buf, sizeof(buf), "%10.3f", v);
        }
        return std::string(buf);
    };
    char buf[64];
    std::string out = "metric        IoU     small    medium     large       all\n";
    const double kShown[3] = {0.50, 0.75, 0.95};
    for (int metric = 0; metric < 2; ++metric) {
        for (double want : kShown) {
            int ti = -1;
            for (std::size_t i = 0; i < r.thresholds.size(); ++i) {
                if (std::abs(r.thresholds[i] - want) < 1e-9) ti = static_cast<int>(i);
            }
            if (ti < 0) continue;
            std::snprintf(buf, sizeof(buf), "%-6s %9.2f", metric == 0 ? "AP" : "AR", want);
            out += buf;
            for (const BinResult& b : r.bins) {
                out += cell(metric == 0 ? b.ap[static_cast<std::size_t>(ti)]
                                        : b.recall[static_cast<std::size_t>(ti)]);
            }
            out += "\n";
        }
    }
    std::snprintf(buf, sizeof(buf), "%-6s %9s", "mAP", "0.50:0.95");
    out += buf;
    for (const BinResult& b : r.bins) out += cell(b.map);
    out += "\n";
    std::snprintf(buf, sizeof(buf), "%-6s %9s", "mAR", "0.50:0.95");
    out += buf;
    for (const BinResult& b : r.bins) out += cell(b.mar);
    out += "\n";
    return out;
}

std::string eval_result_json(const EvalResult& r) {
    std::string s = "{\"bins\":[";
    for (std::size_t i = 0; i < r.bins.size(); ++i) {
        const BinResult& b = r.bins[i];
        if (i) s += ",";
        s += "{\"ap\":[" + join6(b.ap) + "],\"gt_count\":" + std::to_string(b.gt_count) +
             ",\"map\":" + fmt6(b.map) + ",\"mar\":" + fmt6(b.mar) + ",\"name\":\"" +
             b.name + "\",\"recall\":[" + join6(b.recall) + "]}";
    }
    s += "],\"medium_max\":" + fmt6(r.medium_max) + ",\"small_max\":" + fmt6(r.small_max) +
         ",\"thresholds\":[" + join6(r.thresholds) + "]}\n";
    return s;
}

}  // namespace swindet
