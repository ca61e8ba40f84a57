#include "app.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <vector>

#include "swindet/ct_io.hpp"
#include "swindet/detect.hpp"
#include "swindet/eval.hpp"
#include "swindet/weights.hpp"

namespace fs = std::filesystem;

namespace swindet::app {

namespace {

std::string read_text(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("app: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
    const std::string s = read_text(path);
    return std::vector<std::uint8_t>(s.begin(), s.end());
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("app: cannot open '" + path + "' for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw Error("app: write failed for '" + path + "'");
}

void require_output_dir(const PipelineConfig& cfg) {
    if (cfg.output_dir.empty()) throw Error("app: output_dir is required");
}

}  // namespace

Tensor slice_to_input(const SliceImage& s) {
    Tensor input({3, s.height, s.width});
    for (int y = 0; y < s.height; ++y) {
        for (int x = 0; x < s.width; ++x) {
            const float v =
                s.pixels[static_cast<std::size_t>(y) * s.width + x] / 4095.0f;
            for (int c = 0; c < 3; ++c) input.at(c, y, x) = v;
        }
    }
    return input;
}

int cmd_preprocess(const PipelineConfig& cfg, std::ostream& out, std::ostream& err) {
    validate_config(cfg);
    if (cfg.scans_dir.empty() || !fs::is_directory(cfg.scans_dir)) {
        throw Error("app: scans dir '" + cfg.scans_dir + "' does not exist");
    }
    if (cfg.annotations_csv.empty() || !fs::exists(cfg.annotations_csv)) {
        throw Error("app: annotations file '" + cfg.annotations_csv + "' does not exist");
    }
    require_output_dir(cfg);
    fs::create_directories(cfg.output_dir);

    std::vector<fs::path> headers;
    for (const auto& entry : fs::directory_iterator(cfg.scans_dir)) {
        if (entry.path().extension() == ".mhd") headers.push_back(entry.path());
    }
    std::sort(headers.begin(), headers.end());
    if (headers.empty()) throw Error("app: no volumes found in '" + cfg.scans_dir + "'");

    const std::vector<NoduleAnnotation> annotations =
        parse_annotations_csv(read_text(cfg.annotations_csv));

    std::vector<SliceImage> slices;
    std::vector<BoxLabel> labels;
    int failures = 0;
    for (const fs::path& header : headers) {
        const std::string uid = header.stem().string();
        try {
            const VolumeMeta meta = parse_mhd(read_text(header.string()));
            const fs::path data_path = header.parent_path() / meta.data_file;
            CtVolume vol = load_volume(meta, read_bytes(data_path.string()));
            vol.series_uid = uid;

            std::vector<NoduleAnnotation> mine;
            for (const NoduleAnnotation& a : annotations) {
                if (a.series_uid == uid) mine.push_back(a);
            }
            const std::vector<SliceMatch> matches =
                select_nodule_slices(vol, mine, cfg.margin_factor);
            for (const SliceMatch& m : matches) {
                SliceImage s = extract_slice(vol, m.z_index, cfg.hu_lo, cfg.hu_hi);
                const int slice_idx = static_cast<int>(slices.size());
                for (const NoduleAnnotation& a : m.matched) {
                    try {
                        const Box raw = annotation_to_bbox(a, vol.meta);
                        const Box b = clip_bbox_to_canvas(
                            raw, s.width, s.height,
                            uid + " z=" + std::to_string(m.z_index));
                        labels.push_back(
                            BoxLabel{slice_idx, b.x1, b.y1, b.width(), b.height()});
                    } catch (const Error& e) {
                        err << "warning: " << e.what() << "\n";
                    }
                }
                write_slice_pgm(
                    s, (fs::path(cfg.output_dir) / slice_file_name(uid, m.z_index)).string());
                slices.push_back(std::move(s));
            }
        } catch (const Error& e) {
            err << "error: " << header.string() << ": " << e.what() << "\n";
            ++failures;
        }
    }

    const CocoDataset dataset = export_coco(slices, labels);
    write_text((fs::path(cfg.output_dir) / "dataset.json").string(),
               write_coco_json(dataset));

    // Manifest rows in the same (series_uid, z_index) order as the dataset.
    std::vector<std::size_t> order(slices.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (slices[a].series_uid != slices[b].series_uid) {
            return slices[a].series_uid < slices[b].series_uid;
        }
        return slices[a].z_index < slices[b].z_index;
    });
    std::string manifest = "series_uid,z_index,file_name\n";
    for (std::size_t i : order) {
        manifest += slices[i].series_uid + "," + std::to_string(slices[i].z_index) + "," +
                    slice_file_name(slices[i].series_uid, slices[i].z_index) + "\n";
    }
    write_text((fs::path(cfg.output_dir) / "manifest.csv").string(), manifest);

    out << "scans: " << headers.size() << "\n";
    out << "slices: " << slices.size() << "\n";
    out << "annotations: " << labels.size() << "\n";
    if (failures > 0) {
        err << failures << " volume(s) failed\n";
        return 1;
    }
    return 0;
}

int cmd_infer(const PipelineConfig& cfg, bool seed_weights, std::ostream& out,
              std::ostream& err) {
    validate_config(cfg);
    require_output_dir(cfg);
    const fs::path out_dir(cfg.output_dir);
    const std::string dataset_path = (out_dir / "dataset.json").string();
    if (!fs::exists(dataset_path)) {
        throw Error("app: '" + dataset_path + "' not found (run preprocess first)");
    }

    WeightMap weights;
    if (seed_weights) {
        weights = seeded_weights(model_weight_spec(cfg.swin, cfg.detector), cfg.seed);
        if (!cfg.weights_file.empty()) write_weights(weights, cfg.weights_file);
    } else {
        if (cfg.weights_file.empty() || !fs::exists(cfg.weights_file)) {
            throw Error("app: weights file '" + cfg.weights_file +
                        "' not found (or pass --seed-weights)");
        }
        weights = read_weights(cfg.weights_file);
    }

    const CocoDataset dataset = parse_coco_json(read_text(dataset_path));
    validate_coco(dataset);

    std::vector<CocoResult> results;
    for (const CocoImage& im : dataset.images) {
        const SliceImage s = read_slice_pgm((out_dir / im.file_name).string());
        if (s.width != im.width || s.height != im.height) {
            throw Error("app: size mismatch for '" + im.file_name + "'");
        }
        const Tensor input = slice_to_input(s);
        const std::vector<BoxDetection> dets =
            detect(input, weights, cfg.swin, cfg.detector);
        for (const BoxDetection& d : dets) {
            CocoResult r;
            r.image_id = im.id;
            r.category_id = d.label;
            r.bbox = {snap6(d.box.x1), snap6(d.box.y1), snap6(d.box.width()),
                      snap6(d.box.height())};
            r.score = snap6(d.score);
            results.push_back(r);
        }
    }
    write_text((out_dir / "results.json").string(), write_results_json(results));
    out << "images: " << dataset.images.size() << "\n";
    out << "detections: " << results.size() << "\n";
    (void)err;
    return 0;
}

int cmd_eval(const PipelineConfig& cfg, const std::string& gt_path,
             const std::string& results_path, std::ostream& out, std::ostream& err) {
    validate_config(cfg);
    require_output_dir(cfg);
    const fs::path out_dir(cfg.output_dir);
    const std::string gt_file =
        gt_path.empty() ? (out_dir / "dataset.json").string() : gt_path;
    const std::string results_file =
        results_path.empty() ? (out_dir / "results.json").string() : results_path;

    const CocoDataset gt = parse_coco_json(read_text(gt_file));
    const std::vector<CocoResult> results = parse_results_json(read_text(results_file));

    const EvalResult res = evaluate(gt, results, cfg.eval);
    out << format_report(res);
    write_text((out_dir / "report.json").string(), eval_result_json(res));

    std::vector<double> areas;
    for (const CocoAnnotation& a : gt.annotations) areas.push_back(a.area);
    write_text((out_dir / "histogram.csv").string(),
               histogram_csv(area_histogram(areas, cfg.eval.histogram_bin_width)));
    (void)err;
    return 0;
}

int cmd_bench(const PipelineConfig& cfg, int runs, std::ostream& out, std::ostream& err) {
    validate_config(cfg);
    if (runs < 5) runs = 5;

    WeightMap weights;
    if (!cfg.weights_file.empty() && fs::exists(cfg.weights_file)) {
        weights = read_weights(cfg.weights_file);
    } else {
        weights = seeded_weights(model_weight_spec(cfg.swin, cfg.detector), cfg.seed);
    }

    const int side = cfg.swin.img_size;
    Tensor image({3, side, side});
    std::uint64_t state = cfg.seed ^ fnv1a64("bench.image");
    for (float& v : image.values()) {
        v = static_cast<float>(static_cast<double>(splitmix64_next(state) >> 40) /
                               16777216.0);
    }

    std::vector<double> times_ms;
    std::size_t last_count = 0;
    for (int r = 0; r < runs; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        const std::vector<BoxDetection> dets =
            detect(image, weights, cfg.swin, cfg.detector);
        const auto t1 = std::chrono::steady_clock::now();
        last_count = dets.size();
        times_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    std::sort(times_ms.begin(), times_ms.end());
    const double median = times_ms[(times_ms.size() - 1) / 2];

    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", median);
    out << "parameters: " << total_parameters(weights) << "\n";
    out << "runs: " << runs << "\n";
    out << "median_ms: " << buf << "\n";
    out << "detections: " << last_count << "\n";
    (void)err;
    return 0;
}

}  // namespace swindet::app
