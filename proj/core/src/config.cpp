#include "swindet/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace swindet {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

[[noreturn]] void fail(int line, const std::string& what) {
    throw Error("config: line " + std::to_string(line) + ": " + what);
}

long long parse_ll(const std::string& v, int line) {
    char* end = nullptr;
    const long long out = std::strtoll(v.c_str(), &end, 10);
    if (end != v.c_str() + v.size() || v.empty()) fail(line, "malformed integer '" + v + "'");
    return out;
}

int parse_int(const std::string& v, int line) {
    return static_cast<int>(parse_ll(v, line));
}

std::uint64_t parse_u64(const std::string& v, int line) {
    char* end = nullptr;
    const unsigned long long out = std::strtoull(v.c_str(), &end, 10);
    if (end != v.c_str() + v.size() || v.empty() || v[0] == '-') {
        fail(line, "malformed unsigned integer '" + v + "'");
    }
    return out;
}

double parse_double(const std::string& v, int line) {
    char* end = nullptr;
    const double out = std::strtod(v.c_str(), &end);
    if (end != v.c_str() + v.size() || v.empty()) fail(line, "malformed number '" + v + "'");
    return out;
}

std::vector<double> parse_list(const std::string& v, int line) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= v.size()) {
        const std::size_t comma = v.find(',', pos);
        const std::string item =
            trim(comma == std::string::npos ? v.substr(pos) : v.substr(pos, comma - pos));
        out.push_back(parse_double(item, line));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

void apply_key(PipelineConfig& c, const std::string& section, const std::string& key,
               const std::string& value, int line) {
    if (section == "paths") {
        if (key == "scans_dir") c.scans_dir = value;
        else if (key == "annotations_csv") c.annotations_csv = value;
        else if (key == "output_dir") c.output_dir = value;
        else if (key == "weights_file") c.weights_file = value;
        else fail(line, "unknown key '" + key + "' in [paths]");
    } else if (section == "preprocess") {
        if (key == "hu_lo") c.hu_lo = parse_int(value, line);
        else if (key == "hu_hi") c.hu_hi = parse_int(value, line);
        else if (key == "margin_factor") c.margin_factor = parse_double(value, line);
        else fail(line, "unknown key '" + key + "' in [preprocess]");
    } else if (section == "swin") {
        if (key == "img_size") c.swin.img_size = parse_int(value, line);
        else if (key == "patch") c.swin.patch = parse_int(value, line);
        else if (key == "embed_dim") c.swin.embed_dim = parse_int(value, line);
        else if (key == "window") c.swin.window = parse_int(value, line);
        else if (key == "mlp_ratio") c.swin.mlp_ratio = parse_int(value, line);
        else fail(line, "unknown key '" + key + "' in [swin]");
    } else if (section == "detector") {
        if (key == "anchor_sizes") {
            const std::vector<double> vs = parse_list(value, line);
            if (vs.size() != c.detector.anchor_sizes.size()) {
                fail(line, "anchor_sizes needs exactly 5 values");
            }
            std::copy(vs.begin(), vs.end(), c.detector.anchor_sizes.begin());
        } else if (key == "ratios") {
            const std::vector<double> vs = parse_list(value, line);
            if (vs.size() != c.detector.ratios.size()) {
                fail(line, "ratios needs exactly 3 values");
            }
            std::copy(vs.begin(), vs.end(), c.detector.ratios.begin());
        } else if (key == "pre_nms_topk") c.detector.pre_nms_topk = parse_int(value, line);
        else if (key == "post_nms_topk") c.detector.post_nms_topk = parse_int(value, line);
        else if (key == "rpn_nms_iou") c.detector.rpn_nms_iou = parse_double(value, line);
        else if (key == "roi_output") c.detector.roi_output = parse_int(value, line);
        else if (key == "roi_samples") c.detector.roi_samples = parse_int(value, line);
        else if (key == "score_thresh") c.detector.score_thresh = parse_double(value, line);
        else if (key == "final_nms_iou") c.detector.final_nms_iou = parse_double(value, line);
        else if (key == "level_k0") c.detector.level_k0 = parse_int(value, line);
        else if (key == "level_canonical") c.detector.level_canonical = parse_double(value, line);
        else if (key == "head_hidden") c.detector.head_hidden = parse_int(value, line);
        else fail(line, "unknown key '" + key + "' in [detector]");
    } else if (section == "eval") {
        if (key == "small_max") c.eval.small_max = parse_double(value, line);
        else if (key == "medium_max") c.eval.medium_max = parse_double(value, line);
        else if (key == "max_detections") c.eval.max_detections = parse_int(value, line);
        else if (key == "histogram_bin_width") {
            c.eval.histogram_bin_width = parse_double(value, line);
        } else fail(line, "unknown key '" + key + "' in [eval]");
    } else if (section == "run") {
        if (key == "seed") c.seed = parse_u64(value, line);
        else fail(line, "unknown key '" + key + "' in [run]");
    } else {
        fail(line, "unknown section [" + section + "]");
    }
}

}  // namespace

PipelineConfig parse_config(const std::string& text) {
    PipelineConfig c;
    std::string section;
    int line_no = 0;
    std::istringstream ss(text);
    std::string raw;
    while (std::getline(ss, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail(line_no, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "paths" && section != "preprocess" && section != "swin" &&
                section != "detector" && section != "eval" && section != "run") {
                fail(line_no, "unknown section [" + section + "]");
            }
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) fail(line_no, "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) fail(line_no, "empty key");
        if (value.empty()) fail(line_no, "empty value for '" + key + "'");
        if (section.empty()) fail(line_no, "key '" + key + "' outside any section");
        apply_key(c, section, key, value, line_no);
    }
    return c;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("config: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

void validate_config(const PipelineConfig& c) {
    if (c.hu_lo >= c.hu_hi) throw Error("config: hu window requires lo < hi");
    if (c.margin_factor < 0.0) throw Error("config: margin_factor must be >= 0");

    const SwinConfig& s = c.swin;
    if (s.img_size <= 0 || s.patch <= 0 || s.embed_dim <= 0 || s.window <= 0 ||
        s.mlp_ratio < 1) {
        throw Error("config: swin geometry values must be positive");
    }
    if (s.img_size % (s.patch * 8) != 0) {
        throw Error("config: img_size must be divisible by patch * 8");
    }

    const DetectorConfig& d = c.detector;
    if (d.pre_nms_topk < 1 || d.post_nms_topk < 1) {
        throw Error("config: proposal top-k counts must be >= 1");
    }
    if (d.rpn_nms_iou <= 0.0 || d.rpn_nms_iou > 1.0 || d.final_nms_iou <= 0.0 ||
        d.final_nms_iou > 1.0) {
        throw Error("config: NMS thresholds must lie in (0,1]");
    }
    if (d.score_thresh < 0.0 || d.score_thresh > 1.0) {
        throw Error("config: score_thresh must lie in [0,1]");
    }
    if (d.roi_output < 1 || d.roi_samples < 1 || d.head_hidden < 1) {
        throw Error("config: roi/head sizes must be >= 1");
    }
    if (d.level_canonical <= 0.0) throw Error("config: level_canonical must be positive");
    for (double v : d.anchor_sizes) {
        if (v <= 0.0) throw Error("config: anchor sizes must be positive");
    }
    for (double v : d.ratios) {
        if (v <= 0.0) throw Error("config: aspect ratios must be positive");
    }

    const EvalConfig& e = c.eval;
    if (e.max_detections < 1) throw Error("config: max_detections must be >= 1");
    if (e.histogram_bin_width <= 0.0) {
        throw Error("config: histogram_bin_width must be positive");
    }
    const bool has_small = e.small_max > 0.0, has_medium = e.medium_max > 0.0;
    if (has_small != has_medium) {
        throw Error("config: set both small_max and medium_max or neither");
    }
    if (has_small && e.medium_max < e.small_max) {
        throw Error("config: medium_max must be >= small_max");
    }
}

}  // namespace swindet
