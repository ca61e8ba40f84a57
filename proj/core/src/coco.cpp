#include "swindet/coco.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <unordered_set>

#include <json.hpp>

namespace swindet {

namespace {

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string escape_json(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

std::string bbox_json(const std::array<double, 4>& b) {
    return "[" + fmt6(b[0]) + "," + fmt6(b[1]) + "," + fmt6(b[2]) + "," + fmt6(b[3]) + "]";
}

double get_number(const nlohmann::json& j, const char* key, const std::string& ctx) {
    if (!j.contains(key) || !j[key].is_number()) {
        throw Error("coco: " + ctx + " missing numeric field '" + key + "'");
    }
    return j[key].get<double>();
}

int get_int(const nlohmann::json& j, const char* key, const std::string& ctx) {
    return static_cast<int>(get_number(j, key, ctx));
}

std::array<double, 4> get_bbox(const nlohmann::json& j, const std::string& ctx) {
    if (!j.contains("bbox") || !j["bbox"].is_array() || j["bbox"].size() != 4) {
        throw Error("coco: " + ctx + " missing 4-element 'bbox'");
    }
    std::array<double, 4> b{};
    for (int i = 0; i < 4; ++i) b[static_cast<std::size_t>(i)] = j["bbox"][static_cast<std::size_t>(i)].get<double>();
    return b;
}

}  // namespace

double snap6(double v) {
    return std::strtod(fmt6(v).c_str(), nullptr);
}

std::string write_coco_json(const CocoDataset& d) {
    std::string out = "{\"annotations\":[";
    for (std::size_t i = 0; i < d.annotations.size(); ++i) {
        const auto& a = d.annotations[i];
        if (i) out += ",";
        out += "{\"area\":" + fmt6(a.area);
        out += ",\"bbox\":" + bbox_json(a.bbox);
        out += ",\"category_id\":" + std::to_string(a.category_id);
        out += ",\"id\":" + std::to_string(a.id);
        out += ",\"image_id\":" + std::to_string(a.image_id);
        out += ",\"iscrowd\":" + std::to_string(a.iscrowd);
        out += "}";
    }
    out += "],\"categories\":[";
    for (std::size_t i = 0; i < d.categories.size(); ++i) {
        const auto& c = d.categories[i];
        if (i) out += ",";
        out += "{\"id\":" + std::to_string(c.id) + ",\"name\":\"" + escape_json(c.name) + "\"}";
    }
    out += "],\"images\":[";
    for (std::size_t i = 0; i < d.images.size(); ++i) {
        const auto& im = d.images[i];
        if (i) out += ",";
        out += "{\"file_name\":\"" + escape_json(im.file_name) + "\"";
        out += ",\"height\":" + std::to_string(im.height);
        out += ",\"id\":" + std::to_string(im.id);
        out += ",\"width\":" + std::to_string(im.width);
        out += "}";
    }
    out += "]}\n";
    return out;
}

std::string write_results_json(const std::vector<CocoResult>& results) {
    std::string out = "[";
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        if (i) out += ",";
        out += "{\"bbox\":" + bbox_json(r.bbox);
        out += ",\"category_id\":" + std::to_string(r.category_id);
        out += ",\"image_id\":" + std::to_string(r.image_id);
        out += ",\"score\":" + fmt6(r.score);
        out += "}";
    }
    out += "]\n";
    return out;
}

CocoDataset parse_coco_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw Error(std::string("coco: invalid JSON: ") + e.what());
    }
    CocoDataset d;
    d.categories.clear();
    if (!j.is_object()) throw Error("coco: top level must be an object");
    for (const char* key : {"images", "annotations", "categories"}) {
        if (!j.contains(key) || !j[key].is_array()) {
            throw Error(std::string("coco: missing top-level array '") + key + "'");
        }
    }
    for (const auto& ji : j["images"]) {
        CocoImage im;
        im.id = get_int(ji, "id", "image");
        im.width = get_int(ji, "width", "image");
        im.height = get_int(ji, "height", "image");
        if (!ji.contains("file_name") || !ji["file_name"].is_string()) {
            throw Error("coco: image missing string field 'file_name'");
        }
        im.file_name = ji["file_name"].get<std::string>();
        d.images.push_back(std::move(im));
    }
    for (const auto& ja : j["annotations"]) {
        CocoAnnotation a;
        a.id = get_int(ja, "id", "annotation");
        a.image_id = get_int(ja, "image_id", "annotation");
        a.category_id = get_int(ja, "category_id", "annotation");
        a.bbox = get_bbox(ja, "annotation");
        a.area = get_number(ja, "area", "annotation");
        a.iscrowd = ja.contains("iscrowd") ? get_int(ja, "iscrowd", "annotation") : 0;
        d.annotations.push_back(a);
    }
    for (const auto& jc : j["categories"]) {
        CocoCategory c;
        c.id = get_int(jc, "id", "category");
        c.name = jc.value("name", std::string());
        d.categories.push_back(std::move(c));
    }
    return d;
}

std::vector<CocoResult> parse_results_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw Error(std::string("coco: invalid results JSON: ") + e.what());
    }
    if (!j.is_array()) throw Error("coco: results top level must be an array");
    std::vector<CocoResult> out;
    for (const auto& jr : j) {
        CocoResult r;
        r.image_id = get_int(jr, "image_id", "result");
        r.category_id = get_int(jr, "category_id", "result");
        r.bbox = get_bbox(jr, "result");
        r.score = get_number(jr, "score", "result");
        out.push_back(r);
    }
    return out;
}

void validate_coco(const CocoDataset& d) {
    std::unordered_set<int> image_ids;
    for (const auto& im : d.images) {
        if (!image_ids.insert(im.id).second) {
            throw Error("coco: duplicate image id " + std::to_string(im.id));
        }
    }
    std::unordered_set<int> ann_ids;
    for (const auto& a : d.annotations) {
        if (!ann_ids.insert(a.id).second) {
            throw Error("coco: duplicate annotation id " + std::to_string(a.id));
        }
        if (image_ids.find(a.image_id) == image_ids.end()) {
            throw Error("coco: annotation " + std::to_string(a.id) +
                        " references missing image_id " + std::to_string(a.image_id));
        }
        if (std::abs(a.area - a.bbox[2] * a.bbox[3]) > 1e-6) {
            throw Error("coco: annotation " + std::to_string(a.id) + " area does not equal w*h");
        }
    }
}

}  // namespace swindet
