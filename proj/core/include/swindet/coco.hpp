#pragma once

#include <array>
#include <string>
#include <vector>

#include "swindet/error.hpp"

namespace swindet {

struct CocoImage {
    int id = 0;
    std::string file_name;
    int width = 0;
    int height = 0;
};

struct CocoAnnotation {
    int id = 0;
    int image_id = 0;
    int category_id = 1;
    std::array<double, 4> bbox{0, 0, 0, 0};  // x, y, w, h
    double area = 0.0;
    int iscrowd = 0;
};

struct CocoCategory {
    int id = 1;
    std::string name = "nodule";
};

/// Images + annotations + categories mirror of the COCO JSON layout.
struct CocoDataset {
    std::vector<CocoImage> images;
    std::vector<CocoAnnotation> annotations;
    std::vector<CocoCategory> categories{CocoCategory{}};
};

/// One detection in COCO results form.
struct CocoResult {
    int image_id = 0;
    int category_id = 1;
    std::array<double, 4> bbox{0, 0, 0, 0};
    double score = 0.0;
};

/// Rounds v to the value of its 6-decimal rendering. Every float that goes
/// into a JSON writer is snapped first, so serialize -> parse -> serialize
/// reproduces files byte for byte.
double snap6(double v);

/// Canonical serialization: keys sorted, floats rendered as %.6f, single
/// line terminated by '\n'.
std::string write_coco_json(const CocoDataset& d);
std::string write_results_json(const std::vector<CocoResult>& results);

CocoDataset parse_coco_json(const std::string& text);
std::vector<CocoResult> parse_results_json(const std::string& text);

/// Checks id uniqueness, image_id references and area = w*h (1e-6).
void validate_coco(const CocoDataset& d);

}  // namespace swindet
