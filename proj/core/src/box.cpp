#include "swindet/box.hpp"

#include <algorithm>

namespace swindet {

double iou(const Box& a, const Box& b) {
    const double ix1 = std::max(a.x1, b.x1);
    const double iy1 = std::max(a.y1, b.y1);
    const double ix2 = std::min(a.x2, b.x2);
    const double iy2 = std::min(a.y2, b.y2);
    const double iw = ix2 - ix1;
    const double ih = iy2 - iy1;
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0.0) return 0.0;
    return inter / uni;
}

Box clip_box(const Box& b, double canvas_w, double canvas_h) {
    Box out;
    out.x1 = std::min(std::max(b.x1, 0.0), canvas_w);
    out.y1 = std::min(std::max(b.y1, 0.0), canvas_h);
    out.x2 = std::min(std::max(b.x2, 0.0), canvas_w);
    out.y2 = std::min(std::max(b.y2, 0.0), canvas_h);
    return out;
}

}  // namespace swindet
