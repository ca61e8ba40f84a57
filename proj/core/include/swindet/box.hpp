#pragma once

namespace swindet {

/// Axis-aligned box in pixel coordinates, corner form (x1,y1) < (x2,y2).
struct Box {
    double x1 = 0.0;
    double y1 = 0.0;
    double x2 = 0.0;
    double y2 = 0.0;

    double width() const { return x2 - x1; }
    double height() const { return y2 - y1; }
    double area() const { return width() * height(); }
    double cx() const { return 0.5 * (x1 + x2); }
    double cy() const { return 0.5 * (y1 + y2); }
};

/// Intersection over union; 0 for disjoint or degenerate pairs.
double iou(const Box& a, const Box& b);

/// Clamps the box to the canvas [0,w] x [0,h].
Box clip_box(const Box& b, double canvas_w, double canvas_h);

}  // namespace swindet
