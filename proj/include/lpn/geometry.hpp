#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "lpn/errors.hpp"

namespace lpn {

/**
 * @brief Axis-aligned box in continuous pixel coordinates.
 *
 * Corner convention: (x1, y1) top-left, (x2, y2) bottom-right, with
 * x1 <= x2 and y1 <= y2 for valid boxes. Area is (x2 - x1) * (y2 - y1)
 * exactly, so IoU is deterministic regardless of whether the source
 * annotation treated pixels as inclusive or exclusive. Zero-area boxes are
 * legal values (parsers must survive imperfect annotations); operations
 * that require positive extent reject them explicitly.
 */
struct Box {
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

    Box() = default;
    Box(double x1_, double y1_, double x2_, double y2_) : x1(x1_), y1(y1_), x2(x2_), y2(y2_) {}

    double width() const { return x2 - x1; }
    double height() const { return y2 - y1; }
    double area() const { return width() * height(); }
    double center_x() const { return 0.5 * (x1 + x2); }
    double center_y() const { return 0.5 * (y1 + y2); }

    bool valid() const { return x1 <= x2 && y1 <= y2; }

    static Box from_center(double cx, double cy, double w, double h) {
        return Box(cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h);
    }

    friend bool operator==(const Box&, const Box&) = default;
};

inline std::string to_string(const Box& b) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "[%.10g, %.10g, %.10g, %.10g]", b.x1, b.y1, b.x2, b.y2);
    return buf;
}

/// Dimensionless regression targets relating a ground-truth box to a
/// default box: center offsets scaled by the default size plus log size
/// ratios.
struct OffsetVector {
    double tx = 0, ty = 0, tw = 0, th = 0;

    friend bool operator==(const OffsetVector&, const OffsetVector&) = default;
};

/**
 * @brief Intersection over union of two boxes, in [0, 1].
 *
 * Returns 0 for disjoint boxes and for degenerate pairs whose union has
 * zero area.
 */
inline double iou(const Box& a, const Box& b) {
    const double ix1 = std::max(a.x1, b.x1);
    const double iy1 = std::max(a.y1, b.y1);
    const double ix2 = std::min(a.x2, b.x2);
    const double iy2 = std::min(a.y2, b.y2);
    const double inter = std::max(0.0, ix2 - ix1) * std::max(0.0, iy2 - iy1);
    const double uni = a.area() + b.area() - inter;
    return uni > 0 ? inter / uni : 0.0;
}

namespace detail {
inline void require_positive_size(const Box& b, const char* role) {
    if (!(b.width() > 0) || !(b.height() > 0)) {
        throw DataError(std::string("encode_offsets: non-positive size in ") + role + " box " +
                        to_string(b));
    }
}
}  // namespace detail

/**
 * @brief Encode a ground-truth box as regression targets against a default box.
 *
 * tx = (g.cx - d.cx) / d.w, ty = (g.cy - d.cy) / d.h,
 * tw = log(g.w / d.w),       th = log(g.h / d.h).
 *
 * Both boxes must have strictly positive width and height.
 */
inline OffsetVector encode_offsets(const Box& gt, const Box& default_box) {
    detail::require_positive_size(gt, "ground-truth");
    detail::require_positive_size(default_box, "default");
    OffsetVector o;
    o.tx = (gt.center_x() - default_box.center_x()) / default_box.width();
    o.ty = (gt.center_y() - default_box.center_y()) / default_box.height();
    o.tw = std::log(gt.width() / default_box.width());
    o.th = std::log(gt.height() / default_box.height());
    return o;
}

/// Exact algebraic inverse of encode_offsets.
inline Box decode_offsets(const OffsetVector& o, const Box& default_box) {
    const double cx = o.tx * default_box.width() + default_box.center_x();
    const double cy = o.ty * default_box.height() + default_box.center_y();
    const double w = std::exp(o.tw) * default_box.width();
    const double h = std::exp(o.th) * default_box.height();
    return Box::from_center(cx, cy, w, h);
}

}  // namespace lpn
