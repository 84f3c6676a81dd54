#include "trajlab/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace trajlab {

double path_length(std::span<const Point2> points) {
    if (points.empty())
        throw std::invalid_argument("path_length: need at least one point");
    double total = 0.0;
    for (size_t i = 1; i < points.size(); ++i)
        total += std::hypot(points[i].x - points[i - 1].x,
                            points[i].y - points[i - 1].y);
    return total;
}

double displacement(std::span<const Point2> points) {
    if (points.empty())
        throw std::invalid_argument("displacement: need at least one point");
    return std::hypot(points.back().x - points.front().x,
                      points.back().y - points.front().y);
}

namespace {

// Exact collinear-monotone detection: every nonzero segment is a positive
// multiple of the first one (zero cross product, positive dot product).
// Repeated displacement vectors compare bitwise, so persistent straight
// walks land here.
bool collinear_monotone(std::span<const Point2> points) {
    double rx = 0.0, ry = 0.0;
    for (size_t i = 1; i < points.size(); ++i) {
        const double dx = points[i].x - points[i - 1].x;
        const double dy = points[i].y - points[i - 1].y;
        if (dx == 0.0 && dy == 0.0) continue;
        if (rx == 0.0 && ry == 0.0) {
            rx = dx;
            ry = dy;
            continue;
        }
        if (dx * ry != dy * rx) return false;
        if (dx * rx + dy * ry <= 0.0) return false;
    }
    return true;
}

} // namespace

double directionality(std::span<const Point2> points) {
    if (points.size() < 2)
        throw std::invalid_argument("directionality: need at least two points");
    const double l = path_length(points);
    if (l == 0.0) return 0.0;
    if (collinear_monotone(points)) return 1.0; // d == l up to rounding
    const double d = displacement(points);
    // d <= l up to rounding; the clamp keeps the ratio inside [0,1].
    return std::min(d / l, 1.0);
}

} // namespace trajlab
