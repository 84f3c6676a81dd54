#include "trajlab/raster.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

namespace trajlab {

const char* to_string(LinePattern p) {
    return p == LinePattern::normal ? "normal" : "motion";
}

const char* to_string(EdgeMode e) {
    return e == EdgeMode::aliased ? "aliased" : "antialiased";
}

LinePattern line_pattern_from_string(const std::string& s) {
    if (s == "normal") return LinePattern::normal;
    if (s == "motion") return LinePattern::motion_history;
    throw std::invalid_argument("unknown line pattern: '" + s + "'");
}

EdgeMode edge_mode_from_string(const std::string& s) {
    if (s == "aliased") return EdgeMode::aliased;
    if (s == "antialiased") return EdgeMode::antialiased;
    throw std::invalid_argument("unknown edge mode: '" + s + "'");
}

void RenderConfig::validate() const {
    if (image_size < 16)
        throw std::invalid_argument("RenderConfig: image_size must be >= 16");
    if (thickness < 1)
        throw std::invalid_argument("RenderConfig: thickness must be >= 1");
    if (pad < (thickness + 1) / 2)
        throw std::invalid_argument("RenderConfig: pad must be >= ceil(thickness/2)");
}

std::string RenderConfig::condition_tag() const {
    return std::string(to_string(pattern)) + "_" + to_string(edge_mode) + "_" +
           std::to_string(image_size) + "_t" + std::to_string(thickness);
}

std::vector<Point2> center_and_normalize(std::span<const Point2> points) {
    if (points.empty())
        throw std::invalid_argument("center_and_normalize: need at least one point");

    std::vector<Point2> out(points.size());
    const Point2 origin = points.front();
    double max_abs = 0.0;
    for (size_t i = 0; i < points.size(); ++i) {
        out[i] = points[i] - origin;
        max_abs = std::max({max_abs, std::abs(out[i].x), std::abs(out[i].y)});
    }
    if (max_abs == 0.0) return out; // stationary: everything stays at (0,0)
    for (auto& p : out) {
        p.x /= max_abs;
        p.y /= max_abs;
    }
    return out;
}

std::vector<Point2> to_pixel_space(std::span<const Point2> normalized,
                                   const RenderConfig& config) {
    const double c = (config.image_size - 1) / 2.0;
    const double h = c - config.pad;
    std::vector<Point2> out(normalized.size());
    for (size_t i = 0; i < normalized.size(); ++i)
        out[i] = {c + normalized[i].x * h, c - normalized[i].y * h};
    return out;
}

uint8_t segment_gray(int index, int count, LinePattern pattern) {
    if (count < 1 || index < 0 || index >= count)
        throw std::invalid_argument("segment_gray: index out of range");
    if (pattern == LinePattern::normal) return 255;
    return static_cast<uint8_t>(std::lround(255.0 * (index + 1) / count));
}

namespace {

struct PixelPos {
    int x = 0;
    int y = 0;
    friend bool operator==(const PixelPos&, const PixelPos&) = default;
};

// Square brush anchored per the fixed convention: offsets lo..lo+t-1 with
// lo = -((t-1)/2), i.e. t=2 extends right/down, odd t is centered.
void stamp_brush(GrayImage& img, PixelPos p, int thickness, uint8_t value) {
    const int lo = -((thickness - 1) / 2);
    const int hi = lo + thickness - 1;
    for (int dy = lo; dy <= hi; ++dy)
        for (int dx = lo; dx <= hi; ++dx)
            img.stamp_max(p.x + dx, p.y + dy, value);
}

// Nearest integer; an exact .5 fraction rounds toward `toward` (toward the
// segment's other endpoint), which makes rasterization commute with
// reflection. Equality falls back to rounding up.
int round_coord_toward(double v, double toward) {
    const double fl = std::floor(v);
    const double frac = v - fl; // exact for |v| < 2^52
    const int base = static_cast<int>(fl);
    if (frac > 0.5) return base + 1;
    if (frac < 0.5) return base;
    if (toward > v) return base + 1;
    if (toward < v) return base;
    return base + 1;
}

long long floor_div(long long a, long long b) { // b > 0
    return a >= 0 ? a / b : -((-a + b - 1) / b);
}

long long ceil_div(long long a, long long b) { // b > 0
    return floor_div(a + b - 1, b);
}

// Exact rational rounding of num/den to the nearest integer with a fixed
// tie direction. den may be negative.
long long round_div_half_up(long long num, long long den) {
    if (den < 0) { num = -num; den = -den; }
    return floor_div(2 * num + den, 2 * den);
}

long long round_div_half_down(long long num, long long den) {
    if (den < 0) { num = -num; den = -den; }
    return ceil_div(2 * num - den, 2 * den);
}

void draw_aliased(GrayImage& img, Point2 p0, Point2 p1, int thickness,
                  uint8_t gray) {
    PixelPos a{round_coord_toward(p0.x, p1.x), round_coord_toward(p0.y, p1.y)};
    PixelPos b{round_coord_toward(p1.x, p0.x), round_coord_toward(p1.y, p0.y)};

    // Canonical walk order; the pixel set below depends only on {a, b}.
    if (std::tie(b.x, b.y) < std::tie(a.x, a.y)) std::swap(a, b);

    const long long dx = b.x - a.x;
    const long long dy = b.y - a.y;
    if (dx == 0 && dy == 0) {
        stamp_brush(img, a, thickness, gray);
        return;
    }

    if (std::abs(dx) >= std::abs(dy)) {
        // x-major; canonical order makes dx > 0. Minor-axis ties round
        // half up, which a vertical-axis reflection leaves untouched.
        for (int m = a.x; m <= b.x; ++m) {
            const long long num = dy * (m - a.x);
            const int y = a.y + static_cast<int>(round_div_half_up(num, dx));
            stamp_brush(img, {m, y}, thickness, gray);
        }
    } else {
        // y-major; x ties round toward the walk's vertical direction so a
        // vertical-axis reflection flips them consistently.
        const int sy = dy > 0 ? 1 : -1;
        for (int n = a.y;; n += sy) {
            const long long num = dx * (n - a.y);
            const long long q = sy > 0 ? round_div_half_up(num, dy)
                                       : round_div_half_down(num, dy);
            stamp_brush(img, {a.x + static_cast<int>(q), n}, thickness, gray);
            if (n == b.y) break;
        }
    }
}

void draw_antialiased(GrayImage& img, Point2 p0, Point2 p1, int thickness,
                      uint8_t gray) {
    PixelPos a{round_coord_toward(p0.x, p1.x), round_coord_toward(p0.y, p1.y)};
    PixelPos b{round_coord_toward(p1.x, p0.x), round_coord_toward(p1.y, p0.y)};

    // Canonical ordering fixes which endpoint anchors the interpolation, so
    // both argument orders produce bit-identical coverage.
    if (std::tie(b.x, b.y, p1.x, p1.y) < std::tie(a.x, a.y, p0.x, p0.y)) {
        std::swap(a, b);
        std::swap(p0, p1);
    }

    auto pix = [&](int x, int y, double coverage) {
        const auto v = std::lround(gray * coverage);
        if (v > 0) stamp_brush(img, {x, y}, thickness, static_cast<uint8_t>(v));
    };

    if (a == b) {
        pix(a.x, a.y, 1.0);
        return;
    }

    const double fdx = p1.x - p0.x;
    const double fdy = p1.y - p0.y;

    if (std::abs(fdx) >= std::abs(fdy)) {
        // x-major: one column per integer x, coverage split across the two
        // rows straddling the true line. f == 0 degenerates to the aliased
        // pixel with full coverage.
        for (int m = a.x; m <= b.x; ++m) {
            const double t = std::clamp((m - p0.x) / fdx, 0.0, 1.0);
            const double y = p0.y + t * fdy;
            const double yf = std::floor(y);
            const double f = y - yf;
            const int yi = static_cast<int>(yf);
            pix(m, yi, 1.0 - f);
            if (f > 0.0) pix(m, yi + 1, f);
        }
    } else {
        const int sy = b.y > a.y ? 1 : -1;
        for (int n = a.y;; n += sy) {
            const double t = std::clamp((n - p0.y) / fdy, 0.0, 1.0);
            const double x = p0.x + t * fdx;
            const double xf = std::floor(x);
            const double f = x - xf;
            const int xi = static_cast<int>(xf);
            pix(xi, n, 1.0 - f);
            if (f > 0.0) pix(xi + 1, n, f);
            if (n == b.y) break;
        }
    }
}

} // namespace

void draw_segment(GrayImage& canvas, Point2 p0, Point2 p1, int thickness,
                  uint8_t gray, EdgeMode edge_mode) {
    if (edge_mode == EdgeMode::aliased)
        draw_aliased(canvas, p0, p1, thickness, gray);
    else
        draw_antialiased(canvas, p0, p1, thickness, gray);
}

GrayImage render(std::span<const Point2> points, const RenderConfig& config) {
    config.validate();
    if (points.size() < 2)
        throw std::invalid_argument("render: need at least two points");

    const auto normalized = center_and_normalize(points);
    const auto px = to_pixel_space(normalized, config);

    GrayImage canvas(config.image_size, config.image_size);
    const int segment_count = static_cast<int>(points.size()) - 1;
    for (int i = 0; i < segment_count; ++i)
        draw_segment(canvas, px[i], px[i + 1], config.thickness,
                     segment_gray(i, segment_count, config.pattern),
                     config.edge_mode);
    return canvas;
}

} // namespace trajlab
