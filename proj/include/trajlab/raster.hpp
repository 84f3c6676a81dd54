#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "trajlab/geometry.hpp"

namespace trajlab {

// Deterministic trajectory rasterization.
//
// The drawing semantics are fully specified here rather than delegated to a
// graphics library, so rendered images are byte-stable across platforms,
// runs, and worker counts, and golden-image tests are possible.

enum class LinePattern : uint8_t { normal, motion_history };
enum class EdgeMode : uint8_t { aliased, antialiased };

const char* to_string(LinePattern p);
const char* to_string(EdgeMode e);
LinePattern line_pattern_from_string(const std::string& s);
EdgeMode edge_mode_from_string(const std::string& s);

struct RenderConfig {
    int image_size = 112;                       // square canvas, pixels
    int thickness = 1;                          // brush side, pixels
    LinePattern pattern = LinePattern::normal;
    EdgeMode edge_mode = EdgeMode::aliased;
    int pad = 2;                                // frame margin, pixels

    void validate() const;
    // "<pattern>_<edge>_<size>_t<thickness>", e.g. "normal_aliased_112_t1".
    std::string condition_tag() const;

    friend bool operator==(const RenderConfig&, const RenderConfig&) = default;
};

struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> pixels; // row-major, 0 = black background

    GrayImage() = default;
    GrayImage(int w, int h) : width(w), height(h),
                              pixels(static_cast<size_t>(w) * h, 0) {}

    uint8_t at(int x, int y) const {
        return pixels[static_cast<size_t>(y) * width + x];
    }
    bool in_bounds(int x, int y) const {
        return x >= 0 && x < width && y >= 0 && y < height;
    }
    // Max-composite write; writes outside the canvas are dropped.
    void stamp_max(int x, int y, uint8_t value) {
        if (!in_bounds(x, y)) return;
        uint8_t& p = pixels[static_cast<size_t>(y) * width + x];
        if (value > p) p = value;
    }

    friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

// Translate so the first point is the origin, then divide every coordinate
// by the joint maximum absolute value over both axes. Output lies in
// [-1,1]^2 with output[0] == (0,0); a stationary input maps to all zeros.
std::vector<Point2> center_and_normalize(std::span<const Point2> points);

// (u,v) -> (c + u*h, c - v*h) with c = (image_size-1)/2 and
// h = (image_size-1)/2 - pad; +v points up on the canvas.
std::vector<Point2> to_pixel_space(std::span<const Point2> normalized,
                                   const RenderConfig& config);

// Gray level of segment `index` out of `count`. Normal is a fixed 255;
// motion history ramps as round(255*(index+1)/count), ending at exactly 255.
uint8_t segment_gray(int index, int count, LinePattern pattern);

// Draw one segment with fractional pixel-space endpoints.
//
// Aliased: endpoints are rounded to the nearest integer pixel (exact .5
// fractions round toward the segment's other endpoint) and the integer line
// between them is walked one pixel per major-axis step, the minor coordinate
// chosen by exact rational rounding. Anti-aliased: a Wu-style coverage walk
// over the fractional line assigns each touched pixel round(gray*coverage).
// Every visited pixel is stamped with a thickness x thickness square brush
// (t=1 the pixel, t=2 the pixel plus right/down neighbors, t=3 the 3x3
// square) and composited with max. Both modes are endpoint-order
// independent.
void draw_segment(GrayImage& canvas, Point2 p0, Point2 p1, int thickness,
                  uint8_t gray, EdgeMode edge_mode);

// Full pipeline: normalize, map to pixel space, draw the T segments in
// chronological order with their pattern gray levels.
GrayImage render(std::span<const Point2> points, const RenderConfig& config);

} // namespace trajlab
