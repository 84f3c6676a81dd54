#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

#include "trajlab/eval.hpp"

namespace trajlab {

// 4-panel heatmap in the figures' layout: one panel per pattern/edge
// combination, image size on the x axis, thickness on the y axis, annotated
// medians, and a shared diverging colorbar. Pure text output with fixed
// number formatting, so reports diff cleanly.

namespace {

struct Rgb {
    int r, g, b;
};

// Diverging anchors; AUC maps high values to blue, MAE maps high values to
// red (flip = true).
constexpr Rgb kRed{190, 56, 39};
constexpr Rgb kGray{220, 220, 220};
constexpr Rgb kBlue{79, 96, 190};

Rgb lerp(Rgb a, Rgb b, double t) {
    auto mix = [&](int x, int y) {
        return static_cast<int>(std::lround(x + (y - x) * t));
    };
    return {mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
}

Rgb value_color(double v, double lo, double hi, bool flip) {
    double t = (v - lo) / (hi - lo);
    t = std::clamp(t, 0.0, 1.0);
    if (flip) t = 1.0 - t;
    return t < 0.5 ? lerp(kRed, kGray, 2.0 * t) : lerp(kGray, kBlue, 2.0 * t - 1.0);
}

std::string fill(Rgb c) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "rgb(%d,%d,%d)", c.r, c.g, c.b);
    return buf;
}

std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

} // namespace

std::string heatmap_svg(const SweepResult& sweep_result) {
    const bool is_auc = sweep_result.task == Task::classification;
    const double lo = is_auc ? 0.50 : 0.04;
    const double hi = is_auc ? 0.95 : 0.10;
    const double mid = (lo + hi) / 2.0;
    const bool flip = !is_auc;
    const char* metric = is_auc ? "AUC" : "MAE";

    std::vector<int> sizes, thicknesses;
    std::map<std::pair<int, int>, std::map<std::pair<int, int>, double>> panels;
    for (const auto& cell : sweep_result.cells) {
        const int pi = cell.condition.pattern == LinePattern::normal ? 0 : 1;
        const int ei = cell.condition.edge_mode == EdgeMode::aliased ? 0 : 1;
        panels[{pi, ei}][{cell.condition.image_size, cell.condition.thickness}] =
            cell.median_value;
        if (std::find(sizes.begin(), sizes.end(), cell.condition.image_size) == sizes.end())
            sizes.push_back(cell.condition.image_size);
        if (std::find(thicknesses.begin(), thicknesses.end(), cell.condition.thickness) ==
            thicknesses.end())
            thicknesses.push_back(cell.condition.thickness);
    }
    std::sort(sizes.begin(), sizes.end());
    std::sort(thicknesses.begin(), thicknesses.end());

    const int cell_px = 64;
    const int pw = cell_px * static_cast<int>(sizes.size());
    const int ph = cell_px * static_cast<int>(thicknesses.size());
    const int left = 80, top = 50, hgap = 70, vgap = 70;
    const int bar_w = 22, bar_gap = 45;
    const int width = left + 2 * pw + hgap + bar_gap + bar_w + 70;
    const int height = top + 2 * ph + vgap + 60;

    const char* panel_titles[2][2] = {{"(A) Normal Aliased", "(B) Normal Antialiased"},
                                      {"(C) Motion Aliased", "(D) Motion Antialiased"}};

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " " << height
        << "\">\n"
        << "<style>\n"
        << "  text { font-family: Helvetica, Arial, sans-serif; fill: #000; }\n"
        << "  .title { font-size: 14px; font-weight: bold; }\n"
        << "  .tick { font-size: 12px; }\n"
        << "  .cell { font-size: 13px; }\n"
        << "</style>\n"
        << "<rect width=\"" << width << "\" height=\"" << height
        << "\" fill=\"white\"/>\n";

    for (int pi = 0; pi < 2; ++pi) {
        for (int ei = 0; ei < 2; ++ei) {
            const auto it = panels.find({pi, ei});
            if (it == panels.end()) continue;
            const int px0 = left + ei * (pw + hgap);
            const int py0 = top + pi * (ph + vgap);

            svg << "<text class=\"title\" x=\"" << (px0 + pw / 2) << "\" y=\""
                << (py0 - 12) << "\" text-anchor=\"middle\">" << panel_titles[pi][ei]
                << "</text>\n";

            for (size_t si = 0; si < sizes.size(); ++si) {
                for (size_t ti = 0; ti < thicknesses.size(); ++ti) {
                    const auto vit = it->second.find({sizes[si], thicknesses[ti]});
                    if (vit == it->second.end()) continue;
                    const double v = vit->second;
                    // Thickness 1 sits on the bottom row, matching the figures.
                    const int cx = px0 + static_cast<int>(si) * cell_px;
                    const int cy = py0 + static_cast<int>(thicknesses.size() - 1 - ti) * cell_px;
                    svg << "<rect x=\"" << cx << "\" y=\"" << cy << "\" width=\""
                        << cell_px << "\" height=\"" << cell_px << "\" fill=\""
                        << fill(value_color(v, lo, hi, flip))
                        << "\" stroke=\"white\" stroke-width=\"1\"/>\n"
                        << "<text class=\"cell\" x=\"" << (cx + cell_px / 2) << "\" y=\""
                        << (cy + cell_px / 2 + 5) << "\" text-anchor=\"middle\">"
                        << fmt2(v) << "</text>\n";
                }
            }

            for (size_t si = 0; si < sizes.size(); ++si)
                svg << "<text class=\"tick\" x=\""
                    << (px0 + static_cast<int>(si) * cell_px + cell_px / 2) << "\" y=\""
                    << (py0 + ph + 18) << "\" text-anchor=\"middle\">" << sizes[si]
                    << "</text>\n";
            for (size_t ti = 0; ti < thicknesses.size(); ++ti)
                svg << "<text class=\"tick\" x=\"" << (px0 - 10) << "\" y=\""
                    << (py0 + static_cast<int>(thicknesses.size() - 1 - ti) * cell_px +
                        cell_px / 2 + 4)
                    << "\" text-anchor=\"end\">" << thicknesses[ti] << "</text>\n";

            svg << "<text class=\"tick\" x=\"" << (px0 + pw / 2) << "\" y=\""
                << (py0 + ph + 38) << "\" text-anchor=\"middle\">Image Size</text>\n"
                << "<text class=\"tick\" x=\"" << (px0 - 42) << "\" y=\""
                << (py0 + ph / 2)
                << "\" text-anchor=\"middle\" transform=\"rotate(-90 " << (px0 - 42)
                << " " << (py0 + ph / 2) << ")\">Thickness</text>\n";
        }
    }

    // Colorbar: gradient from the low-value color (bottom) to high (top).
    const int bx = left + 2 * pw + hgap + bar_gap;
    const int by = top + ph / 2;
    const int bh = ph + vgap;
    svg << "<defs><linearGradient id=\"cbar\" x1=\"0\" y1=\"1\" x2=\"0\" y2=\"0\">\n"
        << "  <stop offset=\"0\" stop-color=\"" << fill(value_color(lo, lo, hi, flip))
        << "\"/>\n"
        << "  <stop offset=\"0.5\" stop-color=\"" << fill(value_color(mid, lo, hi, flip))
        << "\"/>\n"
        << "  <stop offset=\"1\" stop-color=\"" << fill(value_color(hi, lo, hi, flip))
        << "\"/>\n"
        << "</linearGradient></defs>\n"
        << "<rect x=\"" << bx << "\" y=\"" << by << "\" width=\"" << bar_w
        << "\" height=\"" << bh << "\" fill=\"url(#cbar)\" stroke=\"black\" "
        << "stroke-width=\"0.5\"/>\n";
    const double bar_ticks[3] = {lo, mid, hi};
    for (const double tv : bar_ticks) {
        const int ty = by + static_cast<int>(std::lround((1.0 - (tv - lo) / (hi - lo)) * bh));
        svg << "<line x1=\"" << (bx + bar_w) << "\" y1=\"" << ty << "\" x2=\""
            << (bx + bar_w + 4) << "\" y2=\"" << ty << "\" stroke=\"black\"/>\n"
            << "<text class=\"tick\" x=\"" << (bx + bar_w + 8) << "\" y=\"" << (ty + 4)
            << "\">" << fmt2(tv) << "</text>\n";
    }
    svg << "<text class=\"tick\" x=\"" << (bx + bar_w / 2) << "\" y=\"" << (by - 10)
        << "\" text-anchor=\"middle\">" << metric << "</text>\n";

    svg << "</svg>\n";
    return svg.str();
}

} // namespace trajlab
