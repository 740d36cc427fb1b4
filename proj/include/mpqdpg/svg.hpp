#pragma once

#include "mpqdpg/harness.hpp"

#include <filesystem>
#include <span>
#include <string>

namespace mpqdpg::harness {

/// Uniform-scale map from world metres to SVG pixels (y axis flipped).
struct Viewport {
    double width = 640.0;
    double height = 640.0;
    double margin = 60.0;
    double x_min = -1.0;
    double y_min = -1.0;
    double scale = 1.0;     // px per metre, same on both axes
    double x_offset = 0.0;  // centring slack, px
    double y_offset = 0.0;

    /// Fits the bounding box of reference and actual paths; an empty
    /// rollout gets a [-1, 1] box.
    static Viewport fit(std::span<const RolloutRow> rows, double width = 640.0, double height = 640.0,
                        double margin = 60.0);

    double px(double x) const { return margin + x_offset + (x - x_min) * scale; }
    double py(double y) const { return height - margin - y_offset - (y - y_min) * scale; }
};

/// Reference (dashed) and actual (solid) paths with axes and legend. A
/// single-sample series is drawn as a circle marker.
std::string render_trajectory_svg(std::span<const RolloutRow> rows);

void write_trajectory_svg(const std::filesystem::path& csv, const std::filesystem::path& svg);

}  // namespace mpqdpg::harness
