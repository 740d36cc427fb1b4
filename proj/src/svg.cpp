#include "mpqdpg/svg.hpp"

#include "mpqdpg/errors.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace mpqdpg::harness {

Viewport Viewport::fit(std::span<const RolloutRow> rows, double width, double height, double margin) {
    Viewport vp;
    vp.width = width;
    vp.height = height;
    vp.margin = margin;

    double x_lo = -1.0, x_hi = 1.0, y_lo = -1.0, y_hi = 1.0;
    if (!rows.empty()) {
        x_lo = y_lo = std::numeric_limits<double>::infinity();
        x_hi = y_hi = -std::numeric_limits<double>::infinity();
        for (const RolloutRow& r : rows) {
            x_lo = std::min({x_lo, r.x, r.x_d});
            x_hi = std::max({x_hi, r.x, r.x_d});
            y_lo = std::min({y_lo, r.y, r.y_d});
            y_hi = std::max({y_hi, r.y, r.y_d});
        }
    }
    // Degenerate extents (a single point) get a unit box around the point.
    if (x_hi - x_lo <= 0.0) {
        x_lo -= 0.5;
        x_hi += 0.5;
    }
    if (y_hi - y_lo <= 0.0) {
        y_lo -= 0.5;
        y_hi += 0.5;
    }

    const double plot_w = width - 2.0 * margin;
    const double plot_h = height - 2.0 * margin;
    vp.scale = std::min(plot_w / (x_hi - x_lo), plot_h / (y_hi - y_lo));
    vp.x_min = x_lo;
    vp.y_min = y_lo;
    vp.x_offset = 0.5 * (plot_w - (x_hi - x_lo) * vp.scale);
    vp.y_offset = 0.5 * (plot_h - (y_hi - y_lo) * vp.scale);
    return vp;
}

namespace {

template <typename GetX, typename GetY>
void draw_series(std::ostream& os, std::span<const RolloutRow> rows, const Viewport& vp, GetX gx, GetY gy,
                 const char* cls, const char* stroke, const char* dash) {
    if (rows.empty()) return;
    if (rows.size() == 1) {
        os << "<circle class=\"" << cls << "\" cx=\"" << vp.px(gx(rows[0])) << "\" cy=\"" << vp.py(gy(rows[0]))
           << "\" r=\"4\" fill=\"" << stroke << "\"/>\n";
        return;
    }
    os << "<polyline class=\"" << cls << "\" fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.5\"";
    if (dash != nullptr) os << " stroke-dasharray=\"" << dash << "\"";
    os << " points=\"";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        os << (i ? " " : "") << vp.px(gx(rows[i])) << ',' << vp.py(gy(rows[i]));
    }
    os << "\"/>\n";
}

}  // namespace

std::string render_trajectory_svg(std::span<const RolloutRow> rows) {
    const Viewport vp = Viewport::fit(rows);
    const double left = vp.margin;
    const double right = vp.width - vp.margin;
    const double top = vp.margin;
    const double bottom = vp.height - vp.margin;
    const double x_max = vp.x_min + (right - left - 2.0 * vp.x_offset) / vp.scale;
    const double y_max = vp.y_min + (bottom - top - 2.0 * vp.y_offset) / vp.scale;

    std::ostringstream os;
    os << std::setprecision(6);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << vp.width << "\" height=\"" << vp.height
       << "\" viewBox=\"0 0 " << vp.width << ' ' << vp.height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    // Axes frame with end-point tick labels in metres.
    os << "<g class=\"axes\" stroke=\"black\" stroke-width=\"1\" fill=\"none\">\n"
       << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right << "\" y2=\"" << bottom << "\"/>\n"
       << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << left << "\" y2=\"" << top << "\"/>\n"
       << "</g>\n";
    os << "<g class=\"labels\" font-family=\"sans-serif\" font-size=\"12\" fill=\"black\">\n"
       << "<text x=\"" << left + vp.x_offset << "\" y=\"" << bottom + 16 << "\">" << vp.x_min << "</text>\n"
       << "<text x=\"" << right - vp.x_offset << "\" y=\"" << bottom + 16 << "\" text-anchor=\"end\">" << x_max
       << "</text>\n"
       << "<text x=\"" << left - 6 << "\" y=\"" << bottom - vp.y_offset << "\" text-anchor=\"end\">" << vp.y_min
       << "</text>\n"
       << "<text x=\"" << left - 6 << "\" y=\"" << top + vp.y_offset + 12 << "\" text-anchor=\"end\">" << y_max
       << "</text>\n"
       << "<text x=\"" << 0.5 * (left + right) << "\" y=\"" << vp.height - 20 << "\" text-anchor=\"middle\">x (m)</text>\n"
       << "<text x=\"20\" y=\"" << 0.5 * (top + bottom) << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
       << 0.5 * (top + bottom) << ")\">y (m)</text>\n"
       << "</g>\n";

    draw_series(os, rows, vp, [](const RolloutRow& r) { return r.x_d; }, [](const RolloutRow& r) { return r.y_d; },
                "reference", "#d62728", "6,4");
    draw_series(os, rows, vp, [](const RolloutRow& r) { return r.x; }, [](const RolloutRow& r) { return r.y; },
                "actual", "#1f77b4", nullptr);

    os << "<g class=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n"
       << "<line x1=\"" << right - 130 << "\" y1=\"" << top - 30 << "\" x2=\"" << right - 105 << "\" y2=\"" << top - 30
       << "\" stroke=\"#d62728\" stroke-dasharray=\"6,4\"/>\n"
       << "<text x=\"" << right - 100 << "\" y=\"" << top - 26 << "\">reference</text>\n"
       << "<line x1=\"" << right - 130 << "\" y1=\"" << top - 12 << "\" x2=\"" << right - 105 << "\" y2=\"" << top - 12
       << "\" stroke=\"#1f77b4\"/>\n"
       << "<text x=\"" << right - 100 << "\" y=\"" << top - 8 << "\">actual</text>\n"
       << "</g>\n";
    os << "</svg>\n";
    return os.str();
}

void write_trajectory_svg(const std::filesystem::path& csv, const std::filesystem::path& svg) {
    const std::vector<RolloutRow> rows = read_rollout_csv(csv);
    std::ofstream out(svg, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + svg.string());
    out << render_trajectory_svg(rows);
    if (!out) throw IoError("write failed: " + svg.string());
}

}  // namespace mpqdpg::harness
