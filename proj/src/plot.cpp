#include "fusepose/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace fusepose {

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

struct Panel {
    double top;
    double height;
    double v_max;

    double y(double v) const { return top + height - std::min(v, v_max) / v_max * height; }
};

void draw_bands(std::ostream& os, const PlotLayout& layout, const Panel& panel, int n_frames,
                std::span<const FrameRange> ranges, const char* cls, const char* color) {
    for (const FrameRange& r : ranges) {
        const double x0 = layout.x(r.first, n_frames);
        const double x1 = layout.x(r.last, n_frames);
        os << "  <rect class=\"band " << cls << "\" x=\"" << num(x0) << "\" y=\"" << num(panel.top)
           << "\" width=\"" << num(x1 - x0) << "\" height=\"" << num(panel.height) << "\" fill=\""
           << color << "\" opacity=\"0.45\"/>\n";
    }
}

void draw_series(std::ostream& os, const PlotLayout& layout, const Panel& panel, int n_frames,
                 std::span<const ErrorRow> rows, double (*pick)(const ErrorRow&), const char* cls,
                 const char* color) {
    os << "  <polyline class=\"" << cls << "\" fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"1\" points=\"";
    for (const ErrorRow& row : rows) {
        os << num(layout.x(row.frame, n_frames)) << ',' << num(panel.y(pick(row))) << ' ';
    }
    os << "\"/>\n";
}

void draw_degenerate(std::ostream& os, const PlotLayout& layout, const Panel& panel, int n_frames,
                     std::span<const ErrorRow> rows, double (*pick)(const ErrorRow&)) {
    for (const ErrorRow& row : rows) {
        if (!row.degenerate) continue;
        const double cx = layout.x(row.frame, n_frames);
        const double cy = panel.y(pick(row));
        os << "  <path class=\"degenerate\" stroke=\"#cc0000\" stroke-width=\"1.5\" d=\"M "
           << num(cx - 3) << ' ' << num(cy - 3) << " L " << num(cx + 3) << ' ' << num(cy + 3)
           << " M " << num(cx - 3) << ' ' << num(cy + 3) << " L " << num(cx + 3) << ' '
           << num(cy - 3) << "\"/>\n";
    }
}

void draw_axes(std::ostream& os, const PlotLayout& layout, const Panel& panel, const char* label,
               const char* unit) {
    os << "  <rect x=\"" << num(layout.margin_left) << "\" y=\"" << num(panel.top) << "\" width=\""
       << num(layout.panel_width) << "\" height=\"" << num(panel.height)
       << "\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n";
    os << "  <text x=\"" << num(layout.margin_left - 50) << "\" y=\"" << num(panel.top + 14)
       << "\" font-size=\"12\">" << label << "</text>\n";
    os << "  <text x=\"" << num(layout.margin_left - 50) << "\" y=\"" << num(panel.top + 28)
       << "\" font-size=\"10\">max " << unit << "</text>\n";
}

}  // namespace

std::string render_error_plot_svg(const SequenceMeta& meta, std::span<const ErrorRow> rows,
                                  const PlotLayout& layout) {
    const int n_frames = meta.n_frames;

    double omega_max = 1e-6, theta_max = 1e-6, u_max = 1e-6;
    for (const ErrorRow& row : rows) {
        omega_max = std::max(omega_max, row.omega);
        theta_max = std::max(theta_max, row.theta);
        if (row.u_rgb) u_max = std::max(u_max, *row.u_rgb);
        if (row.u_event) u_max = std::max(u_max, *row.u_event);
    }
    omega_max *= 1.05;
    theta_max *= 1.05;
    u_max *= 1.05;

    const Panel omega_panel{layout.margin_top, layout.panel_height, omega_max};
    const Panel theta_panel{layout.margin_top + layout.panel_height + layout.panel_gap,
                            layout.panel_height, theta_max};
    const Panel u_panel = {theta_panel.top, theta_panel.height, u_max};

    const double total_w = layout.margin_left + layout.panel_width + 40.0;
    const double total_h = theta_panel.top + layout.panel_height + 50.0;

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(total_w) << "\" height=\""
       << num(total_h) << "\" viewBox=\"0 0 " << num(total_w) << ' ' << num(total_h) << "\">\n";
    os << "  <title>" << meta.name << "</title>\n";

    draw_bands(os, layout, omega_panel, n_frames, meta.harsh_ranges, "harsh", "#ffccd9");
    draw_bands(os, layout, omega_panel, n_frames, meta.low_motion_ranges, "low_motion", "#d9c2f0");
    draw_bands(os, layout, theta_panel, n_frames, meta.harsh_ranges, "harsh", "#ffccd9");
    draw_bands(os, layout, theta_panel, n_frames, meta.low_motion_ranges, "low_motion", "#d9c2f0");

    draw_series(os, layout, omega_panel, n_frames, rows,
                [](const ErrorRow& r) { return r.omega; }, "omega", "#1f77b4");
    draw_degenerate(os, layout, omega_panel, n_frames, rows,
                    [](const ErrorRow& r) { return r.omega; });

    draw_series(os, layout, theta_panel, n_frames, rows,
                [](const ErrorRow& r) { return r.theta; }, "theta", "#1f77b4");
    draw_degenerate(os, layout, theta_panel, n_frames, rows,
                    [](const ErrorRow& r) { return r.theta; });

    const bool any_u_rgb = std::any_of(rows.begin(), rows.end(),
                                       [](const ErrorRow& r) { return r.u_rgb.has_value(); });
    const bool any_u_event = std::any_of(rows.begin(), rows.end(),
                                         [](const ErrorRow& r) { return r.u_event.has_value(); });
    if (any_u_rgb) {
        draw_series(os, layout, u_panel, n_frames, rows,
                    [](const ErrorRow& r) { return r.u_rgb.value_or(0.0); }, "u_rgb", "#ff7f0e");
    }
    if (any_u_event) {
        draw_series(os, layout, u_panel, n_frames, rows,
                    [](const ErrorRow& r) { return r.u_event.value_or(0.0); }, "u_event", "#2ca02c");
    }

    draw_axes(os, layout, omega_panel, "omega [m]", num(omega_max).c_str());
    draw_axes(os, layout, theta_panel, "theta [deg]", num(theta_max).c_str());

    os << "</svg>\n";
    return os.str();
}

}  // namespace fusepose
