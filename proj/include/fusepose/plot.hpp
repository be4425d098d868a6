#pragma once

#include "fusepose/bundle.hpp"
#include "fusepose/pipeline.hpp"

#include <span>
#include <string>

namespace fusepose {

// Fixed plot geometry, exposed so tests can recompute the axis transform.
struct PlotLayout {
    double margin_left = 60.0;
    double margin_top = 40.0;
    double panel_width = 800.0;
    double panel_height = 180.0;
    double panel_gap = 60.0;

    double x(int frame, int n_frames) const {
        if (n_frames <= 1) return margin_left + panel_width / 2.0;
        return margin_left + (frame - 1) * panel_width / (n_frames - 1);
    }
};

// Two stacked panels (omega, theta) over frame index with harsh bands in
// light pink and low-motion bands in purple, a distinct glyph on degenerate
// frames, and the per-channel uncertainty traces overlaid on the theta panel.
std::string render_error_plot_svg(const SequenceMeta& meta, std::span<const ErrorRow> rows,
                                  const PlotLayout& layout = {});

}  // namespace fusepose
