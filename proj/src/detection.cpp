#include "fusepose/detection.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace fusepose {

double iou(const BoundingBox& a, const BoundingBox& b) {
    if (!a.is_valid() || !b.is_valid()) throw std::invalid_argument("iou: invalid box");
    const double ix = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
    const double iy = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
    if (ix <= 0.0 || iy <= 0.0) return 0.0;
    const double inter = ix * iy;
    return inter / (a.area() + b.area() - inter);
}

Detection smooth(TrackerState& state, const Detection& det, const SmoothParams& params) {
    if (det.score > params.score_min && iou(det.box, state.last_good_box) > params.iou_min) {
        state.last_good_box = det.box;
        state.last_good_score = det.score;
        return det;
    }
    return {state.last_good_box, state.last_good_score};
}

Detection DetectionSmoother::process(const Detection& det) {
    if (!state_) {
        if (seed_score_min_ && det.score < *seed_score_min_) return det;  // defer seeding
        state_ = TrackerState{det.box, det.score};
        return det;
    }
    return smooth(*state_, det, params_);
}

BoundingBox derive_box(const KeypointSet& kps, double tolerance) {
    double x_min = std::numeric_limits<double>::infinity();
    double y_min = std::numeric_limits<double>::infinity();
    double x_max = -std::numeric_limits<double>::infinity();
    double y_max = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (Eigen::Index i = 0; i < kps.count(); ++i) {
        if (!kps.is_valid(i)) continue;
        any = true;
        x_min = std::min(x_min, kps.points(0, i));
        x_max = std::max(x_max, kps.points(0, i));
        y_min = std::min(y_min, kps.points(1, i));
        y_max = std::max(y_max, kps.points(1, i));
    }
    if (!any) throw std::invalid_argument("derive_box: no valid keypoints");
    const double ex = x_max - x_min;
    const double ey = y_max - y_min;
    if (ex <= 0.0 || ey <= 0.0) throw std::invalid_argument("derive_box: zero extent");
    return {x_min - tolerance * ex, y_min - tolerance * ey, x_max + tolerance * ex,
            y_max + tolerance * ey};
}

DetectionMetrics detection_metrics(std::span<const BoundingBox> preds,
                                   std::span<const BoundingBox> gts, double iou_success) {
    if (preds.size() != gts.size()) throw std::invalid_argument("detection_metrics: length mismatch");
    if (preds.empty()) throw std::invalid_argument("detection_metrics: empty input");
    DetectionMetrics m;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double xi = iou(preds[i], gts[i]);
        m.mean_iou += xi;
        m.success_rate += xi > iou_success ? 1.0 : 0.0;
    }
    m.mean_iou /= static_cast<double>(preds.size());
    m.success_rate /= static_cast<double>(preds.size());
    return m;
}

}  // namespace fusepose
