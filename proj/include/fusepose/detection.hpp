#pragma once

#include "fusepose/geometry.hpp"

#include <optional>
#include <span>

namespace fusepose {

struct BoundingBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    double area() const { return width() * height(); }
    double diagonal() const { return std::hypot(width(), height()); }
    bool is_valid() const { return x_min < x_max && y_min < y_max; }

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct Detection {
    BoundingBox box;
    double score = 0.0;  // in [0, 1]
};

struct TrackerState {
    BoundingBox last_good_box;
    double last_good_score = 0.0;
};

// Strict thresholds from the detection-smoothing recurrence.
struct SmoothParams {
    double score_min = 0.98;
    double iou_min = 0.6;
};

// Intersection-over-union in [0, 1]; 0 for disjoint boxes.
double iou(const BoundingBox& a, const BoundingBox& b);

// One smoothing step: a detection qualifies when score > score_min AND
// IoU with the last good box > iou_min; otherwise the last good detection is
// emitted and the state left untouched.
Detection smooth(TrackerState& state, const Detection& det, const SmoothParams& params = {});

// Sequence-level wrapper. By default the tracker seeds unconditionally from
// the first detection; an optional minimum seed score defers initialization
// (streams that begin in low motion would otherwise lock onto a bad box).
class DetectionSmoother {
public:
    explicit DetectionSmoother(SmoothParams params = {},
                               std::optional<double> seed_score_min = std::nullopt)
        : params_(params), seed_score_min_(seed_score_min) {}

    Detection process(const Detection& det);

    bool initialized() const { return state_.has_value(); }
    const std::optional<TrackerState>& state() const { return state_; }

private:
    SmoothParams params_;
    std::optional<double> seed_score_min_;
    std::optional<TrackerState> state_;
};

// Axis-aligned min/max box around the valid keypoints, expanded by
// tolerance * extent on every side. Throws when the extent is zero.
BoundingBox derive_box(const KeypointSet& kps, double tolerance = 0.10);

struct DetectionMetrics {
    double mean_iou = 0.0;      // xi-bar
    double success_rate = 0.0;  // Xi, fraction with IoU strictly above the cutoff
};

DetectionMetrics detection_metrics(std::span<const BoundingBox> preds,
                                   std::span<const BoundingBox> gts, double iou_success = 0.5);

}  // namespace fusepose
