#pragma once

#include "fusepose/detection.hpp"
#include "fusepose/geometry.hpp"
#include "fusepose/pnp.hpp"

#include <limits>
#include <span>
#include <string>
#include <vector>

namespace fusepose {

// One channel's keypoint prediction plus its Q stochastic (MC-dropout style)
// re-evaluations. Samples share Z and validity layout with the prediction.
struct ChannelPrediction {
    KeypointSet keypoints;
    std::vector<KeypointSet> mc_samples;
    Channel channel = Channel::Rgb;
};

enum class FusionMode { Fused, RgbOnly, EventOnly };

const char* to_string(FusionMode m);
FusionMode fusion_mode_from_string(const std::string& s);

struct FusionResult {
    Pose pose;
    bool degenerate = false;
    FusionMode mode = FusionMode::Fused;
    // decision trail: "gate", "no_gate", "uncertainty", "cmkd_undefined",
    // "forced", "missing_input"; "+fallback" appended when the selected
    // channel came up degenerate and the other one was used instead
    std::string provenance = "gate";
    double cmkd = std::numeric_limits<double>::quiet_NaN();
    double threshold_e = std::numeric_limits<double>::quiet_NaN();
    double u_rgb = std::numeric_limits<double>::quiet_NaN();
    double u_event = std::numeric_limits<double>::quiet_NaN();
    std::vector<int> inliers_rgb;    // landmark ids
    std::vector<int> inliers_event;  // landmark ids
    int frame_index = 0;
};

// Median per-landmark distance between the two channels' predictions,
// computed over landmark ids valid in both. Even counts take the mean of the
// two central order statistics. Throws when no landmark is commonly valid.
double cmkd(const KeypointSet& rgb, const KeypointSet& event);

// Gate threshold: alpha times the bounding-box diagonal.
double cmkd_threshold(const BoundingBox& box, double alpha = 0.2);

enum class UncertaintyAggregation { Mean, Median };

// Per-landmark, per-ordinate sample standard deviation across the Q samples,
// times 3, aggregated over valid landmarks per ordinate, then averaged over
// the two ordinates. Throws for Q < 2 or when no landmark is valid.
double uncertainty(std::span<const KeypointSet> samples,
                   UncertaintyAggregation agg = UncertaintyAggregation::Mean);

struct FusionOptions {
    RansacConfig ransac;
    double alpha = 0.2;
    bool gate_enabled = true;
    UncertaintyAggregation aggregation = UncertaintyAggregation::Mean;
};

// Per-frame arbitration: fuse both channels through cross-modal RANSAC when
// the CMKD gate passes, otherwise solve the lower-uncertainty channel alone.
// Event keypoints are expected to be in RGB pixel space already.
FusionResult estimate_pose(const ChannelPrediction& rgb, const ChannelPrediction& event,
                           const LandmarkSet& landmarks, const BoundingBox& box,
                           const CameraIntrinsics& K, const FusionOptions& opts);

}  // namespace fusepose
