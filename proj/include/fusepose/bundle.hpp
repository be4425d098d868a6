#pragma once

#include "fusepose/detection.hpp"
#include "fusepose/event.hpp"
#include "fusepose/fusion.hpp"
#include "fusepose/geometry.hpp"
#include "fusepose/simkit.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fusepose {

// Sequence naming follows <object>-<trajectory_index>-<distance>.
struct SequenceMeta {
    std::string name;
    double fps = 30.0;
    int n_frames = 0;
    int width = 800;
    int height = 720;
    std::vector<FrameRange> harsh_ranges;
    std::vector<FrameRange> low_motion_ranges;
    int z = 0;
    std::string object_id;
};

void validate(const SequenceMeta& meta);  // name grammar, range bounds

struct FrameLabel {
    int frame = 0;  // 1-based
    Pose pose_gt;
    KeypointSet keypoints_gt;
    BoundingBox box_gt;
    bool harsh = false;
    bool low_motion = false;
};

// On-disk layout:
//   meta.json intrinsics.json warp.json landmarks.json labels.jsonl
//   events.bin [predictions_rgb.jsonl predictions_event.jsonl]
//   [detections.csv] [scenario.json]
struct SequenceBundle {
    std::filesystem::path dir;
    SequenceMeta meta;
    CameraIntrinsics intrinsics;
    AffineWarp warp;
    LandmarkSet landmarks;
    std::vector<FrameLabel> labels;
    bool has_events = false;
    bool has_predictions = false;
    bool has_detections = false;
    std::optional<ScenarioConfig> scenario;
};

SequenceBundle load_bundle(const std::filesystem::path& dir);

struct WriteBundleOptions {
    bool with_events = true;
    bool with_predictions = true;
    bool with_detections = true;
};

// Materializes a simkit scenario as a bundle; synthetic and real data share
// this reader path.
void write_bundle(const std::filesystem::path& dir, const Scenario& scenario,
                  const WriteBundleOptions& opts = {});

EventBuffer load_events(const SequenceBundle& bundle);
std::vector<ChannelPrediction> load_predictions(const SequenceBundle& bundle, Channel channel);
std::vector<Detection> load_detections(const SequenceBundle& bundle);

// One frame's simkit prediction in the channel's own pixel space; this is
// exactly what write_bundle materializes, so file-backed and on-the-fly runs
// agree.
ChannelPrediction simulate_bundle_prediction(const ScenarioConfig& cfg, const FrameLabel& label,
                                             Channel channel);

void write_detections_csv(const std::filesystem::path& path, std::span<const Detection> detections);
std::vector<Detection> read_detections_csv(const std::filesystem::path& path);

// JSON round-trips for the shared value types.
std::string to_json_string(const CameraIntrinsics& k);
CameraIntrinsics intrinsics_from_json_string(const std::string& s);
std::string to_json_string(const AffineWarp& w);
AffineWarp warp_from_json_string(const std::string& s);
std::string to_json_string(const SequenceMeta& meta);
SequenceMeta meta_from_json_string(const std::string& s);
std::string to_json_string(const ScenarioConfig& cfg);
ScenarioConfig scenario_from_json_string(const std::string& s);

// Consumer-side replay: per frame n, the event batch of the window
// (tau_{n-1}, tau_n] with tau_n = round(n * 1e6 / fps), the accumulated event
// frame, and the frame's label.
struct ReplayFrame {
    int frame = 0;  // 1-based
    std::span<const Event> batch;
    EventFrame event_frame;
    const FrameLabel* label = nullptr;
};

class Replay {
public:
    Replay(const SequenceMeta& meta, const EventBuffer& events, std::span<const FrameLabel> labels,
           PolarityMode mode = PolarityMode::Count);

    bool next(ReplayFrame& out);
    // events with timestamps past the label range, ignored with this count
    std::size_t trailing_events() const { return trailing_events_; }
    std::uint64_t window_end_us(int frame) const;

private:
    const SequenceMeta& meta_;
    const EventBuffer& events_;
    std::span<const FrameLabel> labels_;
    PolarityMode mode_;
    int next_frame_ = 1;
    std::size_t trailing_events_ = 0;
};

}  // namespace fusepose
