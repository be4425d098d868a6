#pragma once

#include "fusepose/detection.hpp"
#include "fusepose/event.hpp"
#include "fusepose/fusion.hpp"
#include "fusepose/geometry.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fusepose {

// Parameterizes a channel's failure behavior: gross keypoint displacement and
// dropout on corrupt frames, dispersion of the stochastic samples otherwise.
struct NoiseModel {
    double base_sigma = 0.7;               // px, every frame
    double corrupt_fraction = 0.85;        // fraction of keypoints displaced on corrupt frames
    double corrupt_offset = 150.0;         // px displacement magnitude
    bool clustered = false;                // all displaced keypoints share one direction
    double mc_sigma_clean = 1.0;           // px, sample spread on clean frames
    double mc_sigma_corrupt = 6.0;         // px, sample spread on corrupt frames
    double invalid_fraction_corrupt = 0.25;  // fraction flagged invalid on corrupt frames
};

enum class Distance { Close, Far };

const char* to_string(Distance d);
Distance distance_from_string(const std::string& s);

// 1-based inclusive frame interval.
struct FrameRange {
    int first = 0;
    int last = -1;

    bool contains(int frame) const { return frame >= first && frame <= last; }
};

bool in_ranges(std::span<const FrameRange> ranges, int frame);

// Scripted detector stand-in: jittered ground-truth boxes with a score
// collapse and box teleport during low-motion windows.
struct DetectionScript {
    double jitter_px = 2.0;
    double clean_score = 0.995;
    double collapse_score = 0.30;
    double collapse_offset_px = 160.0;
    double collapse_shrink = 0.5;
};

struct EventSynthConfig {
    bool enabled = true;
    double contrast_threshold = 0.25;  // log-intensity units
    int bar_half_width = 10;           // moving-bar pattern
    double bar_intensity = 4.0;        // background is 1.0
    double low_motion_speed = 0.05;    // px/frame while a low-motion window is active
    double speed = 6.0;                // px/frame otherwise
};

struct ScenarioConfig {
    std::string name = "synth-1-close";
    std::string object_id = "synth";
    int z = 18;
    bool symmetric_landmarks = false;  // mirror layout, SOHO-style ambiguity
    double object_extent = 0.30;       // meters
    Distance distance = Distance::Close;
    double close_m = 0.8;
    double far_m = 1.2;
    double fps = 30.0;
    int n_frames = 300;
    double rotation_rate = 1.0;  // degrees per frame
    std::vector<FrameRange> harsh_ranges;       // corrupt the RGB channel
    std::vector<FrameRange> low_motion_ranges;  // corrupt the event channel
    NoiseModel rgb_noise;
    NoiseModel event_noise;
    std::uint64_t seed = 0;
    int width = 800;
    int height = 720;
    CameraIntrinsics intrinsics{800.0, 800.0, 400.0, 360.0};
    AffineWarp warp;  // event pixels -> RGB pixels
    DetectionScript detection;
    EventSynthConfig events;
    int q = 32;  // MC samples per channel

    double distance_m() const { return distance == Distance::Close ? close_m : far_m; }
};

struct FrameTruth {
    int frame_index = 0;  // 1-based
    Pose pose_gt;
    KeypointSet keypoints_gt;  // RGB pixel space
    BoundingBox box_gt;
    bool harsh = false;
    bool low_motion = false;
};

struct Scenario {
    ScenarioConfig config;
    LandmarkSet landmarks;
    std::vector<FrameTruth> frames;
};

// Deterministic trajectory: the object spins about its y axis at
// rotation_rate, stepping 20 degrees about x after each full revolution, at a
// fixed stand-off distance. Labels are produced by projection and box
// derivation; condition tags mark harsh / low-motion membership.
Scenario generate_scenario(const ScenarioConfig& cfg);

// Z points spread through a box of the given extent, regenerated until
// comfortably non-coplanar.
LandmarkSet generate_landmarks(int z, double extent, std::uint64_t seed);

// Layout with a mirror plane (x -> -x): every point on one side has an exact
// twin on the other, so projections are ambiguous under the half-turn about
// the symmetry axis. Z must be even.
LandmarkSet generate_symmetric_landmarks(int z, double extent, std::uint64_t seed);

enum class FrameCondition { Clean, Corrupt };

// Keypoint-regressor stand-in. Clean frames add base noise only; corrupt
// frames displace a fraction of keypoints (optionally along one shared
// direction), drop some, and widen the MC sample spread.
ChannelPrediction simulate_prediction(const KeypointSet& truth, FrameCondition condition,
                                      const NoiseModel& model, std::uint64_t seed, int q = 32,
                                      Channel channel = Channel::Rgb);

// Threshold-crossing event synthesis over log-intensity, linear interpolation
// between frames. Frame k is placed at t = k * (1e6 / fps) microseconds.
EventBuffer synthesize_events(std::span<const Eigen::MatrixXd> intensity_frames,
                              double contrast_threshold, double fps);

// Streaming form of the same model, for long sequences that should not be
// materialized as a frame stack.
class EventSynthesizer {
public:
    EventSynthesizer(double contrast_threshold, double fps);

    void start(const Eigen::MatrixXd& first_frame);
    // Emits the events of the segment between the previous frame and this one.
    void step(const Eigen::MatrixXd& frame, std::vector<Event>& out);
    bool started() const { return started_; }

private:
    double threshold_;
    double dt_us_;
    int frame_count_ = 0;
    bool started_ = false;
    Eigen::MatrixXd prev_log_;
    Eigen::MatrixXd ref_;
};

// Seeded global additions (uniform coordinates, timestamps interpolated over
// the buffer span) and Bernoulli removals.
EventBuffer event_noise(const EventBuffer& buffer, double add_rate, double remove_rate,
                        std::uint64_t seed);

struct Quad {
    std::array<Eigen::Vector2d, 4> corners;

    bool contains(const Eigen::Vector2d& p) const;
};

class Rng;
Quad random_quad(int width, int height, Rng& rng);

// EventNoise restricted to the quadrilateral's interior.
EventBuffer event_patch_noise(const EventBuffer& buffer, const Quad& quad, double add_rate,
                              double remove_rate, std::uint64_t seed);

// Built-in intensity pattern: a bright vertical bar sweeping horizontally,
// near-stationary during low-motion frames.
Eigen::MatrixXd moving_bar_frame(int width, int height, double bar_position,
                                 const EventSynthConfig& cfg);
double moving_bar_position(const ScenarioConfig& cfg, int frame);  // frame is 0-based here

std::vector<Detection> simulate_detections(const Scenario& scenario, std::uint64_t seed);

}  // namespace fusepose
