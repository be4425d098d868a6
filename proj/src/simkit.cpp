#include "fusepose/simkit.hpp"

#include "fusepose/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fusepose {

namespace {

constexpr std::uint64_t kLandmarkStream = 0x4c414e44;   // "LAND"
constexpr std::uint64_t kDetectionStream = 0x44455443;  // "DETC"

constexpr double kDegToRad = std::numbers::pi / 180.0;

}  // namespace

const char* to_string(Distance d) { return d == Distance::Close ? "close" : "far"; }

Distance distance_from_string(const std::string& s) {
    if (s == "close") return Distance::Close;
    if (s == "far") return Distance::Far;
    throw std::invalid_argument("unknown distance: " + s);
}

bool in_ranges(std::span<const FrameRange> ranges, int frame) {
    for (const FrameRange& r : ranges) {
        if (r.contains(frame)) return true;
    }
    return false;
}

LandmarkSet generate_landmarks(int z, double extent, std::uint64_t seed) {
    if (z < 4) throw std::invalid_argument("generate_landmarks: need Z >= 4");
    if (extent <= 0.0) throw std::invalid_argument("generate_landmarks: non-positive extent");

    for (std::uint64_t attempt = 0;; ++attempt) {
        Rng rng(derive_seed(seed, kLandmarkStream, attempt));
        LandmarkSet set;
        set.points.resize(3, z);
        for (int i = 0; i < z; ++i) {
            for (int a = 0; a < 3; ++a) {
                set.points(a, i) = rng.uniform(-extent / 2.0, extent / 2.0);
            }
        }
        const Eigen::Vector3d mean = set.points.rowwise().mean();
        const Eigen::Matrix3Xd centered = set.points.colwise() - mean;
        const Eigen::Matrix3d scatter = centered * centered.transpose() / static_cast<double>(z);
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(scatter);
        // demand genuine 3D spread so PnP fixtures stay full rank
        if (es.eigenvalues()[0] > 1e-3 * extent * extent) return set;
    }
}

LandmarkSet generate_symmetric_landmarks(int z, double extent, std::uint64_t seed) {
    if (z < 8 || z % 2 != 0) {
        throw std::invalid_argument("generate_symmetric_landmarks: need even Z >= 8");
    }
    for (std::uint64_t attempt = 0;; ++attempt) {
        Rng rng(derive_seed(seed, kLandmarkStream + 1, attempt));
        LandmarkSet set;
        set.points.resize(3, z);
        for (int i = 0; i < z / 2; ++i) {
            set.points(0, i) = rng.uniform(0.05 * extent, extent / 2.0);
            set.points(1, i) = rng.uniform(-extent / 2.0, extent / 2.0);
            set.points(2, i) = rng.uniform(-extent / 2.0, extent / 2.0);
            set.points.col(z / 2 + i) = set.points.col(i).cwiseProduct(Eigen::Vector3d(-1, 1, 1));
        }
        const Eigen::Vector3d mean = set.points.rowwise().mean();
        const Eigen::Matrix3Xd centered = set.points.colwise() - mean;
        const Eigen::Matrix3d scatter = centered * centered.transpose() / static_cast<double>(z);
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(scatter);
        if (es.eigenvalues()[0] > 1e-3 * extent * extent) return set;
    }
}

Scenario generate_scenario(const ScenarioConfig& cfg) {
    if (cfg.n_frames < 1) throw std::invalid_argument("generate_scenario: n_frames must be >= 1");
    if (cfg.fps <= 0.0) throw std::invalid_argument("generate_scenario: fps must be positive");
    for (const auto* ranges : {&cfg.harsh_ranges, &cfg.low_motion_ranges}) {
        for (const FrameRange& r : *ranges) {
            if (r.first < 1 || r.last > cfg.n_frames || r.first > r.last) {
                throw std::invalid_argument("generate_scenario: range outside [1, n_frames]");
            }
        }
    }

    Scenario scenario;
    scenario.config = cfg;
    scenario.landmarks = cfg.symmetric_landmarks
                             ? generate_symmetric_landmarks(cfg.z, cfg.object_extent, cfg.seed)
                             : generate_landmarks(cfg.z, cfg.object_extent, cfg.seed);

    const Eigen::Vector3d stand_off(0.0, 0.0, cfg.distance_m());
    scenario.frames.reserve(static_cast<std::size_t>(cfg.n_frames));
    for (int n = 1; n <= cfg.n_frames; ++n) {
        FrameTruth truth;
        truth.frame_index = n;
        const double y_deg = std::fmod(static_cast<double>(n) * cfg.rotation_rate, 360.0);
        const double x_deg = 20.0 * std::floor(static_cast<double>(n - 1) * cfg.rotation_rate / 360.0);
        const Eigen::Matrix3d R =
            (Eigen::AngleAxisd(x_deg * kDegToRad, Eigen::Vector3d::UnitX()) *
             Eigen::AngleAxisd(y_deg * kDegToRad, Eigen::Vector3d::UnitY()))
                .toRotationMatrix();
        truth.pose_gt = Pose(R, stand_off);
        truth.keypoints_gt = project(scenario.landmarks, truth.pose_gt, cfg.intrinsics);
        truth.box_gt = derive_box(truth.keypoints_gt, 0.10);
        truth.harsh = in_ranges(cfg.harsh_ranges, n);
        truth.low_motion = in_ranges(cfg.low_motion_ranges, n);
        scenario.frames.push_back(std::move(truth));
    }
    return scenario;
}

ChannelPrediction simulate_prediction(const KeypointSet& truth, FrameCondition condition,
                                      const NoiseModel& model, std::uint64_t seed, int q,
                                      Channel channel) {
    const Eigen::Index z = truth.count();
    Rng rng(seed);

    ChannelPrediction pred;
    pred.channel = channel;
    pred.keypoints = truth;
    for (Eigen::Index i = 0; i < z; ++i) {
        if (!pred.keypoints.is_valid(i)) continue;
        pred.keypoints.points(0, i) += rng.normal(0.0, model.base_sigma);
        pred.keypoints.points(1, i) += rng.normal(0.0, model.base_sigma);
    }

    double mc_sigma = model.mc_sigma_clean;
    if (condition == FrameCondition::Corrupt) {
        mc_sigma = model.mc_sigma_corrupt;
        const int n_corrupt =
            static_cast<int>(std::llround(model.corrupt_fraction * static_cast<double>(z)));
        const std::vector<int> corrupt_idx = rng.sample_distinct(static_cast<int>(z), n_corrupt);
        const double shared_angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
        for (int i : corrupt_idx) {
            const double angle =
                model.clustered ? shared_angle : rng.uniform(0.0, 2.0 * std::numbers::pi);
            pred.keypoints.points(0, i) += model.corrupt_offset * std::cos(angle);
            pred.keypoints.points(1, i) += model.corrupt_offset * std::sin(angle);
        }
        const int n_invalid =
            static_cast<int>(std::llround(model.invalid_fraction_corrupt * static_cast<double>(z)));
        for (int i : rng.sample_distinct(static_cast<int>(z), n_invalid)) {
            pred.keypoints.valid[static_cast<std::size_t>(i)] = 0;
        }
    }

    pred.mc_samples.reserve(static_cast<std::size_t>(q));
    for (int s = 0; s < q; ++s) {
        KeypointSet sample = pred.keypoints;
        for (Eigen::Index i = 0; i < z; ++i) {
            if (!sample.is_valid(i)) continue;
            sample.points(0, i) += rng.normal(0.0, mc_sigma);
            sample.points(1, i) += rng.normal(0.0, mc_sigma);
        }
        pred.mc_samples.push_back(std::move(sample));
    }
    return pred;
}

EventSynthesizer::EventSynthesizer(double contrast_threshold, double fps)
    : threshold_(contrast_threshold), dt_us_(1e6 / fps) {
    if (contrast_threshold <= 0.0) throw std::invalid_argument("EventSynthesizer: threshold must be positive");
    if (fps <= 0.0) throw std::invalid_argument("EventSynthesizer: fps must be positive");
}

namespace {

Eigen::MatrixXd safe_log(const Eigen::MatrixXd& m) {
    return m.cwiseMax(1e-6).array().log().matrix();
}

}  // namespace

void EventSynthesizer::start(const Eigen::MatrixXd& first_frame) {
    prev_log_ = safe_log(first_frame);
    ref_ = prev_log_;
    frame_count_ = 1;
    started_ = true;
}

void EventSynthesizer::step(const Eigen::MatrixXd& frame, std::vector<Event>& out) {
    if (!started_) throw std::logic_error("EventSynthesizer::step before start");
    if (frame.rows() != prev_log_.rows() || frame.cols() != prev_log_.cols()) {
        throw std::invalid_argument("EventSynthesizer: frame size changed");
    }
    const Eigen::MatrixXd cur_log = safe_log(frame);
    const double t0 = static_cast<double>(frame_count_ - 1) * dt_us_;

    for (Eigen::Index y = 0; y < cur_log.rows(); ++y) {
        for (Eigen::Index x = 0; x < cur_log.cols(); ++x) {
            const double a = prev_log_(y, x);
            const double b = cur_log(y, x);
            double& r = ref_(y, x);
            if (b == a && std::abs(b - r) < threshold_) continue;
            const std::int8_t pol = b > r ? 1 : -1;
            const double dir = static_cast<double>(pol);
            const int crossings =
                static_cast<int>(std::floor(dir * (b - r) / threshold_ + 1e-9));
            for (int k = 1; k <= crossings; ++k) {
                const double level = r + dir * threshold_ * static_cast<double>(k);
                const double frac = b == a ? 1.0 : (level - a) / (b - a);
                const double t = t0 + std::clamp(frac, 0.0, 1.0) * dt_us_;
                out.push_back({static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y), pol,
                               static_cast<std::uint64_t>(std::llround(t))});
            }
            r += dir * threshold_ * static_cast<double>(crossings);
        }
    }
    prev_log_ = cur_log;
    ++frame_count_;
}

EventBuffer synthesize_events(std::span<const Eigen::MatrixXd> intensity_frames,
                              double contrast_threshold, double fps) {
    if (intensity_frames.size() < 2) {
        throw std::invalid_argument("synthesize_events: need at least 2 frames");
    }
    const int height = static_cast<int>(intensity_frames[0].rows());
    const int width = static_cast<int>(intensity_frames[0].cols());

    EventSynthesizer synth(contrast_threshold, fps);
    synth.start(intensity_frames[0]);
    std::vector<Event> events;
    for (std::size_t k = 1; k < intensity_frames.size(); ++k) {
        synth.step(intensity_frames[k], events);
    }
    std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
        return std::tie(a.t, a.y, a.x, a.p) < std::tie(b.t, b.y, b.x, b.p);
    });

    EventBuffer buffer(width, height);
    buffer.append(events);
    return buffer;
}

namespace {

std::uint64_t interpolate_timestamp(Rng& rng, std::uint64_t t_min, std::uint64_t t_max) {
    if (t_max <= t_min) return t_min;
    return t_min + rng.next_u64() % (t_max - t_min + 1);
}

EventBuffer rebuild_sorted(std::vector<Event> events, int width, int height) {
    std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
        return std::tie(a.t, a.y, a.x, a.p) < std::tie(b.t, b.y, b.x, b.p);
    });
    EventBuffer out(width, height);
    out.append(events);
    return out;
}

}  // namespace

EventBuffer event_noise(const EventBuffer& buffer, double add_rate, double remove_rate,
                        std::uint64_t seed) {
    if (add_rate < 0.0 || remove_rate < 0.0) throw std::invalid_argument("event_noise: negative rate");
    Rng rng(seed);

    std::vector<Event> events;
    events.reserve(buffer.size());
    for (const Event& e : buffer.events()) {
        if (rng.uniform() >= remove_rate) events.push_back(e);
    }

    const auto n_add = static_cast<std::size_t>(
        std::llround(add_rate * static_cast<double>(buffer.size())));
    const std::uint64_t t_min = buffer.empty() ? 0 : buffer[0].t;
    const std::uint64_t t_max = buffer.empty() ? 0 : buffer[buffer.size() - 1].t;
    for (std::size_t i = 0; i < n_add; ++i) {
        Event e;
        e.x = static_cast<std::uint16_t>(rng.uniform_int(buffer.width()));
        e.y = static_cast<std::uint16_t>(rng.uniform_int(buffer.height()));
        e.p = rng.uniform() < 0.5 ? std::int8_t{-1} : std::int8_t{1};
        e.t = interpolate_timestamp(rng, t_min, t_max);
        events.push_back(e);
    }
    return rebuild_sorted(std::move(events), buffer.width(), buffer.height());
}

bool Quad::contains(const Eigen::Vector2d& p) const {
    // even-odd ray casting
    bool inside = false;
    for (std::size_t i = 0, j = 3; i < 4; j = i++) {
        const Eigen::Vector2d& a = corners[i];
        const Eigen::Vector2d& b = corners[j];
        if ((a.y() > p.y()) != (b.y() > p.y())) {
            const double x_cross = a.x() + (p.y() - a.y()) / (b.y() - a.y()) * (b.x() - a.x());
            if (p.x() < x_cross) inside = !inside;
        }
    }
    return inside;
}

Quad random_quad(int width, int height, Rng& rng) {
    std::array<Eigen::Vector2d, 4> pts;
    for (auto& p : pts) {
        p = {rng.uniform(0.0, static_cast<double>(width)),
             rng.uniform(0.0, static_cast<double>(height))};
    }
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    for (const auto& p : pts) centroid += p / 4.0;
    std::sort(pts.begin(), pts.end(), [&](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
        return std::atan2(a.y() - centroid.y(), a.x() - centroid.x()) <
               std::atan2(b.y() - centroid.y(), b.x() - centroid.x());
    });
    return Quad{pts};
}

EventBuffer event_patch_noise(const EventBuffer& buffer, const Quad& quad, double add_rate,
                              double remove_rate, std::uint64_t seed) {
    if (add_rate < 0.0 || remove_rate < 0.0) throw std::invalid_argument("event_patch_noise: negative rate");
    Rng rng(seed);

    std::vector<Event> events;
    events.reserve(buffer.size());
    std::size_t n_inside = 0;
    for (const Event& e : buffer.events()) {
        const Eigen::Vector2d p{static_cast<double>(e.x), static_cast<double>(e.y)};
        if (!quad.contains(p)) {
            events.push_back(e);
            continue;
        }
        ++n_inside;
        if (rng.uniform() >= remove_rate) events.push_back(e);
    }

    const auto n_add =
        static_cast<std::size_t>(std::llround(add_rate * static_cast<double>(n_inside)));
    const std::uint64_t t_min = buffer.empty() ? 0 : buffer[0].t;
    const std::uint64_t t_max = buffer.empty() ? 0 : buffer[buffer.size() - 1].t;
    double qx_min = buffer.width(), qx_max = 0.0, qy_min = buffer.height(), qy_max = 0.0;
    for (const auto& c : quad.corners) {
        qx_min = std::min(qx_min, c.x());
        qx_max = std::max(qx_max, c.x());
        qy_min = std::min(qy_min, c.y());
        qy_max = std::max(qy_max, c.y());
    }
    for (std::size_t i = 0; i < n_add; ++i) {
        Eigen::Vector2d p;
        do {
            p = {rng.uniform(qx_min, qx_max), rng.uniform(qy_min, qy_max)};
        } while (!quad.contains(p));
        Event e;
        e.x = static_cast<std::uint16_t>(std::clamp(p.x(), 0.0, static_cast<double>(buffer.width() - 1)));
        e.y = static_cast<std::uint16_t>(std::clamp(p.y(), 0.0, static_cast<double>(buffer.height() - 1)));
        e.p = rng.uniform() < 0.5 ? std::int8_t{-1} : std::int8_t{1};
        e.t = interpolate_timestamp(rng, t_min, t_max);
        events.push_back(e);
    }
    return rebuild_sorted(std::move(events), buffer.width(), buffer.height());
}

Eigen::MatrixXd moving_bar_frame(int width, int height, double bar_position,
                                 const EventSynthConfig& cfg) {
    Eigen::MatrixXd frame = Eigen::MatrixXd::Constant(height, width, 1.0);
    const int center = static_cast<int>(std::llround(bar_position));
    for (int dx = -cfg.bar_half_width; dx <= cfg.bar_half_width; ++dx) {
        const int x = center + dx;
        if (x < 0 || x >= width) continue;
        frame.col(x).setConstant(cfg.bar_intensity);
    }
    return frame;
}

double moving_bar_position(const ScenarioConfig& cfg, int frame) {
    // position advances per frame; nearly freezes inside low-motion windows
    double pos = static_cast<double>(cfg.events.bar_half_width + 1);
    const double span = static_cast<double>(cfg.width - 2 * (cfg.events.bar_half_width + 1));
    for (int f = 1; f <= frame; ++f) {
        const bool low = in_ranges(cfg.low_motion_ranges, f);
        pos += low ? cfg.events.low_motion_speed : cfg.events.speed;
    }
    const double wrapped = std::fmod(pos - (cfg.events.bar_half_width + 1), span);
    return (cfg.events.bar_half_width + 1) + wrapped;
}

std::vector<Detection> simulate_detections(const Scenario& scenario, std::uint64_t seed) {
    const DetectionScript& script = scenario.config.detection;
    std::vector<Detection> out;
    out.reserve(scenario.frames.size());
    for (const FrameTruth& truth : scenario.frames) {
        Rng rng(derive_seed(seed, kDetectionStream, static_cast<std::uint64_t>(truth.frame_index)));
        Detection det;
        if (truth.low_motion) {
            // detector loses the object: shrunken box teleported off target
            const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
            const double dx = script.collapse_offset_px * std::cos(angle);
            const double dy = script.collapse_offset_px * std::sin(angle);
            const double cx = 0.5 * (truth.box_gt.x_min + truth.box_gt.x_max) + dx;
            const double cy = 0.5 * (truth.box_gt.y_min + truth.box_gt.y_max) + dy;
            const double hw = 0.5 * truth.box_gt.width() * script.collapse_shrink;
            const double hh = 0.5 * truth.box_gt.height() * script.collapse_shrink;
            det.box = {cx - hw, cy - hh, cx + hw, cy + hh};
            det.score = script.collapse_score;
        } else {
            det.box = {truth.box_gt.x_min + rng.normal(0.0, script.jitter_px),
                       truth.box_gt.y_min + rng.normal(0.0, script.jitter_px),
                       truth.box_gt.x_max + rng.normal(0.0, script.jitter_px),
                       truth.box_gt.y_max + rng.normal(0.0, script.jitter_px)};
            if (!det.box.is_valid()) det.box = truth.box_gt;
            det.score = script.clean_score;
        }
        out.push_back(det);
    }
    return out;
}

}  // namespace fusepose
