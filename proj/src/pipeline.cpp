#include "fusepose/pipeline.hpp"

#include "fusepose/rng.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fusepose {

using nlohmann::json;

const char* to_string(PipelineMode m) {
    switch (m) {
        case PipelineMode::Fusion: return "fusion";
        case PipelineMode::FusionNoGate: return "fusion_no_gate";
        case PipelineMode::RgbOnly: return "rgb_only";
        case PipelineMode::EventOnly: return "event_only";
    }
    return "fusion";
}

PipelineMode pipeline_mode_from_string(const std::string& s) {
    if (s == "fusion") return PipelineMode::Fusion;
    if (s == "fusion_no_gate") return PipelineMode::FusionNoGate;
    if (s == "rgb_only") return PipelineMode::RgbOnly;
    if (s == "event_only") return PipelineMode::EventOnly;
    throw std::invalid_argument("unknown pipeline mode: " + s);
}

namespace {

constexpr std::uint64_t kRansacStream = 0x524e5343;  // "RNSC"

// Single-channel solve packaged as a FusionResult; used by the rgb_only /
// event_only benchmark variants.
FusionResult solve_single_channel(const ChannelPrediction& pred, const LandmarkSet& landmarks,
                                  const CameraIntrinsics& K, const RansacConfig& ransac,
                                  FusionMode mode) {
    FusionResult result;
    result.mode = mode;
    result.provenance = "forced";
    const auto corrs = make_correspondences(pred.keypoints, landmarks, pred.channel);
    if (static_cast<int>(corrs.size()) < ransac.sample_size) {
        result.degenerate = true;
        return result;
    }
    const PnPResult pnp = ransac_pnp(corrs, K, ransac);
    result.pose = pnp.pose;
    result.degenerate = pnp.degenerate;
    for (int idx : pnp.inliers) {
        const Correspondence& c = corrs[static_cast<std::size_t>(idx)];
        (c.channel == Channel::Rgb ? result.inliers_rgb : result.inliers_event)
            .push_back(c.landmark_id);
    }
    return result;
}

double uncertainty_or_nan(const ChannelPrediction& pred) {
    try {
        return uncertainty(pred.mc_samples);
    } catch (const std::exception&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

}  // namespace

PipelineOutput run_pipeline(const SequenceBundle& bundle, const PipelineConfig& cfg) {
    const EventBuffer events = load_events(bundle);

    std::vector<ChannelPrediction> preds_rgb, preds_event;
    if (bundle.has_predictions) {
        preds_rgb = load_predictions(bundle, Channel::Rgb);
        preds_event = load_predictions(bundle, Channel::Event);
    } else if (!bundle.scenario) {
        throw std::runtime_error("run_pipeline: no predictions on disk and no scenario to generate them");
    }

    std::vector<Detection> detections;
    if (bundle.has_detections) {
        detections = load_detections(bundle);
    } else {
        // ground-truth boxes as a trivially confident detector
        for (const FrameLabel& l : bundle.labels) detections.push_back({l.box_gt, 1.0});
    }
    if (static_cast<int>(detections.size()) < bundle.meta.n_frames) {
        throw std::runtime_error("run_pipeline: detection stream shorter than sequence");
    }

    DetectionSmoother smoother({}, cfg.seed_score_min);

    PipelineOutput out;
    out.results.reserve(static_cast<std::size_t>(bundle.meta.n_frames));
    out.errors.reserve(static_cast<std::size_t>(bundle.meta.n_frames));

    Replay replay(bundle.meta, events, bundle.labels, cfg.frame_mode);
    out.trailing_events = replay.trailing_events();

    ReplayFrame frame;
    while (replay.next(frame)) {
        const int n = frame.frame;
        const FrameLabel& label = *frame.label;

        const Detection smoothed = smoother.process(detections[static_cast<std::size_t>(n - 1)]);

        ChannelPrediction rgb, event;
        bool have_preds = true;
        if (bundle.has_predictions) {
            if (n - 1 < static_cast<int>(preds_rgb.size()) &&
                n - 1 < static_cast<int>(preds_event.size())) {
                rgb = preds_rgb[static_cast<std::size_t>(n - 1)];
                event = preds_event[static_cast<std::size_t>(n - 1)];
            } else {
                have_preds = false;
            }
        } else {
            rgb = simulate_bundle_prediction(*bundle.scenario, label, Channel::Rgb);
            event = simulate_bundle_prediction(*bundle.scenario, label, Channel::Event);
        }

        FusionResult result;
        result.frame_index = n;
        if (!have_preds) {
            result.degenerate = true;
            result.provenance = "missing_input";
            ++out.missing_prediction_frames;
            out.results.push_back(result);
            out.errors.push_back(frame_error(label.pose_gt, Pose(), true, n));
            continue;
        }

        // event predictions arrive in event pixel space; align to RGB space
        if (!bundle.warp.is_identity()) {
            event.keypoints = warp_points(event.keypoints, bundle.warp);
            for (KeypointSet& s : event.mc_samples) s = warp_points(s, bundle.warp);
        }

        RansacConfig ransac = cfg.ransac;
        ransac.seed = derive_seed(cfg.ransac.seed, kRansacStream, static_cast<std::uint64_t>(n));

        switch (cfg.mode) {
            case PipelineMode::Fusion:
            case PipelineMode::FusionNoGate: {
                FusionOptions fopts;
                fopts.ransac = ransac;
                fopts.alpha = cfg.alpha;
                fopts.gate_enabled = cfg.mode == PipelineMode::Fusion;
                result = estimate_pose(rgb, event, bundle.landmarks, smoothed.box,
                                       bundle.intrinsics, fopts);
                break;
            }
            case PipelineMode::RgbOnly:
                result = solve_single_channel(rgb, bundle.landmarks, bundle.intrinsics, ransac,
                                              FusionMode::RgbOnly);
                result.u_rgb = uncertainty_or_nan(rgb);
                break;
            case PipelineMode::EventOnly:
                result = solve_single_channel(event, bundle.landmarks, bundle.intrinsics, ransac,
                                              FusionMode::EventOnly);
                result.u_event = uncertainty_or_nan(event);
                break;
        }
        result.frame_index = n;

        out.results.push_back(result);
        out.errors.push_back(frame_error(label.pose_gt, result.pose, result.degenerate, n));
    }
    return out;
}

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_opt(double v) { return std::isfinite(v) ? fmt17(v) : std::string(); }

}  // namespace

void write_errors_csv(const std::filesystem::path& path, std::span<const FrameError> errors,
                      std::span<const FusionResult> results) {
    if (errors.size() != results.size()) {
        throw std::invalid_argument("write_errors_csv: errors/results size mismatch");
    }
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os << "frame,omega_m,theta_deg,degenerate,mode,cmkd,u_rgb,u_event\n";
    for (std::size_t i = 0; i < errors.size(); ++i) {
        const FrameError& e = errors[i];
        const FusionResult& r = results[i];
        os << e.frame_index << ',' << fmt17(e.omega) << ',' << fmt17(e.theta) << ','
           << (e.degenerate ? 1 : 0) << ',' << to_string(r.mode) << ',' << fmt_opt(r.cmkd) << ','
           << fmt_opt(r.u_rgb) << ',' << fmt_opt(r.u_event) << '\n';
    }
}

std::vector<ErrorRow> read_errors_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(is, line) || line != "frame,omega_m,theta_deg,degenerate,mode,cmkd,u_rgb,u_event") {
        throw std::runtime_error("errors csv: bad header");
    }
    std::vector<ErrorRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string field;
        ErrorRow row;
        std::getline(ls, field, ',');
        row.frame = std::stoi(field);
        std::getline(ls, field, ',');
        row.omega = std::stod(field);
        std::getline(ls, field, ',');
        row.theta = std::stod(field);
        std::getline(ls, field, ',');
        row.degenerate = field == "1";
        std::getline(ls, row.mode, ',');
        std::getline(ls, field, ',');
        if (!field.empty()) row.cmkd = std::stod(field);
        std::getline(ls, field, ',');
        if (!field.empty()) row.u_rgb = std::stod(field);
        std::getline(ls, field, ',');
        if (!field.empty()) row.u_event = std::stod(field);
        rows.push_back(row);
    }
    return rows;
}

void write_results_jsonl(const std::filesystem::path& path, std::span<const FusionResult> results) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    for (const FusionResult& r : results) {
        const Eigen::Quaterniond& q = r.pose.rotation();
        const Eigen::Vector3d& t = r.pose.translation();
        json j{{"frame", r.frame_index},
               {"q", {q.w(), q.x(), q.y(), q.z()}},
               {"t", {t.x(), t.y(), t.z()}},
               {"degenerate", r.degenerate},
               {"mode", to_string(r.mode)},
               {"provenance", r.provenance},
               {"inliers_rgb", r.inliers_rgb.size()},
               {"inliers_event", r.inliers_event.size()}};
        j["cmkd"] = std::isfinite(r.cmkd) ? json(r.cmkd) : json();
        j["E"] = std::isfinite(r.threshold_e) ? json(r.threshold_e) : json();
        j["u_rgb"] = std::isfinite(r.u_rgb) ? json(r.u_rgb) : json();
        j["u_event"] = std::isfinite(r.u_event) ? json(r.u_event) : json();
        os << j.dump() << '\n';
    }
}

void write_run_json(const std::filesystem::path& path, const SequenceBundle& bundle,
                    const PipelineConfig& cfg) {
    json ranges_h = json::array(), ranges_l = json::array();
    for (const FrameRange& r : bundle.meta.harsh_ranges) ranges_h.push_back({r.first, r.last});
    for (const FrameRange& r : bundle.meta.low_motion_ranges) ranges_l.push_back({r.first, r.last});
    const json j{{"sequence", bundle.meta.name},
                 {"method", to_string(cfg.mode)},
                 {"seed", cfg.ransac.seed},
                 {"ransac_iterations", cfg.ransac.iterations},
                 {"reproj_threshold_px", cfg.ransac.reproj_threshold},
                 {"alpha", cfg.alpha},
                 {"n_frames", bundle.meta.n_frames},
                 {"harsh_ranges", ranges_h},
                 {"low_motion_ranges", ranges_l}};
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os << j.dump(2) << '\n';
}

RunInfo read_run_json(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    json j;
    is >> j;
    RunInfo info;
    info.sequence = j.at("sequence").get<std::string>();
    info.method = j.at("method").get<std::string>();
    info.seed = j.at("seed").get<std::uint64_t>();
    info.n_frames = j.at("n_frames").get<int>();
    for (const auto& r : j.at("harsh_ranges")) {
        info.harsh_ranges.push_back({r.at(0).get<int>(), r.at(1).get<int>()});
    }
    for (const auto& r : j.at("low_motion_ranges")) {
        info.low_motion_ranges.push_back({r.at(0).get<int>(), r.at(1).get<int>()});
    }
    return info;
}

}  // namespace fusepose
