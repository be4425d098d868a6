#include "fusepose/bundle.hpp"

#include "fusepose/rng.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <regex>
#include <sstream>
#include <stdexcept>

namespace fusepose {

using nlohmann::json;

namespace {

json range_list_to_json(const std::vector<FrameRange>& ranges) {
    json arr = json::array();
    for (const FrameRange& r : ranges) arr.push_back({r.first, r.last});
    return arr;
}

std::vector<FrameRange> range_list_from_json(const json& arr) {
    std::vector<FrameRange> out;
    for (const auto& r : arr) out.push_back({r.at(0).get<int>(), r.at(1).get<int>()});
    return out;
}

json intrinsics_to_json(const CameraIntrinsics& k) {
    return {{"fx", k.fx},
            {"fy", k.fy},
            {"cx", k.cx},
            {"cy", k.cy},
            {"dist", {k.dist[0], k.dist[1], k.dist[2], k.dist[3], k.dist[4]}}};
}

CameraIntrinsics intrinsics_from_json(const json& j) {
    CameraIntrinsics k;
    k.fx = j.at("fx").get<double>();
    k.fy = j.at("fy").get<double>();
    k.cx = j.at("cx").get<double>();
    k.cy = j.at("cy").get<double>();
    const auto& d = j.at("dist");
    for (int i = 0; i < 5; ++i) k.dist[i] = d.at(static_cast<std::size_t>(i)).get<double>();
    if (k.fx <= 0.0 || k.fy <= 0.0) throw std::invalid_argument("intrinsics: focal lengths must be positive");
    return k;
}

json warp_to_json(const AffineWarp& w) {
    return {{"sx", w.sx}, {"sy", w.sy}, {"tx", w.tx}, {"ty", w.ty}};
}

AffineWarp warp_from_json(const json& j) {
    AffineWarp w{j.at("sx").get<double>(), j.at("sy").get<double>(), j.at("tx").get<double>(),
                 j.at("ty").get<double>()};
    if (w.sx <= 0.0 || w.sy <= 0.0) throw std::invalid_argument("warp: scales must be positive");
    return w;
}

json meta_to_json(const SequenceMeta& m) {
    return {{"name", m.name},
            {"fps", m.fps},
            {"n_frames", m.n_frames},
            {"width", m.width},
            {"height", m.height},
            {"harsh_ranges", range_list_to_json(m.harsh_ranges)},
            {"low_motion_ranges", range_list_to_json(m.low_motion_ranges)},
            {"Z", m.z},
            {"object_id", m.object_id}};
}

SequenceMeta meta_from_json(const json& j) {
    SequenceMeta m;
    m.name = j.at("name").get<std::string>();
    m.fps = j.at("fps").get<double>();
    m.n_frames = j.at("n_frames").get<int>();
    m.width = j.at("width").get<int>();
    m.height = j.at("height").get<int>();
    m.harsh_ranges = range_list_from_json(j.at("harsh_ranges"));
    m.low_motion_ranges = range_list_from_json(j.at("low_motion_ranges"));
    m.z = j.at("Z").get<int>();
    m.object_id = j.at("object_id").get<std::string>();
    validate(m);
    return m;
}

json noise_to_json(const NoiseModel& n) {
    return {{"base_sigma", n.base_sigma},
            {"corrupt_fraction", n.corrupt_fraction},
            {"corrupt_offset", n.corrupt_offset},
            {"clustered", n.clustered},
            {"mc_sigma_clean", n.mc_sigma_clean},
            {"mc_sigma_corrupt", n.mc_sigma_corrupt},
            {"invalid_fraction_corrupt", n.invalid_fraction_corrupt}};
}

NoiseModel noise_from_json(const json& j) {
    NoiseModel n;
    n.base_sigma = j.value("base_sigma", n.base_sigma);
    n.corrupt_fraction = j.value("corrupt_fraction", n.corrupt_fraction);
    n.corrupt_offset = j.value("corrupt_offset", n.corrupt_offset);
    n.clustered = j.value("clustered", n.clustered);
    n.mc_sigma_clean = j.value("mc_sigma_clean", n.mc_sigma_clean);
    n.mc_sigma_corrupt = j.value("mc_sigma_corrupt", n.mc_sigma_corrupt);
    n.invalid_fraction_corrupt = j.value("invalid_fraction_corrupt", n.invalid_fraction_corrupt);
    return n;
}

json scenario_to_json(const ScenarioConfig& c) {
    return {{"name", c.name},
            {"object_id", c.object_id},
            {"Z", c.z},
            {"symmetric_landmarks", c.symmetric_landmarks},
            {"object_extent_m", c.object_extent},
            {"distance", to_string(c.distance)},
            {"close_m", c.close_m},
            {"far_m", c.far_m},
            {"fps", c.fps},
            {"n_frames", c.n_frames},
            {"rotation_rate_deg", c.rotation_rate},
            {"harsh_ranges", range_list_to_json(c.harsh_ranges)},
            {"low_motion_ranges", range_list_to_json(c.low_motion_ranges)},
            {"rgb_noise", noise_to_json(c.rgb_noise)},
            {"event_noise", noise_to_json(c.event_noise)},
            {"seed", c.seed},
            {"width", c.width},
            {"height", c.height},
            {"intrinsics", intrinsics_to_json(c.intrinsics)},
            {"warp", warp_to_json(c.warp)},
            {"detection",
             {{"jitter_px", c.detection.jitter_px},
              {"clean_score", c.detection.clean_score},
              {"collapse_score", c.detection.collapse_score},
              {"collapse_offset_px", c.detection.collapse_offset_px},
              {"collapse_shrink", c.detection.collapse_shrink}}},
            {"events",
             {{"enabled", c.events.enabled},
              {"contrast_threshold", c.events.contrast_threshold},
              {"bar_half_width", c.events.bar_half_width},
              {"bar_intensity", c.events.bar_intensity},
              {"low_motion_speed", c.events.low_motion_speed},
              {"speed", c.events.speed}}},
            {"Q", c.q}};
}

ScenarioConfig scenario_from_json(const json& j) {
    ScenarioConfig c;
    c.name = j.value("name", c.name);
    c.object_id = j.value("object_id", c.object_id);
    c.z = j.value("Z", c.z);
    c.symmetric_landmarks = j.value("symmetric_landmarks", c.symmetric_landmarks);
    c.object_extent = j.value("object_extent_m", c.object_extent);
    if (j.contains("distance")) c.distance = distance_from_string(j.at("distance").get<std::string>());
    c.close_m = j.value("close_m", c.close_m);
    c.far_m = j.value("far_m", c.far_m);
    c.fps = j.value("fps", c.fps);
    c.n_frames = j.value("n_frames", c.n_frames);
    c.rotation_rate = j.value("rotation_rate_deg", c.rotation_rate);
    if (j.contains("harsh_ranges")) c.harsh_ranges = range_list_from_json(j.at("harsh_ranges"));
    if (j.contains("low_motion_ranges")) {
        c.low_motion_ranges = range_list_from_json(j.at("low_motion_ranges"));
    }
    if (j.contains("rgb_noise")) c.rgb_noise = noise_from_json(j.at("rgb_noise"));
    if (j.contains("event_noise")) c.event_noise = noise_from_json(j.at("event_noise"));
    c.seed = j.value("seed", c.seed);
    c.width = j.value("width", c.width);
    c.height = j.value("height", c.height);
    if (j.contains("intrinsics")) c.intrinsics = intrinsics_from_json(j.at("intrinsics"));
    if (j.contains("warp")) c.warp = warp_from_json(j.at("warp"));
    if (j.contains("detection")) {
        const json& d = j.at("detection");
        c.detection.jitter_px = d.value("jitter_px", c.detection.jitter_px);
        c.detection.clean_score = d.value("clean_score", c.detection.clean_score);
        c.detection.collapse_score = d.value("collapse_score", c.detection.collapse_score);
        c.detection.collapse_offset_px = d.value("collapse_offset_px", c.detection.collapse_offset_px);
        c.detection.collapse_shrink = d.value("collapse_shrink", c.detection.collapse_shrink);
    }
    if (j.contains("events")) {
        const json& e = j.at("events");
        c.events.enabled = e.value("enabled", c.events.enabled);
        c.events.contrast_threshold = e.value("contrast_threshold", c.events.contrast_threshold);
        c.events.bar_half_width = e.value("bar_half_width", c.events.bar_half_width);
        c.events.bar_intensity = e.value("bar_intensity", c.events.bar_intensity);
        c.events.low_motion_speed = e.value("low_motion_speed", c.events.low_motion_speed);
        c.events.speed = e.value("speed", c.events.speed);
    }
    c.q = j.value("Q", c.q);
    return c;
}

json keypoints_to_json(const KeypointSet& kps) {
    json pts = json::array();
    json valid = json::array();
    for (Eigen::Index i = 0; i < kps.count(); ++i) {
        pts.push_back({kps.points(0, i), kps.points(1, i)});
        valid.push_back(kps.is_valid(i));
    }
    return {{"points", pts}, {"valid", valid}};
}

KeypointSet keypoints_from_json(const json& j) {
    const auto& pts = j.at("points");
    const auto& valid = j.at("valid");
    KeypointSet kps(static_cast<Eigen::Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) {
        kps.points(0, static_cast<Eigen::Index>(i)) = pts[i].at(0).get<double>();
        kps.points(1, static_cast<Eigen::Index>(i)) = pts[i].at(1).get<double>();
        kps.valid[i] = valid.at(i).get<bool>() ? 1 : 0;
    }
    return kps;
}

json label_to_json(const FrameLabel& l) {
    const Eigen::Quaterniond& q = l.pose_gt.rotation();
    const Eigen::Vector3d& t = l.pose_gt.translation();
    json j = keypoints_to_json(l.keypoints_gt);
    j["frame"] = l.frame;
    j["q"] = {q.w(), q.x(), q.y(), q.z()};
    j["t"] = {t.x(), t.y(), t.z()};
    j["box"] = {l.box_gt.x_min, l.box_gt.y_min, l.box_gt.x_max, l.box_gt.y_max};
    j["harsh"] = l.harsh;
    j["low_motion"] = l.low_motion;
    return j;
}

FrameLabel label_from_json(const json& j) {
    FrameLabel l;
    l.frame = j.at("frame").get<int>();
    const auto& q = j.at("q");
    const auto& t = j.at("t");
    l.pose_gt = Pose(Eigen::Quaterniond(q.at(0).get<double>(), q.at(1).get<double>(),
                                        q.at(2).get<double>(), q.at(3).get<double>()),
                     Eigen::Vector3d(t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>()));
    l.keypoints_gt = keypoints_from_json(j);
    const auto& b = j.at("box");
    l.box_gt = {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                b.at(3).get<double>()};
    l.harsh = j.at("harsh").get<bool>();
    l.low_motion = j.at("low_motion").get<bool>();
    return l;
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    json j;
    is >> j;
    return j;
}

void write_json_file(const std::filesystem::path& path, const json& j) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os << j.dump(2) << '\n';
}

}  // namespace

void validate(const SequenceMeta& meta) {
    static const std::regex name_grammar("^[A-Za-z0-9_]+-[0-9]+-(close|far)$");
    if (!std::regex_match(meta.name, name_grammar)) {
        throw std::invalid_argument("sequence name '" + meta.name +
                                    "' does not match <object>-<trajectory_index>-<distance>");
    }
    if (meta.fps <= 0.0) throw std::invalid_argument("meta: fps must be positive");
    if (meta.n_frames < 1) throw std::invalid_argument("meta: n_frames must be >= 1");
    for (const auto* ranges : {&meta.harsh_ranges, &meta.low_motion_ranges}) {
        for (const FrameRange& r : *ranges) {
            if (r.first < 1 || r.last > meta.n_frames || r.first > r.last) {
                throw std::invalid_argument("meta: range outside [1, n_frames]");
            }
        }
    }
}

std::string to_json_string(const CameraIntrinsics& k) { return intrinsics_to_json(k).dump(); }
CameraIntrinsics intrinsics_from_json_string(const std::string& s) {
    return intrinsics_from_json(json::parse(s));
}
std::string to_json_string(const AffineWarp& w) { return warp_to_json(w).dump(); }
AffineWarp warp_from_json_string(const std::string& s) { return warp_from_json(json::parse(s)); }
std::string to_json_string(const SequenceMeta& meta) { return meta_to_json(meta).dump(); }
SequenceMeta meta_from_json_string(const std::string& s) { return meta_from_json(json::parse(s)); }
std::string to_json_string(const ScenarioConfig& cfg) { return scenario_to_json(cfg).dump(); }
ScenarioConfig scenario_from_json_string(const std::string& s) {
    return scenario_from_json(json::parse(s));
}

SequenceBundle load_bundle(const std::filesystem::path& dir) {
    SequenceBundle bundle;
    bundle.dir = dir;
    bundle.meta = meta_from_json(read_json_file(dir / "meta.json"));
    bundle.intrinsics = intrinsics_from_json(read_json_file(dir / "intrinsics.json"));
    bundle.warp = warp_from_json(read_json_file(dir / "warp.json"));

    const json lm = read_json_file(dir / "landmarks.json");
    const auto& pts = lm.at("points");
    bundle.landmarks.points.resize(3, static_cast<Eigen::Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (int a = 0; a < 3; ++a) {
            bundle.landmarks.points(a, static_cast<Eigen::Index>(i)) =
                pts[i].at(static_cast<std::size_t>(a)).get<double>();
        }
    }
    if (bundle.landmarks.count() != bundle.meta.z) {
        throw std::runtime_error("bundle: landmark count does not match meta Z");
    }

    std::ifstream labels_is(dir / "labels.jsonl");
    if (!labels_is) throw std::runtime_error("cannot open " + (dir / "labels.jsonl").string());
    std::string line;
    while (std::getline(labels_is, line)) {
        if (line.empty()) continue;
        bundle.labels.push_back(label_from_json(json::parse(line)));
    }
    if (static_cast<int>(bundle.labels.size()) != bundle.meta.n_frames) {
        throw std::runtime_error("bundle: label count does not match meta n_frames");
    }

    bundle.has_events = std::filesystem::exists(dir / "events.bin");
    bundle.has_predictions = std::filesystem::exists(dir / "predictions_rgb.jsonl") &&
                             std::filesystem::exists(dir / "predictions_event.jsonl");
    bundle.has_detections = std::filesystem::exists(dir / "detections.csv");
    if (std::filesystem::exists(dir / "scenario.json")) {
        bundle.scenario = scenario_from_json(read_json_file(dir / "scenario.json"));
    }
    return bundle;
}

namespace {

json prediction_to_json(const ChannelPrediction& pred, int frame) {
    json j = keypoints_to_json(pred.keypoints);
    j["frame"] = frame;
    json mc = json::array();
    for (const KeypointSet& s : pred.mc_samples) {
        json pts = json::array();
        for (Eigen::Index i = 0; i < s.count(); ++i) pts.push_back({s.points(0, i), s.points(1, i)});
        mc.push_back(pts);
    }
    j["mc"] = mc;
    return j;
}

ChannelPrediction prediction_from_json(const json& j, Channel channel) {
    ChannelPrediction pred;
    pred.channel = channel;
    pred.keypoints = keypoints_from_json(j);
    for (const auto& sample : j.at("mc")) {
        KeypointSet s(static_cast<Eigen::Index>(sample.size()));
        for (std::size_t i = 0; i < sample.size(); ++i) {
            s.points(0, static_cast<Eigen::Index>(i)) = sample[i].at(0).get<double>();
            s.points(1, static_cast<Eigen::Index>(i)) = sample[i].at(1).get<double>();
            s.valid[i] = pred.keypoints.valid[i];
        }
        pred.mc_samples.push_back(std::move(s));
    }
    return pred;
}

}  // namespace

ChannelPrediction simulate_bundle_prediction(const ScenarioConfig& cfg, const FrameLabel& label,
                                             Channel channel) {
    const NoiseModel& model = channel == Channel::Rgb ? cfg.rgb_noise : cfg.event_noise;
    const bool corrupt = channel == Channel::Rgb ? label.harsh : label.low_motion;
    KeypointSet truth = label.keypoints_gt;
    if (channel == Channel::Event && !cfg.warp.is_identity()) {
        truth = warp_points(truth, cfg.warp.inverse());
    }
    const std::uint64_t seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(label.frame),
                                           channel == Channel::Rgb ? 1 : 2);
    return simulate_prediction(truth, corrupt ? FrameCondition::Corrupt : FrameCondition::Clean,
                               model, seed, cfg.q, channel);
}

void write_bundle(const std::filesystem::path& dir, const Scenario& scenario,
                  const WriteBundleOptions& opts) {
    const ScenarioConfig& cfg = scenario.config;
    std::filesystem::create_directories(dir);

    SequenceMeta meta;
    meta.name = cfg.name;
    meta.fps = cfg.fps;
    meta.n_frames = cfg.n_frames;
    meta.width = cfg.width;
    meta.height = cfg.height;
    meta.harsh_ranges = cfg.harsh_ranges;
    meta.low_motion_ranges = cfg.low_motion_ranges;
    meta.z = cfg.z;
    meta.object_id = cfg.object_id;
    validate(meta);

    write_json_file(dir / "meta.json", meta_to_json(meta));
    write_json_file(dir / "intrinsics.json", intrinsics_to_json(cfg.intrinsics));
    write_json_file(dir / "warp.json", warp_to_json(cfg.warp));
    write_json_file(dir / "scenario.json", scenario_to_json(cfg));

    json lm_pts = json::array();
    for (Eigen::Index i = 0; i < scenario.landmarks.count(); ++i) {
        lm_pts.push_back({scenario.landmarks.points(0, i), scenario.landmarks.points(1, i),
                          scenario.landmarks.points(2, i)});
    }
    write_json_file(dir / "landmarks.json", json{{"object_id", cfg.object_id}, {"points", lm_pts}});

    std::ofstream labels_os(dir / "labels.jsonl");
    std::ofstream pred_rgb_os, pred_event_os;
    if (opts.with_predictions) {
        pred_rgb_os.open(dir / "predictions_rgb.jsonl");
        pred_event_os.open(dir / "predictions_event.jsonl");
    }
    for (const FrameTruth& truth : scenario.frames) {
        FrameLabel label{truth.frame_index, truth.pose_gt, truth.keypoints_gt,
                         truth.box_gt,      truth.harsh,   truth.low_motion};
        labels_os << label_to_json(label).dump() << '\n';
        if (opts.with_predictions) {
            pred_rgb_os << prediction_to_json(simulate_bundle_prediction(cfg, label, Channel::Rgb),
                                              label.frame)
                               .dump()
                        << '\n';
            pred_event_os << prediction_to_json(
                                 simulate_bundle_prediction(cfg, label, Channel::Event), label.frame)
                                 .dump()
                          << '\n';
        }
    }
    labels_os.close();
    pred_rgb_os.close();
    pred_event_os.close();

    if (opts.with_detections) {
        write_detections_csv(dir / "detections.csv", simulate_detections(scenario, cfg.seed));
    }

    if (opts.with_events && cfg.events.enabled) {
        EventSynthesizer synth(cfg.events.contrast_threshold, cfg.fps);
        synth.start(moving_bar_frame(cfg.width, cfg.height, moving_bar_position(cfg, 0), cfg.events));
        std::vector<Event> events;
        for (int f = 1; f <= cfg.n_frames; ++f) {
            synth.step(moving_bar_frame(cfg.width, cfg.height, moving_bar_position(cfg, f), cfg.events),
                       events);
        }
        std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
            return std::tie(a.t, a.y, a.x, a.p) < std::tie(b.t, b.y, b.x, b.p);
        });
        write_events_bin(dir / "events.bin", events);
    } else {
        write_events_bin(dir / "events.bin", {});
    }
}

EventBuffer load_events(const SequenceBundle& bundle) {
    return read_events_bin(bundle.dir / "events.bin", bundle.meta.width, bundle.meta.height);
}

std::vector<ChannelPrediction> load_predictions(const SequenceBundle& bundle, Channel channel) {
    const auto path =
        bundle.dir / (channel == Channel::Rgb ? "predictions_rgb.jsonl" : "predictions_event.jsonl");
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    std::vector<ChannelPrediction> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        out.push_back(prediction_from_json(json::parse(line), channel));
    }
    return out;
}

std::vector<Detection> load_detections(const SequenceBundle& bundle) {
    return read_detections_csv(bundle.dir / "detections.csv");
}

void write_detections_csv(const std::filesystem::path& path, std::span<const Detection> detections) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os << "frame,x_min,y_min,x_max,y_max,score\n";
    char buf[160];
    int frame = 1;
    for (const Detection& d : detections) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", frame, d.box.x_min,
                      d.box.y_min, d.box.x_max, d.box.y_max, d.score);
        os << buf;
        ++frame;
    }
}

std::vector<Detection> read_detections_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(is, line) || line != "frame,x_min,y_min,x_max,y_max,score") {
        throw std::runtime_error("detections csv: bad header");
    }
    std::vector<Detection> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string field;
        std::getline(ls, field, ',');  // frame, implicit by order
        Detection d;
        std::getline(ls, field, ',');
        d.box.x_min = std::stod(field);
        std::getline(ls, field, ',');
        d.box.y_min = std::stod(field);
        std::getline(ls, field, ',');
        d.box.x_max = std::stod(field);
        std::getline(ls, field, ',');
        d.box.y_max = std::stod(field);
        std::getline(ls, field, ',');
        d.score = std::stod(field);
        out.push_back(d);
    }
    return out;
}

Replay::Replay(const SequenceMeta& meta, const EventBuffer& events,
               std::span<const FrameLabel> labels, PolarityMode mode)
    : meta_(meta), events_(events), labels_(labels), mode_(mode) {
    if (static_cast<int>(labels.size()) != meta.n_frames) {
        throw std::invalid_argument("Replay: label count does not match meta");
    }
    const std::uint64_t end = window_end_us(meta.n_frames);
    for (std::size_t i = events.size(); i > 0; --i) {
        if (events[i - 1].t <= end) break;
        ++trailing_events_;
    }
}

std::uint64_t Replay::window_end_us(int frame) const {
    return static_cast<std::uint64_t>(std::llround(static_cast<double>(frame) * 1e6 / meta_.fps));
}

bool Replay::next(ReplayFrame& out) {
    if (next_frame_ > meta_.n_frames) return false;
    const int n = next_frame_++;
    const std::uint64_t t0 = window_end_us(n - 1);
    const std::uint64_t t1 = window_end_us(n);
    out.frame = n;
    out.batch = slice_window(events_, t0, t1);
    out.event_frame = accumulate_frame(out.batch, meta_.width, meta_.height, mode_);
    out.event_frame.window_start = t0;
    out.event_frame.window_end = t1;
    out.label = &labels_[static_cast<std::size_t>(n - 1)];
    return true;
}

}  // namespace fusepose
