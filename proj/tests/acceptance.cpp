// Acceptance suite: one numbered criterion per section, one PASS/FAIL line
// each, non-zero exit code when anything fails.

#include "fusepose/bundle.hpp"
#include "fusepose/detection.hpp"
#include "fusepose/event.hpp"
#include "fusepose/fusion.hpp"
#include "fusepose/metrics.hpp"
#include "fusepose/pipeline.hpp"
#include "fusepose/pnp.hpp"
#include "fusepose/rng.hpp"
#include "fusepose/simkit.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace fusepose;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int criterion, const char* name, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", criterion, name,
                detail.c_str());
    if (!pass) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "fusepose_acceptance" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

CameraIntrinsics bench_k() {
    CameraIntrinsics k;
    k.fx = k.fy = 800.0;
    k.cx = 400.0;
    k.cy = 360.0;
    return k;
}

std::string read_file(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    if (!is) return {};
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------- criterion 1
void criterion_1_epnp_roundtrip() {
    const CameraIntrinsics k = bench_k();
    const LandmarkSet lm = generate_landmarks(8, 0.5, 12345);
    Rng rng(42);
    double worst_rot = 0.0, worst_trans = 0.0;
    const auto t0 = Clock::now();
    int trials_ok = 0;
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
        q.normalize();
        const Pose truth(q, Eigen::Vector3d(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1),
                                            rng.uniform(2.0, 5.0)));
        std::vector<Correspondence> corrs;
        for (Eigen::Index i = 0; i < lm.count(); ++i) {
            corrs.push_back({lm.points.col(i), project_point(truth.apply(lm.points.col(i)), k),
                             Channel::Rgb, static_cast<int>(i)});
        }
        const Pose est = epnp_solve(corrs, k);
        const double rot = quat_angle_deg(truth.rotation(), est.rotation());
        const double trans = (truth.translation() - est.translation()).norm();
        worst_rot = std::max(worst_rot, rot);
        worst_trans = std::max(worst_trans, trans);
        if (rot < 1e-4 && trans < 1e-6) ++trials_ok;
    }
    const double secs = seconds_since(t0);
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "%d/100 trials, worst rot %.3g deg, worst trans %.3g m, %.2f s", trials_ok,
                  worst_rot, worst_trans, secs);
    report(1, "EPnP noiseless round-trip", trials_ok == 100 && secs < 1.0, detail);
}

// ---------------------------------------------------------------- criterion 2
// Independent oracle: exhaustive enumeration of every sample_size-subset with
// the same threshold and tie-break rule.
PnPResult exhaustive_pnp(std::span<const Correspondence> corrs, const CameraIntrinsics& k,
                         const RansacConfig& cfg) {
    const int n = static_cast<int>(corrs.size());
    std::vector<int> subset(static_cast<std::size_t>(cfg.sample_size));
    std::vector<int> best_inliers;
    double best_mean = std::numeric_limits<double>::infinity();
    Pose best_pose;
    bool found = false;
    const std::function<void(int, int)> visit = [&](int start, int depth) {
        if (depth == cfg.sample_size) {
            std::vector<Correspondence> sample;
            for (int idx : subset) sample.push_back(corrs[static_cast<std::size_t>(idx)]);
            const auto pose = try_epnp_solve(sample, k);
            if (!pose) return;
            std::vector<int> inliers;
            double sum = 0.0;
            for (int i = 0; i < n; ++i) {
                const double r = reprojection_error(*pose, corrs[static_cast<std::size_t>(i)], k);
                if (r < cfg.reproj_threshold) {
                    inliers.push_back(i);
                    sum += r;
                }
            }
            const double mean = inliers.empty() ? std::numeric_limits<double>::infinity()
                                                : sum / static_cast<double>(inliers.size());
            if (!found || inliers.size() > best_inliers.size() ||
                (inliers.size() == best_inliers.size() && mean < best_mean)) {
                found = true;
                best_inliers = inliers;
                best_mean = mean;
                best_pose = *pose;
            }
            return;
        }
        for (int i = start; i < n; ++i) {
            subset[static_cast<std::size_t>(depth)] = i;
            visit(i + 1, depth + 1);
        }
    };
    visit(0, 0);

    PnPResult result;
    if (!found || static_cast<int>(best_inliers.size()) < cfg.min_inliers) {
        result.degenerate = true;
        result.inliers = best_inliers;
        return result;
    }
    std::vector<Correspondence> consensus;
    for (int i : best_inliers) consensus.push_back(corrs[static_cast<std::size_t>(i)]);
    if (const auto refit = try_epnp_solve(consensus, k)) best_pose = *refit;
    result.pose = best_pose;
    result.inliers = best_inliers;
    return result;
}

void criterion_2_ransac_oracle() {
    const CameraIntrinsics k = bench_k();
    const auto t0 = Clock::now();
    int matches = 0;
    for (int trial = 0; trial < 100; ++trial) {
        Rng rng(9000 + static_cast<std::uint64_t>(trial));
        const LandmarkSet lm = generate_landmarks(12, 0.4, 700 + static_cast<std::uint64_t>(trial));
        const Pose truth(Eigen::Quaterniond(Eigen::AngleAxisd(rng.uniform(-0.6, 0.6),
                                                              Eigen::Vector3d::UnitY())),
                         Eigen::Vector3d(0, 0, rng.uniform(0.9, 1.6)));
        std::vector<Correspondence> corrs;
        for (Eigen::Index i = 0; i < lm.count(); ++i) {
            Correspondence c{lm.points.col(i), project_point(truth.apply(lm.points.col(i)), k),
                             Channel::Rgb, static_cast<int>(i)};
            c.p2.x() += rng.normal(0.0, 1.0);
            c.p2.y() += rng.normal(0.0, 1.0);
            corrs.push_back(c);
        }
        const int n_out = 3 + rng.uniform_int(3);
        for (int i = 0; i < n_out; ++i) {
            const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
            corrs[static_cast<std::size_t>(rng.uniform_int(12))].p2 +=
                rng.uniform(120.0, 320.0) * Eigen::Vector2d(std::cos(angle), std::sin(angle));
        }
        RansacConfig cfg;
        cfg.seed = static_cast<std::uint64_t>(trial);
        const PnPResult fast = ransac_pnp(corrs, k, cfg);
        const PnPResult oracle = exhaustive_pnp(corrs, k, cfg);
        if (fast.degenerate == oracle.degenerate && fast.inliers == oracle.inliers) ++matches;
    }
    const double secs = seconds_since(t0);
    char detail[128];
    std::snprintf(detail, sizeof(detail), "%d/100 inlier sets identical, %.1f s", matches, secs);
    report(2, "RANSAC matches exhaustive enumeration", matches >= 99 && secs < 30.0, detail);
}

// ---------------------------------------------------------------- criterion 3
ScenarioConfig dominance_config() {
    ScenarioConfig cfg;
    cfg.name = "synth-1-close";
    cfg.n_frames = 300;
    cfg.harsh_ranges = {{51, 150}};
    cfg.low_motion_ranges = {{171, 270}};
    cfg.seed = 7;
    return cfg;  // default NoiseModel on both channels
}

SuccessRates run_mode(const SequenceBundle& bundle, PipelineMode mode, std::uint64_t seed,
                      const std::set<int>* subset = nullptr,
                      PipelineOutput* keep_output = nullptr) {
    PipelineConfig pc;
    pc.mode = mode;
    pc.ransac.seed = seed;
    const PipelineOutput out = run_pipeline(bundle, pc);
    const SuccessRates rates = success_rates(out.errors, {}, subset);
    if (keep_output != nullptr) *keep_output = out;
    return rates;
}

void criterion_3_fusion_dominance() {
    const auto t0 = Clock::now();
    const fs::path dir = scratch("dominance");
    write_bundle(dir, generate_scenario(dominance_config()));
    const SequenceBundle bundle = load_bundle(dir);

    const SuccessRates fusion = run_mode(bundle, PipelineMode::Fusion, 7);
    const SuccessRates rgb = run_mode(bundle, PipelineMode::RgbOnly, 7);
    const SuccessRates event = run_mode(bundle, PipelineMode::EventOnly, 7);
    const double secs = seconds_since(t0);

    const double omega_max = std::max(rgb.omega_rate, event.omega_rate);
    const double omega_min = std::min(rgb.omega_rate, event.omega_rate);
    const double theta_max = std::max(rgb.theta_rate, event.theta_rate);
    const double theta_min = std::min(rgb.theta_rate, event.theta_rate);

    const bool pass = fusion.omega_rate >= omega_max && fusion.omega_rate >= 1.5 * omega_min &&
                      fusion.theta_rate >= theta_max && fusion.theta_rate >= 1.5 * theta_min &&
                      secs < 120.0;
    char detail[200];
    std::snprintf(detail, sizeof(detail),
                  "Omega f/r/e %.3f/%.3f/%.3f, Theta f/r/e %.3f/%.3f/%.3f, %.0f s",
                  fusion.omega_rate, rgb.omega_rate, event.omega_rate, fusion.theta_rate,
                  rgb.theta_rate, event.theta_rate, secs);
    report(3, "fusion dominates both single channels", pass, detail);
}

// ---------------------------------------------------------------- criterion 4
void criterion_4_confounding() {
    ScenarioConfig cfg;
    cfg.name = "synth-2-close";
    cfg.n_frames = 200;
    cfg.harsh_ranges = {{61, 140}};
    cfg.low_motion_ranges = {{61, 140}};  // fully overlapping adverse periods
    cfg.seed = 7;
    cfg.event_noise.corrupt_fraction = 0.3;  // event degraded but usable
    cfg.event_noise.corrupt_offset = 60.0;
    cfg.event_noise.invalid_fraction_corrupt = 0.1;
    cfg.event_noise.mc_sigma_corrupt = 2.5;

    const fs::path dir = scratch("confounding");
    write_bundle(dir, generate_scenario(cfg));
    const SequenceBundle bundle = load_bundle(dir);

    std::set<int> overlap;
    for (int f = 61; f <= 140; ++f) overlap.insert(f);
    const SuccessRates fusion = run_mode(bundle, PipelineMode::Fusion, 7, &overlap);
    const SuccessRates rgb = run_mode(bundle, PipelineMode::RgbOnly, 7, &overlap);
    const SuccessRates event = run_mode(bundle, PipelineMode::EventOnly, 7, &overlap);

    const double gap = std::abs(fusion.omega_rate - std::max(rgb.omega_rate, event.omega_rate));
    char detail[160];
    std::snprintf(detail, sizeof(detail), "overlap Omega f/r/e %.3f/%.3f/%.3f, |gap| %.3f",
                  fusion.omega_rate, rgb.omega_rate, event.omega_rate, gap);
    report(4, "overlapping windows track the better channel", gap <= 0.1, detail);
}

// ---------------------------------------------------------------- criterion 5
void criterion_5_edge_case_gate() {
    ScenarioConfig cfg;
    cfg.name = "synth-3-close";
    cfg.n_frames = 60;
    cfg.harsh_ranges = {{21, 50}};
    cfg.low_motion_ranges = {{21, 50}};
    cfg.seed = 7;
    // event channel: coherent cluster large enough to out-vote the rgb
    // consensus, confidently wrong samples
    cfg.event_noise.corrupt_fraction = 1.0;
    cfg.event_noise.corrupt_offset = 120.0;
    cfg.event_noise.clustered = true;
    cfg.event_noise.invalid_fraction_corrupt = 0.0;
    cfg.event_noise.mc_sigma_corrupt = 8.0;
    // rgb channel: mildly degraded, low sample spread
    cfg.rgb_noise.corrupt_fraction = 0.22;
    cfg.rgb_noise.corrupt_offset = 80.0;
    cfg.rgb_noise.invalid_fraction_corrupt = 0.2;
    cfg.rgb_noise.mc_sigma_corrupt = 2.0;

    const fs::path dir = scratch("edge_case");
    write_bundle(dir, generate_scenario(cfg));
    const SequenceBundle bundle = load_bundle(dir);

    PipelineOutput on, off;
    run_mode(bundle, PipelineMode::Fusion, 7, nullptr, &on);
    run_mode(bundle, PipelineMode::FusionNoGate, 7, nullptr, &off);

    double sum_on = 0.0, sum_off = 0.0;
    int fired_lower_u = 0, n = 0;
    for (int f = 21; f <= 50; ++f) {
        const FusionResult& r = on.results[static_cast<std::size_t>(f - 1)];
        sum_on += on.errors[static_cast<std::size_t>(f - 1)].theta;
        sum_off += off.errors[static_cast<std::size_t>(f - 1)].theta;
        ++n;
        if (r.provenance.rfind("uncertainty", 0) == 0 && r.cmkd > r.threshold_e) {
            const bool rgb_lower = r.u_rgb < r.u_event;
            if ((rgb_lower && r.mode == FusionMode::RgbOnly) ||
                (!rgb_lower && r.mode == FusionMode::EventOnly)) {
                ++fired_lower_u;
            }
        }
    }
    const double mean_on = sum_on / n, mean_off = sum_off / n;
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "mean theta gate-on %.2f deg vs gate-off %.2f deg, gate fired %d/%d frames",
                  mean_on, mean_off, fired_lower_u, n);
    report(5, "CMKD gate defuses the clustered-outlier case", mean_on <= mean_off && fired_lower_u >= 1,
           detail);
}

// ---------------------------------------------------------------- criterion 6
void criterion_6_detection_smoothing() {
    ScenarioConfig cfg;
    cfg.name = "synth-1-close";
    cfg.n_frames = 90;
    cfg.low_motion_ranges = {{31, 60}};  // first frame good
    cfg.seed = 11;
    const Scenario scenario = generate_scenario(cfg);
    const auto raw = simulate_detections(scenario, cfg.seed);

    DetectionSmoother smoother;
    std::vector<BoundingBox> raw_boxes, smooth_boxes, gt_boxes;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        raw_boxes.push_back(raw[i].box);
        smooth_boxes.push_back(smoother.process(raw[i]).box);
        gt_boxes.push_back(scenario.frames[i].box_gt);
    }
    const DetectionMetrics m_raw = detection_metrics(raw_boxes, gt_boxes);
    const DetectionMetrics m_smooth = detection_metrics(smooth_boxes, gt_boxes);

    // all-clean stream: smoothing must change nothing
    ScenarioConfig clean_cfg = cfg;
    clean_cfg.low_motion_ranges.clear();
    const Scenario clean = generate_scenario(clean_cfg);
    const auto clean_raw = simulate_detections(clean, clean_cfg.seed);
    DetectionSmoother clean_smoother;
    std::vector<BoundingBox> clean_raw_boxes, clean_smooth_boxes, clean_gt;
    for (std::size_t i = 0; i < clean_raw.size(); ++i) {
        clean_raw_boxes.push_back(clean_raw[i].box);
        clean_smooth_boxes.push_back(clean_smoother.process(clean_raw[i]).box);
        clean_gt.push_back(clean.frames[i].box_gt);
    }
    const DetectionMetrics c_raw = detection_metrics(clean_raw_boxes, clean_gt);
    const DetectionMetrics c_smooth = detection_metrics(clean_smooth_boxes, clean_gt);

    const bool pass = m_smooth.success_rate > m_raw.success_rate &&
                      c_smooth.success_rate == c_raw.success_rate;
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "collapse stream Xi %.3f -> %.3f, clean stream Xi %.3f == %.3f",
                  m_raw.success_rate, m_smooth.success_rate, c_raw.success_rate,
                  c_smooth.success_rate);
    report(6, "detection smoothing lifts the IoU success rate", pass, detail);
}

// ---------------------------------------------------------------- criterion 7
void criterion_7_metric_identities() {
    bool pass = true;
    std::string why = "all identities hold";

    Rng rng(3);
    Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    q.normalize();
    if (quat_angle_deg(q, q) != 0.0) pass = false, why = "theta(q,q) != 0";
    const Eigen::Quaterniond neg(-q.w(), -q.x(), -q.y(), -q.z());
    if (quat_angle_deg(q, neg) != 0.0) pass = false, why = "theta(q,-q) != 0";
    const Eigen::Quaterniond rot90(
        Eigen::AngleAxisd(std::numbers::pi / 2.0, Eigen::Vector3d::UnitZ()));
    if (std::abs(quat_angle_deg(Eigen::Quaterniond::Identity(), rot90) - 90.0) > 1e-9) {
        pass = false, why = "theta(identity, 90deg) != 90";
    }
    const FrameError e345 = frame_error(
        Pose(), Pose(Eigen::Quaterniond::Identity(), Eigen::Vector3d(0.003, 0.004, 0.0)));
    if (e345.omega != 0.005) pass = false, why = "3-4-5 omega not exact";

    // monotonicity over random error sets
    Rng erng(5);
    std::vector<FrameError> errors;
    for (int i = 0; i < 300; ++i) {
        errors.push_back({std::abs(erng.normal(0.0, 0.02)), std::abs(erng.normal(0.0, 20.0)),
                          false, i + 1});
    }
    double prev_o = -1.0, prev_t = -1.0;
    for (double s = 0.25; s <= 4.0; s += 0.25) {
        const SuccessRates r = success_rates(errors, {0.010 * s, 10.0 * s});
        if (r.omega_rate < prev_o || r.theta_rate < prev_t) {
            pass = false;
            why = "success rates not monotone";
        }
        prev_o = r.omega_rate;
        prev_t = r.theta_rate;
    }
    report(7, "metric identities", pass, why);
}

// ---------------------------------------------------------------- criterion 8
void criterion_8_event_frames() {
    bool pass = true;
    std::string why;

    // hand-computed histogram fixture
    const std::vector<Event> batch = {{2, 2, 1, 0}, {2, 2, 1, 1}, {2, 2, -1, 2}, {5, 5, 1, 3}};
    const EventFrame f = accumulate_frame(batch, 8, 8);
    if (f.at(2, 2) != 1.0 || f.at(5, 5) != 1.0 / 3.0 || f.at(0, 0) != 0.0) {
        pass = false;
        why = "histogram fixture mismatch";
    }
    const EventFrame empty = accumulate_frame({}, 8, 8);
    if (!empty.empty || empty.values.maxCoeff() != 0.0) {
        pass = false;
        why = "empty batch fixture mismatch";
    }

    // partition property + throughput on 1e6 events
    EventBuffer buffer(800, 720);
    {
        Rng rng(13);
        std::vector<Event> events(1000000);
        std::uint64_t t = 0;
        for (auto& e : events) {
            t += rng.uniform_int(60);
            e = {static_cast<std::uint16_t>(rng.uniform_int(800)),
                 static_cast<std::uint16_t>(rng.uniform_int(720)),
                 rng.uniform() < 0.5 ? std::int8_t{-1} : std::int8_t{1}, t};
        }
        buffer.append(events);
    }
    std::size_t sliced = 0;
    const std::uint64_t window = 33333;
    const std::uint64_t t_end = buffer[buffer.size() - 1].t;
    for (std::uint64_t t0 = 0; t0 <= t_end; t0 += window) {
        sliced += slice_window(buffer, t0, t0 + window).size();
    }
    if (sliced != buffer.size()) {
        pass = false;
        why = "window partition lost or duplicated events";
    }

    const auto t0 = Clock::now();
    const EventFrame big = accumulate_frame(buffer.events(), 800, 720);
    const double ms = seconds_since(t0) * 1e3;
    if (ms >= 100.0) {
        pass = false;
        why = "accumulation too slow";
    }
    if (big.empty) pass = false;

    char detail[128];
    std::snprintf(detail, sizeof(detail), "fixtures exact, 1e6-event partition ok, accumulate %.0f ms%s%s",
                  ms, why.empty() ? "" : "; ", why.c_str());
    report(8, "event-frame correctness and throughput", pass, detail);
}

// ---------------------------------------------------------------- criterion 9
void criterion_9_cli_determinism() {
    const fs::path dir = scratch("determinism");
    ScenarioConfig cfg;
    cfg.name = "synth-4-far";
    cfg.distance = Distance::Far;
    cfg.n_frames = 40;
    cfg.harsh_ranges = {{11, 20}};
    cfg.low_motion_ranges = {{26, 35}};
    cfg.seed = 19;
    cfg.events.enabled = true;
    write_bundle(dir / "bundle", generate_scenario(cfg));

    const std::string cli = FUSEPOSE_CLI_PATH;
    const auto run = [&](const std::string& out) {
        const std::string cmd = cli + " fuse --bundle " + (dir / "bundle").string() +
                                " --mode fusion --seed 123 --ransac-iters 2000 --reproj-px 20 --out " +
                                (dir / out).string() + " > /dev/null";
        return std::system(cmd.c_str());
    };
    const int rc1 = run("run_a");
    const int rc2 = run("run_b");

    const std::string a = read_file(dir / "run_a" / "errors.csv");
    const std::string b = read_file(dir / "run_b" / "errors.csv");
    const std::string ja = read_file(dir / "run_a" / "results.jsonl");
    const std::string jb = read_file(dir / "run_b" / "results.jsonl");
    const bool pass = rc1 == 0 && rc2 == 0 && !a.empty() && a == b && !ja.empty() && ja == jb;
    char detail[128];
    std::snprintf(detail, sizeof(detail), "two fuse runs, errors.csv %zu bytes, byte-identical: %s",
                  a.size(), a == b ? "yes" : "no");
    report(9, "CLI fuse runs are byte-identical for a fixed seed", pass, detail);
}

// --------------------------------------------------------------- criterion 10
void criterion_10_uncertainty_calibration() {
    ScenarioConfig cfg;
    cfg.n_frames = 100;
    cfg.seed = 5;
    cfg.events.enabled = false;
    const Scenario s = generate_scenario(cfg);

    NoiseModel narrow;
    narrow.base_sigma = 0.0;
    narrow.mc_sigma_clean = 1.5;
    NoiseModel wide = narrow;
    wide.mc_sigma_clean = 3.0;

    double sum_narrow = 0.0, sum_wide = 0.0;
    for (int f = 0; f < 100; ++f) {
        const KeypointSet& truth = s.frames[static_cast<std::size_t>(f)].keypoints_gt;
        sum_narrow += uncertainty(
            simulate_prediction(truth, FrameCondition::Clean, narrow,
                                derive_seed(21, static_cast<std::uint64_t>(f)), 32)
                .mc_samples);
        sum_wide += uncertainty(
            simulate_prediction(truth, FrameCondition::Clean, wide,
                                derive_seed(22, static_cast<std::uint64_t>(f)), 32)
                .mc_samples);
    }
    const double ratio = sum_wide / sum_narrow;

    // zero-variance samples give exactly zero
    NoiseModel zero = narrow;
    zero.mc_sigma_clean = 0.0;
    const double u0 = uncertainty(
        simulate_prediction(s.frames[0].keypoints_gt, FrameCondition::Clean, zero, 3, 32).mc_samples);

    const bool pass = std::abs(ratio - 2.0) <= 0.2 && u0 == 0.0;
    char detail[128];
    std::snprintf(detail, sizeof(detail), "U ratio %.3f (target 2 +/- 10%%), zero-variance U = %g",
                  ratio, u0);
    report(10, "uncertainty doubles with the sample spread", pass, detail);
}

}  // namespace

int main() {
    std::printf("fusepose acceptance suite\n");
    const auto t0 = Clock::now();
    criterion_1_epnp_roundtrip();
    criterion_2_ransac_oracle();
    criterion_3_fusion_dominance();
    criterion_4_confounding();
    criterion_5_edge_case_gate();
    criterion_6_detection_smoothing();
    criterion_7_metric_identities();
    criterion_8_event_frames();
    criterion_9_cli_determinism();
    criterion_10_uncertainty_calibration();
    std::printf("%d criterion(s) failed, total %.0f s\n", g_failures, seconds_since(t0));
    return g_failures == 0 ? 0 : 1;
}
