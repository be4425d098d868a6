#include "fusepose/bundle.hpp"
#include "fusepose/event.hpp"
#include "fusepose/geometry.hpp"
#include "fusepose/metrics.hpp"
#include "fusepose/pipeline.hpp"
#include "fusepose/plot.hpp"
#include "fusepose/simkit.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using namespace fusepose;

namespace {

std::uint64_t default_seed() {
    if (const char* env = std::getenv("FUSEPOSE_SEED")) {
        return std::strtoull(env, nullptr, 10);
    }
    return 0;
}

std::string slurp(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed, bool no_events, bool no_predictions) {
    ScenarioConfig cfg = scenario_from_json_string(slurp(config_path));
    if (seed) cfg.seed = *seed;
    const Scenario scenario = generate_scenario(cfg);
    WriteBundleOptions opts;
    opts.with_events = !no_events;
    opts.with_predictions = !no_predictions;
    write_bundle(out_dir, scenario, opts);
    std::cout << "wrote bundle '" << cfg.name << "' (" << cfg.n_frames << " frames, Z=" << cfg.z
              << ") to " << out_dir << "\n";
    return 0;
}

int cmd_fuse(const std::string& bundle_dir, const std::string& mode_str, std::uint64_t seed,
             int iterations, double reproj_px, double alpha, std::string out_dir,
             std::optional<double> seed_score_min) {
    const SequenceBundle bundle = load_bundle(bundle_dir);
    PipelineConfig cfg;
    cfg.mode = pipeline_mode_from_string(mode_str);
    cfg.ransac.seed = seed;
    cfg.ransac.iterations = iterations;
    cfg.ransac.reproj_threshold = reproj_px;
    cfg.alpha = alpha;
    cfg.seed_score_min = seed_score_min;

    if (out_dir.empty()) out_dir = (fs::path(bundle_dir) / "runs" / mode_str).string();
    fs::create_directories(out_dir);

    const PipelineOutput out = run_pipeline(bundle, cfg);
    write_errors_csv(fs::path(out_dir) / "errors.csv", out.errors, out.results);
    write_results_jsonl(fs::path(out_dir) / "results.jsonl", out.results);
    write_run_json(fs::path(out_dir) / "run.json", bundle, cfg);

    int degenerate = 0;
    for (const FusionResult& r : out.results) degenerate += r.degenerate ? 1 : 0;
    std::cout << "ran " << mode_str << " on '" << bundle.meta.name << "': " << out.results.size()
              << " frames, " << degenerate << " degenerate";
    if (out.trailing_events > 0) std::cout << ", " << out.trailing_events << " trailing events ignored";
    if (out.missing_prediction_frames > 0) {
        std::cout << ", " << out.missing_prediction_frames << " frames missing predictions";
    }
    std::cout << "; results in " << out_dir << "\n";
    return 0;
}

int cmd_evaluate(const std::vector<std::string>& run_dirs, double rho_m, double sigma_deg,
                 const std::string& out_path) {
    SuccessConfig cfg{rho_m, sigma_deg};
    ScoreTable table;
    std::vector<std::string> methods;

    for (const std::string& dir : run_dirs) {
        const RunInfo info = read_run_json(fs::path(dir) / "run.json");
        const auto rows = read_errors_csv(fs::path(dir) / "errors.csv");
        std::vector<FrameError> errors;
        std::set<int> psi;
        for (const ErrorRow& row : rows) {
            errors.push_back({row.omega, row.theta, row.degenerate, row.frame});
            if (in_ranges(info.harsh_ranges, row.frame) || in_ranges(info.low_motion_ranges, row.frame)) {
                psi.insert(row.frame);
            }
        }
        const SuccessRates full = success_rates(errors, cfg);
        SequenceScores scores{full.omega_rate, full.omega_rate, full.theta_rate, full.theta_rate};
        if (!psi.empty()) {
            const SuccessRates sub = success_rates(errors, cfg, &psi);
            scores.omega_psi = sub.omega_rate;
            scores.theta_psi = sub.theta_rate;
        }
        table[info.sequence][info.method] = scores;
        if (std::find(methods.begin(), methods.end(), info.method) == methods.end()) {
            methods.push_back(info.method);
        }
    }

    const std::string csv = aggregate_table_csv(methods, table);
    std::ofstream os(out_path);
    if (!os) throw std::runtime_error("cannot open " + out_path + " for writing");
    os << csv;
    std::cout << csv;
    return 0;
}

int cmd_align(const std::string& corr_path, const std::string& out_path, bool full_affine) {
    std::ifstream is(corr_path);
    if (!is) throw std::runtime_error("cannot open " + corr_path);
    std::string line;
    if (!std::getline(is, line) || line != "src_x,src_y,dst_x,dst_y") {
        throw std::runtime_error("correspondences csv: expected header src_x,src_y,dst_x,dst_y");
    }
    std::vector<Eigen::Vector2d> src, dst;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string f;
        Eigen::Vector2d s, d;
        std::getline(ls, f, ',');
        s.x() = std::stod(f);
        std::getline(ls, f, ',');
        s.y() = std::stod(f);
        std::getline(ls, f, ',');
        d.x() = std::stod(f);
        std::getline(ls, f, ',');
        d.y() = std::stod(f);
        src.push_back(s);
        dst.push_back(d);
    }
    Eigen::Matrix2Xd src_m(2, static_cast<Eigen::Index>(src.size()));
    Eigen::Matrix2Xd dst_m(2, static_cast<Eigen::Index>(dst.size()));
    for (std::size_t i = 0; i < src.size(); ++i) {
        src_m.col(static_cast<Eigen::Index>(i)) = src[i];
        dst_m.col(static_cast<Eigen::Index>(i)) = dst[i];
    }

    double rms = 0.0;
    if (full_affine) {
        const auto M = fit_affine_full(src_m, dst_m, &rms);
        std::ofstream os(out_path);
        os << "{\"affine\": [[" << M(0, 0) << ", " << M(0, 1) << ", " << M(0, 2) << "], [" << M(1, 0)
           << ", " << M(1, 1) << ", " << M(1, 2) << "]]}\n";
    } else {
        const AffineWarp warp = fit_alignment(src_m, dst_m, &rms);
        std::ofstream os(out_path);
        os << to_json_string(warp) << '\n';
    }
    std::cout << "fit " << src.size() << " correspondences, residual RMS " << rms << " px -> "
              << out_path << "\n";
    return 0;
}

int cmd_accumulate(const std::string& events_path, double fps, int width, int height,
                   const std::string& mode_str, bool apply_ignore_polarity,
                   const std::string& out_dir) {
    const fs::path in(events_path);
    EventBuffer buffer(width, height);
    if (in.extension() == ".csv") {
        std::ifstream is(in);
        if (!is) throw std::runtime_error("cannot open " + events_path);
        buffer = read_events_csv(is, width, height);
    } else {
        buffer = read_events_bin(in, width, height);
    }

    const PolarityMode mode = mode_str == "signed" ? PolarityMode::Signed : PolarityMode::Count;
    fs::create_directories(out_dir);
    std::ofstream index(fs::path(out_dir) / "frames.csv");
    index << "frame,window_start_us,window_end_us,events,empty,file\n";

    const std::uint64_t t_end = buffer.empty() ? 0 : buffer[buffer.size() - 1].t;
    int frame = 1;
    for (std::uint64_t t0 = 0; t0 < t_end || frame == 1; ++frame) {
        const std::uint64_t t1 =
            static_cast<std::uint64_t>(std::llround(static_cast<double>(frame) * 1e6 / fps));
        const auto batch = slice_window(buffer, t0, t1);
        EventFrame ef = accumulate_frame(batch, width, height, mode);
        ef.window_start = t0;
        ef.window_end = t1;
        if (apply_ignore_polarity) ef = ignore_polarity(ef);

        char name[32];
        std::snprintf(name, sizeof(name), "frame_%05d.pgm", frame);
        std::ofstream pgm(fs::path(out_dir) / name, std::ios::binary);
        pgm << "P5\n" << width << ' ' << height << "\n255\n";
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                pgm.put(static_cast<char>(std::llround(ef.values(y, x) * 255.0)));
            }
        }
        index << frame << ',' << t0 << ',' << t1 << ',' << batch.size() << ','
              << (ef.empty ? 1 : 0) << ',' << name << '\n';
        t0 = t1;
        if (t1 >= t_end) break;
    }
    std::cout << "accumulated " << frame << " frames to " << out_dir << "\n";
    return 0;
}

int cmd_plot(const std::string& errors_path, const std::string& meta_path,
             const std::string& out_path) {
    const SequenceMeta meta = meta_from_json_string(slurp(meta_path));
    const auto rows = read_errors_csv(errors_path);
    const std::string svg = render_error_plot_svg(meta, rows);
    std::ofstream os(out_path);
    if (!os) throw std::runtime_error("cannot open " + out_path + " for writing");
    os << svg;
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"event-RGB fusion pose estimation toolkit"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "generate a synthetic sequence bundle");
    std::string sim_config, sim_out;
    std::uint64_t sim_seed = 0;
    bool sim_no_events = false, sim_no_predictions = false;
    bool sim_seed_set = false;
    sim->add_option("--config", sim_config, "scenario JSON")->required();
    sim->add_option("--out", sim_out, "output bundle directory")->required();
    sim->add_option("--seed", sim_seed, "override the scenario seed")->each([&](const std::string&) {
        sim_seed_set = true;
    });
    sim->add_flag("--no-events", sim_no_events, "skip event-stream synthesis");
    sim->add_flag("--no-predictions", sim_no_predictions, "skip materializing predictions");

    // fuse
    auto* fuse = app.add_subcommand("fuse", "run the pose pipeline on a bundle");
    std::string fuse_bundle, fuse_mode = "fusion", fuse_out;
    std::uint64_t fuse_seed = default_seed();
    int fuse_iters = 10000;
    double fuse_reproj = 20.0, fuse_alpha = 0.2;
    double fuse_seed_score_min = -1.0;
    fuse->add_option("--bundle", fuse_bundle, "bundle directory")->required();
    fuse->add_option("--mode", fuse_mode, "fusion|fusion_no_gate|rgb_only|event_only");
    fuse->add_option("--seed", fuse_seed, "master seed (default: FUSEPOSE_SEED or 0)");
    fuse->add_option("--ransac-iters", fuse_iters, "RANSAC iterations");
    fuse->add_option("--reproj-px", fuse_reproj, "inlier reprojection threshold in px");
    fuse->add_option("--alpha", fuse_alpha, "CMKD gate fraction of the box diagonal");
    fuse->add_option("--out", fuse_out, "output directory (default <bundle>/runs/<mode>)");
    fuse->add_option("--seed-score-min", fuse_seed_score_min,
                     "reject detector seeds below this score (default off)");

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "aggregate success-rate table over runs");
    std::vector<std::string> eval_runs;
    double eval_rho = 0.010, eval_sigma = 10.0;
    std::string eval_out;
    eval->add_option("--runs", eval_runs, "run directories")->required()->expected(-1);
    eval->add_option("--rho-m", eval_rho, "position success threshold in meters");
    eval->add_option("--sigma-deg", eval_sigma, "orientation success threshold in degrees");
    eval->add_option("--out", eval_out, "output table CSV")->required();

    // align
    auto* align = app.add_subcommand("align", "fit the event-to-RGB affine warp");
    std::string align_corr, align_out;
    bool align_full = false;
    align->add_option("--correspondences", align_corr, "CSV src_x,src_y,dst_x,dst_y")->required();
    align->add_option("--out", align_out, "output warp JSON")->required();
    align->add_flag("--full-affine", align_full, "fit a 6-DOF affine instead");

    // accumulate
    auto* acc = app.add_subcommand("accumulate", "convert an event stream to frames");
    std::string acc_events, acc_out, acc_mode = "count";
    double acc_fps = 30.0;
    int acc_width = 800, acc_height = 720;
    bool acc_ignore_polarity = false;
    acc->add_option("--events", acc_events, "events .bin or .csv")->required();
    acc->add_option("--fps", acc_fps, "frame rate");
    acc->add_option("--width", acc_width, "sensor width");
    acc->add_option("--height", acc_height, "sensor height");
    acc->add_option("--mode", acc_mode, "count|signed");
    acc->add_flag("--ignore-polarity", acc_ignore_polarity, "fold polarity after accumulation");
    acc->add_option("--out", acc_out, "output directory")->required();

    // plot
    auto* plot = app.add_subcommand("plot", "render the per-frame error plot");
    std::string plot_errors, plot_meta, plot_out;
    plot->add_option("--errors", plot_errors, "errors CSV")->required();
    plot->add_option("--meta", plot_meta, "sequence meta JSON")->required();
    plot->add_option("--out", plot_out, "output SVG")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            return cmd_simulate(sim_config, sim_out,
                                sim_seed_set ? std::optional<std::uint64_t>(sim_seed) : std::nullopt,
                                sim_no_events, sim_no_predictions);
        }
        if (fuse->parsed()) {
            return cmd_fuse(fuse_bundle, fuse_mode, fuse_seed, fuse_iters, fuse_reproj, fuse_alpha,
                            fuse_out,
                            fuse_seed_score_min >= 0.0 ? std::optional<double>(fuse_seed_score_min)
                                                       : std::nullopt);
        }
        if (eval->parsed()) return cmd_evaluate(eval_runs, eval_rho, eval_sigma, eval_out);
        if (align->parsed()) return cmd_align(align_corr, align_out, align_full);
        if (acc->parsed()) {
            return cmd_accumulate(acc_events, acc_fps, acc_width, acc_height, acc_mode,
                                  acc_ignore_polarity, acc_out);
        }
        if (plot->parsed()) return cmd_plot(plot_errors, plot_meta, plot_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
