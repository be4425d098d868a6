#pragma once

#include "fusepose/bundle.hpp"
#include "fusepose/fusion.hpp"
#include "fusepose/metrics.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fusepose {

enum class PipelineMode { Fusion, FusionNoGate, RgbOnly, EventOnly };

const char* to_string(PipelineMode m);
PipelineMode pipeline_mode_from_string(const std::string& s);

struct PipelineConfig {
    PipelineMode mode = PipelineMode::Fusion;
    RansacConfig ransac;  // ransac.seed is the master seed
    double alpha = 0.2;
    std::optional<double> seed_score_min;  // detection-smoother seeding guard
    PolarityMode frame_mode = PolarityMode::Count;
};

struct PipelineOutput {
    std::vector<FusionResult> results;
    std::vector<FrameError> errors;
    std::size_t trailing_events = 0;
    int missing_prediction_frames = 0;
};

// Per frame: replay the event window, smooth the event-channel detection,
// warp event keypoints into RGB space, arbitrate / solve, score against the
// label. Deterministic for fixed seed and inputs.
PipelineOutput run_pipeline(const SequenceBundle& bundle, const PipelineConfig& cfg);

// errors CSV: frame,omega_m,theta_deg,degenerate,mode,cmkd,u_rgb,u_event
// (undefined quantities are left empty)
void write_errors_csv(const std::filesystem::path& path, std::span<const FrameError> errors,
                      std::span<const FusionResult> results);

struct ErrorRow {
    int frame = 0;
    double omega = 0.0;
    double theta = 0.0;
    bool degenerate = false;
    std::string mode;
    std::optional<double> cmkd;
    std::optional<double> u_rgb;
    std::optional<double> u_event;
};

std::vector<ErrorRow> read_errors_csv(const std::filesystem::path& path);

void write_results_jsonl(const std::filesystem::path& path, std::span<const FusionResult> results);

// run.json carries what `evaluate` needs: sequence identity, method, seed,
// and the adverse-period metadata.
void write_run_json(const std::filesystem::path& path, const SequenceBundle& bundle,
                    const PipelineConfig& cfg);

struct RunInfo {
    std::string sequence;
    std::string method;
    std::uint64_t seed = 0;
    int n_frames = 0;
    std::vector<FrameRange> harsh_ranges;
    std::vector<FrameRange> low_motion_ranges;
};

RunInfo read_run_json(const std::filesystem::path& path);

}  // namespace fusepose
