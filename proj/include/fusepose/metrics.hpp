#pragma once

#include "fusepose/geometry.hpp"

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace fusepose {

struct FrameError {
    double omega = 0.0;  // meters
    double theta = 0.0;  // degrees, in [0, 180]
    bool degenerate = false;
    int frame_index = 0;
};

struct SuccessConfig {
    double rho = 0.010;   // meters
    double sigma = 10.0;  // degrees
};

// Translation/orientation error of a prediction against ground truth.
// Degenerate predictions are scored against the zero-pose convention
// (identity rotation, zero translation) and flagged.
FrameError frame_error(const Pose& gt, const Pose& pred, bool degenerate = false,
                       int frame_index = 0);

struct SuccessRates {
    double omega_rate = 0.0;  // Omega: fraction with omega < rho
    double theta_rate = 0.0;  // Theta: fraction with theta < sigma
};

// Success rates over all given errors, or over a frame-index subset when one
// is supplied. Throws on an empty selection.
SuccessRates success_rates(std::span<const FrameError> errors, const SuccessConfig& cfg,
                           const std::set<int>* subset = nullptr);

struct SequenceScores {
    double omega = 0.0;
    double omega_psi = 0.0;
    double theta = 0.0;
    double theta_psi = 0.0;
};

// sequence name -> method name -> scores; missing cells stay absent.
using ScoreTable = std::map<std::string, std::map<std::string, SequenceScores>>;

// Per-sequence rows plus an unweighted average row, fixed column order
// (omega, omega_psi, theta, theta_psi per method). Missing cells emit empty
// fields, not zeros.
std::string aggregate_table_csv(const std::vector<std::string>& methods, const ScoreTable& table);

}  // namespace fusepose
