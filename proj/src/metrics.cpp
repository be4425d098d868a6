#include "fusepose/metrics.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace fusepose {

FrameError frame_error(const Pose& gt, const Pose& pred, bool degenerate, int frame_index) {
    FrameError e;
    e.frame_index = frame_index;
    e.degenerate = degenerate;
    const Pose& scored = degenerate ? Pose() : pred;  // zero-pose convention
    e.omega = (gt.translation() - scored.translation()).norm();
    e.theta = quat_angle_deg(gt.rotation(), scored.rotation());
    return e;
}

SuccessRates success_rates(std::span<const FrameError> errors, const SuccessConfig& cfg,
                           const std::set<int>* subset) {
    if (cfg.rho <= 0.0 || cfg.sigma <= 0.0) throw std::invalid_argument("success_rates: thresholds must be positive");
    std::size_t n = 0;
    SuccessRates rates;
    for (const FrameError& e : errors) {
        if (subset != nullptr && subset->count(e.frame_index) == 0) continue;
        ++n;
        rates.omega_rate += e.omega < cfg.rho ? 1.0 : 0.0;
        rates.theta_rate += e.theta < cfg.sigma ? 1.0 : 0.0;
    }
    if (n == 0) throw std::invalid_argument("success_rates: empty selection");
    rates.omega_rate /= static_cast<double>(n);
    rates.theta_rate /= static_cast<double>(n);
    return rates;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace

std::string aggregate_table_csv(const std::vector<std::string>& methods, const ScoreTable& table) {
    std::ostringstream os;
    os << "sequence";
    for (const std::string& m : methods) {
        os << ',' << m << "_omega," << m << "_omega_psi," << m << "_theta," << m << "_theta_psi";
    }
    os << '\n';

    struct Acc {
        double sum[4] = {0, 0, 0, 0};
        int n = 0;
    };
    std::map<std::string, Acc> acc;

    for (const auto& [sequence, row] : table) {
        os << sequence;
        for (const std::string& m : methods) {
            const auto it = row.find(m);
            if (it == row.end()) {
                os << ",,,,";
                continue;
            }
            const SequenceScores& s = it->second;
            os << ',' << fmt(s.omega) << ',' << fmt(s.omega_psi) << ',' << fmt(s.theta) << ','
               << fmt(s.theta_psi);
            Acc& a = acc[m];
            a.sum[0] += s.omega;
            a.sum[1] += s.omega_psi;
            a.sum[2] += s.theta;
            a.sum[3] += s.theta_psi;
            a.n += 1;
        }
        os << '\n';
    }

    os << "avg";
    for (const std::string& m : methods) {
        const auto it = acc.find(m);
        if (it == acc.end() || it->second.n == 0) {
            os << ",,,,";
            continue;
        }
        const Acc& a = it->second;
        for (double s : a.sum) os << ',' << fmt(s / a.n);
    }
    os << '\n';
    return os.str();
}

}  // namespace fusepose
