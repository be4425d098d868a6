#include "fusepose/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fusepose {

const char* to_string(FusionMode m) {
    switch (m) {
        case FusionMode::Fused: return "fused";
        case FusionMode::RgbOnly: return "rgb_only";
        case FusionMode::EventOnly: return "event_only";
    }
    return "fused";
}

FusionMode fusion_mode_from_string(const std::string& s) {
    if (s == "fused") return FusionMode::Fused;
    if (s == "rgb_only") return FusionMode::RgbOnly;
    if (s == "event_only") return FusionMode::EventOnly;
    throw std::invalid_argument("unknown fusion mode: " + s);
}

double cmkd(const KeypointSet& rgb, const KeypointSet& event) {
    if (rgb.count() != event.count()) throw std::invalid_argument("cmkd: Z mismatch");
    std::vector<double> dists;
    dists.reserve(static_cast<std::size_t>(rgb.count()));
    for (Eigen::Index i = 0; i < rgb.count(); ++i) {
        if (!rgb.is_valid(i) || !event.is_valid(i)) continue;
        dists.push_back((rgb.points.col(i) - event.points.col(i)).norm());
    }
    if (dists.empty()) throw std::runtime_error("cmkd: no commonly valid landmark");
    std::sort(dists.begin(), dists.end());
    const std::size_t n = dists.size();
    if (n % 2 == 1) return dists[n / 2];
    return 0.5 * (dists[n / 2 - 1] + dists[n / 2]);
}

double cmkd_threshold(const BoundingBox& box, double alpha) {
    if (!box.is_valid()) throw std::invalid_argument("cmkd_threshold: zero-area box");
    return alpha * box.diagonal();
}

namespace {

double aggregate(std::vector<double>& values, UncertaintyAggregation agg) {
    if (agg == UncertaintyAggregation::Mean) {
        double s = 0.0;
        for (double v : values) s += v;
        return s / static_cast<double>(values.size());
    }
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

double uncertainty(std::span<const KeypointSet> samples, UncertaintyAggregation agg) {
    const std::size_t q = samples.size();
    if (q < 2) throw std::invalid_argument("uncertainty: need Q >= 2 samples");
    const Eigen::Index z = samples[0].count();
    for (const KeypointSet& s : samples) {
        if (s.count() != z) throw std::invalid_argument("uncertainty: inconsistent Z across samples");
    }

    // variance on data shifted by the first sample, so identical samples give
    // an exact zero
    const auto stdev3 = [&](int ord, Eigen::Index i) {
        const double shift = samples[0].points(ord, i);
        double sum = 0.0, sum_sq = 0.0;
        for (const KeypointSet& s : samples) {
            const double d = s.points(ord, i) - shift;
            sum += d;
            sum_sq += d * d;
        }
        const double var = std::max(0.0, (sum_sq - sum * sum / static_cast<double>(q)) /
                                             static_cast<double>(q - 1));
        return 3.0 * std::sqrt(var);
    };

    std::vector<double> ux, uy;
    for (Eigen::Index i = 0; i < z; ++i) {
        if (!samples[0].is_valid(i)) continue;
        ux.push_back(stdev3(0, i));
        uy.push_back(stdev3(1, i));
    }
    if (ux.empty()) throw std::runtime_error("uncertainty: no valid landmark");
    return 0.5 * (aggregate(ux, agg) + aggregate(uy, agg));
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double uncertainty_or_inf(const ChannelPrediction& pred, UncertaintyAggregation agg) {
    try {
        return uncertainty(pred.mc_samples, agg);
    } catch (const std::exception&) {
        return kInf;  // no usable samples: treat the channel as maximally unreliable
    }
}

void split_inliers(const std::vector<Correspondence>& corrs, const std::vector<int>& inliers,
                   FusionResult& result) {
    for (int idx : inliers) {
        const Correspondence& c = corrs[static_cast<std::size_t>(idx)];
        (c.channel == Channel::Rgb ? result.inliers_rgb : result.inliers_event)
            .push_back(c.landmark_id);
    }
}

// Runs RANSAC if the list is large enough; degenerate result otherwise.
PnPResult solve_or_degenerate(const std::vector<Correspondence>& corrs, const CameraIntrinsics& K,
                              const RansacConfig& cfg) {
    if (static_cast<int>(corrs.size()) < cfg.sample_size) {
        PnPResult r;
        r.degenerate = true;
        r.mean_reproj_error = kInf;
        return r;
    }
    return ransac_pnp(corrs, K, cfg);
}

}  // namespace

FusionResult estimate_pose(const ChannelPrediction& rgb, const ChannelPrediction& event,
                           const LandmarkSet& landmarks, const BoundingBox& box,
                           const CameraIntrinsics& K, const FusionOptions& opts) {
    if (rgb.keypoints.count() != landmarks.count() || event.keypoints.count() != landmarks.count()) {
        throw std::invalid_argument("estimate_pose: Z mismatch");
    }

    FusionResult result;
    result.threshold_e = cmkd_threshold(box, opts.alpha);
    result.u_rgb = uncertainty_or_inf(rgb, opts.aggregation);
    result.u_event = uncertainty_or_inf(event, opts.aggregation);

    bool cmkd_defined = true;
    try {
        result.cmkd = cmkd(rgb.keypoints, event.keypoints);
    } catch (const std::exception&) {
        cmkd_defined = false;
    }

    bool fused_path;
    if (!opts.gate_enabled) {
        fused_path = true;
        result.provenance = "no_gate";
    } else if (!cmkd_defined) {
        fused_path = false;
        result.provenance = "cmkd_undefined";
    } else if (result.cmkd <= result.threshold_e) {
        fused_path = true;
        result.provenance = "gate";
    } else {
        fused_path = false;
        result.provenance = "uncertainty";
    }

    if (fused_path) {
        const auto corrs = fuse_correspondences(rgb.keypoints, event.keypoints, landmarks);
        const PnPResult pnp = solve_or_degenerate(corrs, K, opts.ransac);
        result.pose = pnp.pose;
        result.degenerate = pnp.degenerate;
        result.mode = FusionMode::Fused;
        split_inliers(corrs, pnp.inliers, result);
        return result;
    }

    // uncertainty arbitration; ties go to the event channel
    const bool rgb_first = result.u_rgb < result.u_event;
    const auto run_channel = [&](Channel ch, FusionResult& r) {
        const KeypointSet& kps = ch == Channel::Rgb ? rgb.keypoints : event.keypoints;
        const auto corrs = make_correspondences(kps, landmarks, ch);
        const PnPResult pnp = solve_or_degenerate(corrs, K, opts.ransac);
        r.pose = pnp.pose;
        r.degenerate = pnp.degenerate;
        r.mode = ch == Channel::Rgb ? FusionMode::RgbOnly : FusionMode::EventOnly;
        r.inliers_rgb.clear();
        r.inliers_event.clear();
        split_inliers(corrs, pnp.inliers, r);
    };

    run_channel(rgb_first ? Channel::Rgb : Channel::Event, result);
    if (result.degenerate) {
        FusionResult fallback = result;
        run_channel(rgb_first ? Channel::Event : Channel::Rgb, fallback);
        if (!fallback.degenerate) {
            fallback.provenance += "+fallback";
            return fallback;
        }
    }
    return result;
}

}  // namespace fusepose
