#include "fusepose/pnp.hpp"
#include "fusepose/rng.hpp"

#include <cmath>
#include <limits>

namespace fusepose {

const char* to_string(Channel c) { return c == Channel::Rgb ? "rgb" : "event"; }

namespace {

double mean_residual(const Pose& pose, std::span<const Correspondence> corrs,
                     std::span<const int> subset, const CameraIntrinsics& K) {
    if (subset.empty()) return std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (int i : subset) sum += reprojection_error(pose, corrs[static_cast<std::size_t>(i)], K);
    return sum / static_cast<double>(subset.size());
}

}  // namespace

PnPResult ransac_pnp(std::span<const Correspondence> corrs, const CameraIntrinsics& K,
                     const RansacConfig& cfg) {
    const int n = static_cast<int>(corrs.size());
    if (cfg.sample_size < 4) throw std::invalid_argument("ransac_pnp: sample_size must be >= 4");
    if (cfg.min_inliers < 4) throw std::invalid_argument("ransac_pnp: min_inliers must be >= 4");
    if (n < cfg.sample_size) throw std::invalid_argument("ransac_pnp: fewer correspondences than sample_size");

    const EpnpOptions epnp_opts;
    Pose best_pose;
    std::vector<int> best_inliers;
    double best_mean = std::numeric_limits<double>::infinity();
    bool found = false;

    std::vector<Correspondence> sample(static_cast<std::size_t>(cfg.sample_size));
    std::vector<int> inliers;
    inliers.reserve(static_cast<std::size_t>(n));

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(iter)));
        const std::vector<int> idx = rng.sample_distinct(n, cfg.sample_size);
        for (int k = 0; k < cfg.sample_size; ++k) {
            sample[static_cast<std::size_t>(k)] = corrs[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])];
        }

        const auto pose = try_epnp_solve(sample, K, epnp_opts);
        if (!pose) continue;

        inliers.clear();
        for (int i = 0; i < n; ++i) {
            if (reprojection_error(*pose, corrs[static_cast<std::size_t>(i)], K) < cfg.reproj_threshold) {
                inliers.push_back(i);
            }
        }
        const double mean = mean_residual(*pose, corrs, inliers, K);
        if (!found || inliers.size() > best_inliers.size() ||
            (inliers.size() == best_inliers.size() && mean < best_mean)) {
            found = true;
            best_pose = *pose;
            best_inliers = inliers;
            best_mean = mean;
        }
        // A full consensus cannot be improved on count, and the final pose is
        // the refit on that same set either way.
        if (static_cast<int>(best_inliers.size()) == n) break;
    }

    PnPResult result;
    if (!found || static_cast<int>(best_inliers.size()) < cfg.min_inliers) {
        result.degenerate = true;
        result.inliers = best_inliers;
        result.mean_reproj_error = std::numeric_limits<double>::infinity();
        return result;
    }

    std::vector<Correspondence> consensus;
    consensus.reserve(best_inliers.size());
    for (int i : best_inliers) consensus.push_back(corrs[static_cast<std::size_t>(i)]);
    if (const auto refit = try_epnp_solve(consensus, K, epnp_opts)) best_pose = *refit;

    result.pose = best_pose;
    result.inliers = std::move(best_inliers);
    result.mean_reproj_error = mean_residual(best_pose, corrs, result.inliers, K);
    return result;
}

std::vector<Correspondence> make_correspondences(const KeypointSet& kps, const LandmarkSet& landmarks,
                                                 Channel channel) {
    if (kps.count() != landmarks.count()) {
        throw std::invalid_argument("make_correspondences: keypoint/landmark count mismatch");
    }
    std::vector<Correspondence> out;
    out.reserve(static_cast<std::size_t>(kps.count()));
    for (Eigen::Index i = 0; i < kps.count(); ++i) {
        if (!kps.is_valid(i)) continue;
        out.push_back({landmarks.points.col(i), kps.points.col(i), channel, static_cast<int>(i)});
    }
    return out;
}

std::vector<Correspondence> fuse_correspondences(const KeypointSet& rgb, const KeypointSet& event,
                                                 const LandmarkSet& landmarks) {
    if (rgb.count() != landmarks.count() || event.count() != landmarks.count()) {
        throw std::invalid_argument("fuse_correspondences: channel Z mismatch");
    }
    std::vector<Correspondence> out = make_correspondences(rgb, landmarks, Channel::Rgb);
    const std::vector<Correspondence> ev = make_correspondences(event, landmarks, Channel::Event);
    out.insert(out.end(), ev.begin(), ev.end());
    return out;
}

}  // namespace fusepose
