#pragma once

#include "fusepose/geometry.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace fusepose {

enum class Channel { Rgb, Event };

const char* to_string(Channel c);

// One 2D observation of a 3D landmark. The same landmark_id may appear once
// per channel; that duplication is the cross-modal fusion mechanism.
struct Correspondence {
    Eigen::Vector3d p3 = Eigen::Vector3d::Zero();  // model frame, meters
    Eigen::Vector2d p2 = Eigen::Vector2d::Zero();  // pixels, undistorted
    Channel channel = Channel::Rgb;
    int landmark_id = 0;
};

struct RansacConfig {
    int iterations = 10000;
    double reproj_threshold = 20.0;  // px
    int min_inliers = 4;
    int sample_size = 4;
    std::uint64_t seed = 0;
};

// Degenerate results carry the zero-pose convention (identity rotation, zero
// translation) behind an explicit flag.
struct PnPResult {
    Pose pose;
    std::vector<int> inliers;  // indices into the correspondence list
    bool degenerate = false;
    double mean_reproj_error = 0.0;  // px, over the inlier set
};

struct EpnpOptions {
    bool gauss_newton = true;
    int gn_iterations = 5;
};

// Solver-level failure (rank-deficient control points, no candidate with
// positive depths). Distinct from RANSAC consensus degeneracy.
class SolverFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// EPnP (4 control points, barycentric coordinates, null space of the 12x12
// system, beta cases N in {1..4} scored by reprojection error, optional
// Gauss-Newton refinement, closed-form absolute orientation).
Pose epnp_solve(std::span<const Correspondence> corrs, const CameraIntrinsics& K,
                const EpnpOptions& opts = {});

// Non-throwing variant used inside the RANSAC loop.
std::optional<Pose> try_epnp_solve(std::span<const Correspondence> corrs, const CameraIntrinsics& K,
                                   const EpnpOptions& opts = {});

// Euclidean pixel distance between the reprojection and the observation;
// +infinity when the point lands at non-positive depth.
double reprojection_error(const Pose& pose, const Correspondence& c, const CameraIntrinsics& K);

// Seeded hypothesize-and-verify loop. Best model by inlier count, ties broken
// by lower mean residual then earlier iteration; the winner is refit on its
// consensus set. Deterministic for a fixed seed (per-iteration derived
// streams, so a parallel schedule would agree with the serial one).
PnPResult ransac_pnp(std::span<const Correspondence> corrs, const CameraIntrinsics& K,
                     const RansacConfig& cfg);

// Correspondences for one channel; invalid keypoints are dropped.
std::vector<Correspondence> make_correspondences(const KeypointSet& kps, const LandmarkSet& landmarks,
                                                 Channel channel);

// Concatenation [rgb, event] against duplicated landmarks.
std::vector<Correspondence> fuse_correspondences(const KeypointSet& rgb, const KeypointSet& event,
                                                 const LandmarkSet& landmarks);

}  // namespace fusepose
