#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "fusepose/event.hpp"

#include <vector>

namespace fusepose {

// Pinhole camera with Brown-Conrady radial-tangential distortion.
struct CameraIntrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    Eigen::Matrix<double, 5, 1> dist = Eigen::Matrix<double, 5, 1>::Zero();  // k1 k2 k3 p1 p2

    bool has_distortion() const { return dist.cwiseAbs().maxCoeff() > 0.0; }
};

// Rigid transform of the object into the chaser camera frame. The quaternion
// is kept unit-norm and sign-canonical (w >= 0); all angle math downstream is
// sign-invariant regardless.
class Pose {
public:
    Pose() : q_(Eigen::Quaterniond::Identity()), t_(Eigen::Vector3d::Zero()) {}
    Pose(const Eigen::Quaterniond& q, const Eigen::Vector3d& t);
    Pose(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& t);

    const Eigen::Quaterniond& rotation() const { return q_; }
    const Eigen::Vector3d& translation() const { return t_; }
    Eigen::Matrix3d rotation_matrix() const { return q_.toRotationMatrix(); }

    Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return q_ * p + t_; }

    Pose compose(const Pose& rhs) const;  // this after rhs: apply(p) = this(rhs(p))
    Pose inverse() const;

private:
    Eigen::Quaterniond q_;
    Eigen::Vector3d t_;
};

// Translation + per-axis scale mapping event pixels into RGB pixel space.
struct AffineWarp {
    double sx = 1.0;
    double sy = 1.0;
    double tx = 0.0;
    double ty = 0.0;

    Eigen::Vector2d apply(const Eigen::Vector2d& p) const {
        return {sx * p.x() + tx, sy * p.y() + ty};
    }
    AffineWarp inverse() const { return {1.0 / sx, 1.0 / sy, -tx / sx, -ty / sy}; }
    bool is_identity() const { return sx == 1.0 && sy == 1.0 && tx == 0.0 && ty == 0.0; }
};

// Z pre-selected 3D model points, one per column.
struct LandmarkSet {
    Eigen::Matrix3Xd points;

    Eigen::Index count() const { return points.cols(); }
};

// Z 2D observations paired with a LandmarkSet; invalid entries are excluded
// from every estimator.
struct KeypointSet {
    Eigen::Matrix2Xd points;
    std::vector<char> valid;

    KeypointSet() = default;
    explicit KeypointSet(Eigen::Index z)
        : points(Eigen::Matrix2Xd::Zero(2, z)), valid(static_cast<std::size_t>(z), 1) {}

    Eigen::Index count() const { return points.cols(); }
    Eigen::Index valid_count() const;
    bool is_valid(Eigen::Index i) const { return valid[static_cast<std::size_t>(i)] != 0; }
};

// Projects landmarks through the pose. Points with non-positive depth are
// marked invalid rather than raising.
KeypointSet project(const LandmarkSet& landmarks, const Pose& pose, const CameraIntrinsics& K,
                    bool apply_distortion = false);

// Single camera-frame point, depth must be positive.
Eigen::Vector2d project_point(const Eigen::Vector3d& p_camera, const CameraIntrinsics& K,
                              bool apply_distortion = false);

// Forward Brown-Conrady model on normalized coordinates.
Eigen::Vector2d distort_normalized(const Eigen::Vector2d& n, const CameraIntrinsics& K);

// Least-squares fit of dst ~ (sx*x + tx, sy*y + ty). Throws on a degenerate
// (zero-variance) source configuration. Residual RMS reported when requested.
AffineWarp fit_alignment(const Eigen::Matrix2Xd& src, const Eigen::Matrix2Xd& dst,
                         double* residual_rms = nullptr);

// Full 6-DOF affine fit (rotation/shear allowed), available for robustness
// studies; returns [A | b] with dst ~ A*src + b.
Eigen::Matrix<double, 2, 3> fit_affine_full(const Eigen::Matrix2Xd& src, const Eigen::Matrix2Xd& dst,
                                            double* residual_rms = nullptr);

KeypointSet warp_points(const KeypointSet& kps, const AffineWarp& warp);

// Inverse-mapped bilinear resampling, out-of-bounds source cells read as 0.
// Output dimensions default to the input's.
EventFrame warp_frame(const EventFrame& frame, const AffineWarp& warp, int out_width = -1,
                      int out_height = -1);

// Iterative inversion of the distortion model (fixed-point, capped); points
// that fail to converge are flagged invalid.
KeypointSet undistort_points(const KeypointSet& kps, const CameraIntrinsics& K);

// Geodesic orientation distance 2*acos(|<a, b>|) in degrees, in [0, 180].
double quat_angle_deg(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b);

}  // namespace fusepose
