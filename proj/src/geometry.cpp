#include "fusepose/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace fusepose {

namespace {

Eigen::Quaterniond canonical(Eigen::Quaterniond q) {
    const double n = q.norm();
    if (n < 1e-12) throw std::invalid_argument("Pose: zero quaternion");
    q.coeffs() /= n;
    if (q.w() < 0.0 || (q.w() == 0.0 && (q.x() < 0.0 || (q.x() == 0.0 && (q.y() < 0.0 || (q.y() == 0.0 && q.z() < 0.0)))))) {
        q.coeffs() = -q.coeffs();
    }
    return q;
}

}  // namespace

Pose::Pose(const Eigen::Quaterniond& q, const Eigen::Vector3d& t) : q_(canonical(q)), t_(t) {}

Pose::Pose(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& t)
    : q_(canonical(Eigen::Quaterniond(rotation))), t_(t) {}

Pose Pose::compose(const Pose& rhs) const {
    return Pose(q_ * rhs.q_, q_ * rhs.t_ + t_);
}

Pose Pose::inverse() const {
    const Eigen::Quaterniond qi = q_.conjugate();
    return Pose(qi, -(qi * t_));
}

Eigen::Index KeypointSet::valid_count() const {
    Eigen::Index n = 0;
    for (char v : valid) n += v != 0;
    return n;
}

Eigen::Vector2d distort_normalized(const Eigen::Vector2d& n, const CameraIntrinsics& K) {
    const double k1 = K.dist[0], k2 = K.dist[1], k3 = K.dist[2];
    const double p1 = K.dist[3], p2 = K.dist[4];
    const double x = n.x(), y = n.y();
    const double r2 = x * x + y * y;
    const double radial = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3));
    return {x * radial + 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x),
            y * radial + p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y};
}

Eigen::Vector2d project_point(const Eigen::Vector3d& p_camera, const CameraIntrinsics& K,
                              bool apply_distortion) {
    if (p_camera.z() <= 0.0) throw std::invalid_argument("project_point: non-positive depth");
    Eigen::Vector2d n = p_camera.head<2>() / p_camera.z();
    if (apply_distortion) n = distort_normalized(n, K);
    return {K.fx * n.x() + K.cx, K.fy * n.y() + K.cy};
}

KeypointSet project(const LandmarkSet& landmarks, const Pose& pose, const CameraIntrinsics& K,
                    bool apply_distortion) {
    KeypointSet out(landmarks.count());
    for (Eigen::Index i = 0; i < landmarks.count(); ++i) {
        const Eigen::Vector3d pc = pose.apply(landmarks.points.col(i));
        if (pc.z() <= 0.0) {
            out.valid[static_cast<std::size_t>(i)] = 0;
            continue;
        }
        out.points.col(i) = project_point(pc, K, apply_distortion);
    }
    return out;
}

namespace {

// 1D least squares y ~ a*x + b; var(x) returned so callers can reject
// degenerate configurations.
void fit_line(const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& y, double& a, double& b,
              double& var_x) {
    const double n = static_cast<double>(x.size());
    const double mx = x.mean(), my = y.mean();
    const double sxx = (x.array() - mx).square().sum();
    const double sxy = ((x.array() - mx) * (y.array() - my)).sum();
    var_x = sxx / n;
    a = sxx > 0.0 ? sxy / sxx : 0.0;
    b = my - a * mx;
}

}  // namespace

AffineWarp fit_alignment(const Eigen::Matrix2Xd& src, const Eigen::Matrix2Xd& dst,
                         double* residual_rms) {
    if (src.cols() != dst.cols()) throw std::invalid_argument("fit_alignment: size mismatch");
    if (src.cols() < 2) throw std::invalid_argument("fit_alignment: need at least 2 correspondences");

    AffineWarp w;
    double var_x = 0.0, var_y = 0.0;
    fit_line(src.row(0), dst.row(0), w.sx, w.tx, var_x);
    fit_line(src.row(1), dst.row(1), w.sy, w.ty, var_y);
    if (var_x <= 0.0 || var_y <= 0.0) {
        throw std::runtime_error("fit_alignment: degenerate source configuration (zero variance)");
    }
    if (w.sx <= 0.0 || w.sy <= 0.0) {
        throw std::runtime_error("fit_alignment: fitted non-positive scale");
    }
    if (residual_rms != nullptr) {
        double ss = 0.0;
        for (Eigen::Index i = 0; i < src.cols(); ++i) {
            ss += (w.apply(src.col(i)) - dst.col(i)).squaredNorm();
        }
        *residual_rms = std::sqrt(ss / static_cast<double>(src.cols()));
    }
    return w;
}

Eigen::Matrix<double, 2, 3> fit_affine_full(const Eigen::Matrix2Xd& src, const Eigen::Matrix2Xd& dst,
                                            double* residual_rms) {
    if (src.cols() != dst.cols()) throw std::invalid_argument("fit_affine_full: size mismatch");
    if (src.cols() < 3) throw std::invalid_argument("fit_affine_full: need at least 3 correspondences");

    Eigen::MatrixXd A(src.cols(), 3);
    A.col(0) = src.row(0).transpose();
    A.col(1) = src.row(1).transpose();
    A.col(2).setOnes();
    const Eigen::MatrixXd sol = A.colPivHouseholderQr().solve(dst.transpose());  // 3x2
    Eigen::Matrix<double, 2, 3> M = sol.transpose();
    if (residual_rms != nullptr) {
        const Eigen::MatrixXd res = A * sol - dst.transpose();
        *residual_rms = std::sqrt(res.rowwise().squaredNorm().mean());
    }
    return M;
}

KeypointSet warp_points(const KeypointSet& kps, const AffineWarp& warp) {
    KeypointSet out = kps;
    for (Eigen::Index i = 0; i < kps.count(); ++i) {
        out.points.col(i) = warp.apply(kps.points.col(i));
    }
    return out;
}

EventFrame warp_frame(const EventFrame& frame, const AffineWarp& warp, int out_width,
                      int out_height) {
    if (out_width <= 0) out_width = frame.width;
    if (out_height <= 0) out_height = frame.height;

    EventFrame out;
    out.width = out_width;
    out.height = out_height;
    out.window_start = frame.window_start;
    out.window_end = frame.window_end;
    out.encoding = frame.encoding;
    out.values = Eigen::MatrixXd::Zero(out_height, out_width);
    if (frame.empty) {
        out.empty = true;
        return out;
    }

    const AffineWarp inv = warp.inverse();
    for (int yo = 0; yo < out_height; ++yo) {
        for (int xo = 0; xo < out_width; ++xo) {
            const Eigen::Vector2d s = inv.apply({static_cast<double>(xo), static_cast<double>(yo)});
            const double xf = std::floor(s.x());
            const double yf = std::floor(s.y());
            const int x0 = static_cast<int>(xf);
            const int y0 = static_cast<int>(yf);
            const double ax = s.x() - xf;
            const double ay = s.y() - yf;
            auto sample = [&](int x, int y) -> double {
                if (x < 0 || y < 0 || x >= frame.width || y >= frame.height) return 0.0;
                return frame.values(y, x);
            };
            out.values(yo, xo) = (1.0 - ax) * (1.0 - ay) * sample(x0, y0) +
                                 ax * (1.0 - ay) * sample(x0 + 1, y0) +
                                 (1.0 - ax) * ay * sample(x0, y0 + 1) +
                                 ax * ay * sample(x0 + 1, y0 + 1);
        }
    }
    out.empty = out.values.maxCoeff() == 0.0 && out.values.minCoeff() == 0.0;
    return out;
}

KeypointSet undistort_points(const KeypointSet& kps, const CameraIntrinsics& K) {
    if (!K.dist.allFinite()) throw std::invalid_argument("undistort_points: non-finite coefficients");

    constexpr int kMaxIterations = 20;
    const double tol_norm = 1e-8 / std::max(K.fx, K.fy);  // 1e-8 px in normalized units

    KeypointSet out = kps;
    for (Eigen::Index i = 0; i < kps.count(); ++i) {
        if (!kps.is_valid(i)) continue;
        const Eigen::Vector2d d{(kps.points(0, i) - K.cx) / K.fx, (kps.points(1, i) - K.cy) / K.fy};
        Eigen::Vector2d n = d;
        bool converged = !K.has_distortion();
        for (int it = 0; it < kMaxIterations && !converged; ++it) {
            const double k1 = K.dist[0], k2 = K.dist[1], k3 = K.dist[2];
            const double p1 = K.dist[3], p2 = K.dist[4];
            const double r2 = n.squaredNorm();
            const double radial = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3));
            const Eigen::Vector2d tangential{2.0 * p1 * n.x() * n.y() + p2 * (r2 + 2.0 * n.x() * n.x()),
                                             p1 * (r2 + 2.0 * n.y() * n.y()) + 2.0 * p2 * n.x() * n.y()};
            const Eigen::Vector2d next = (d - tangential) / radial;
            converged = (next - n).norm() < tol_norm;
            n = next;
        }
        if (!converged) {
            out.valid[static_cast<std::size_t>(i)] = 0;
            continue;
        }
        out.points.col(i) = Eigen::Vector2d{K.fx * n.x() + K.cx, K.fy * n.y() + K.cy};
    }
    return out;
}

double quat_angle_deg(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b) {
    const double na = a.norm(), nb = b.norm();
    if (na < 1e-12 || nb < 1e-12) throw std::invalid_argument("quat_angle_deg: zero quaternion");
    const double d = std::abs(a.coeffs().dot(b.coeffs()) / (na * nb));
    return 2.0 * std::acos(std::min(1.0, d)) * 180.0 / EIGEN_PI;
}

}  // namespace fusepose
