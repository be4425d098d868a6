#include "fusepose/pnp.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <limits>

namespace fusepose {

namespace {

using Matrix12d = Eigen::Matrix<double, 12, 12>;
using Vector12d = Eigen::Matrix<double, 12, 1>;
using Vector6d = Eigen::Matrix<double, 6, 1>;
using Vector4d = Eigen::Vector4d;

constexpr std::array<std::pair<int, int>, 6> kControlPairs = {
    {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

struct NullBasis {
    // columns of the 12x12 eigenbasis with the 4 smallest eigenvalues,
    // reshaped to 4 control-point displacements each
    std::array<std::array<Eigen::Vector3d, 4>, 4> v;
};

std::array<Eigen::Vector3d, 4> control_points_for(const NullBasis& basis, const Vector4d& betas) {
    std::array<Eigen::Vector3d, 4> cc;
    for (int i = 0; i < 4; ++i) {
        cc[static_cast<std::size_t>(i)].setZero();
        for (int k = 0; k < 4; ++k) {
            cc[static_cast<std::size_t>(i)] +=
                betas[k] * basis.v[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
        }
    }
    return cc;
}

// Least-squares beta initializations for the N = 1, 2, 3, 4 combination
// cases. L maps quadratic beta terms onto the six control-point squared
// distances rho.
Vector4d betas_case1(const Eigen::Matrix<double, 6, 10>& L, const Vector6d& rho) {
    double num = 0.0, den = 0.0;
    for (int r = 0; r < 6; ++r) {
        num += L(r, 0) * rho[r];
        den += L(r, 0) * L(r, 0);
    }
    const double b11 = den > 0.0 ? num / den : 0.0;
    return {std::sqrt(std::abs(b11)), 0.0, 0.0, 0.0};
}

Vector4d betas_case2(const Eigen::Matrix<double, 6, 10>& L, const Vector6d& rho) {
    Eigen::Matrix<double, 6, 3> A;
    A.col(0) = L.col(0);  // b11
    A.col(1) = L.col(1);  // b12
    A.col(2) = L.col(4);  // b22
    const Eigen::Vector3d y = A.colPivHouseholderQr().solve(rho);
    Vector4d betas = Vector4d::Zero();
    betas[0] = std::sqrt(std::abs(y[0]));
    betas[1] = std::sqrt(std::abs(y[2]));
    if (y[1] < 0.0) betas[1] = -betas[1];
    return betas;
}

Vector4d betas_case3(const Eigen::Matrix<double, 6, 10>& L, const Vector6d& rho) {
    Eigen::Matrix<double, 6, 5> A;
    A.col(0) = L.col(0);  // b11
    A.col(1) = L.col(1);  // b12
    A.col(2) = L.col(4);  // b22
    A.col(3) = L.col(2);  // b13
    A.col(4) = L.col(5);  // b23
    const Eigen::Matrix<double, 5, 1> y = A.colPivHouseholderQr().solve(rho);
    Vector4d betas = Vector4d::Zero();
    betas[0] = std::sqrt(std::abs(y[0]));
    betas[1] = std::sqrt(std::abs(y[2]));
    if (y[1] < 0.0) betas[1] = -betas[1];
    betas[2] = betas[0] > 1e-12 ? y[3] / betas[0] : 0.0;
    return betas;
}

Vector4d betas_case4(const Eigen::Matrix<double, 6, 10>& L, const Vector6d& rho) {
    Eigen::Matrix<double, 6, 4> A;
    A.col(0) = L.col(0);  // b11
    A.col(1) = L.col(1);  // b12
    A.col(2) = L.col(2);  // b13
    A.col(3) = L.col(3);  // b14
    const Vector4d y = A.colPivHouseholderQr().solve(rho);
    Vector4d betas = Vector4d::Zero();
    const double b1 = std::sqrt(std::abs(y[0]));
    betas[0] = b1;
    if (b1 > 1e-12) {
        betas[1] = y[1] / b1;
        betas[2] = y[2] / b1;
        betas[3] = y[3] / b1;
    }
    return betas;
}

// Refines betas against the control-point distance constraints.
void gauss_newton(const NullBasis& basis, const Vector6d& rho, int iterations, Vector4d& betas) {
    for (int it = 0; it < iterations; ++it) {
        Eigen::Matrix<double, 6, 4> J;
        Vector6d r;
        const auto cc = control_points_for(basis, betas);
        for (int row = 0; row < 6; ++row) {
            const auto [i, j] = kControlPairs[static_cast<std::size_t>(row)];
            const Eigen::Vector3d d = cc[static_cast<std::size_t>(i)] - cc[static_cast<std::size_t>(j)];
            r[row] = d.squaredNorm() - rho[row];
            for (int k = 0; k < 4; ++k) {
                const Eigen::Vector3d dv = basis.v[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] -
                                           basis.v[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
                J(row, k) = 2.0 * d.dot(dv);
            }
        }
        const Eigen::Matrix4d JtJ = J.transpose() * J;
        const Vector4d g = J.transpose() * r;
        const Vector4d step = JtJ.ldlt().solve(g);
        if (!step.allFinite()) break;
        betas -= step;
    }
}

// Rigid alignment (Kabsch) taking model points onto camera points.
Pose absolute_orientation(const Eigen::Matrix3Xd& model, const Eigen::Matrix3Xd& camera) {
    const Eigen::Vector3d mm = model.rowwise().mean();
    const Eigen::Vector3d mc = camera.rowwise().mean();
    const Eigen::Matrix3d H = (model.colwise() - mm) * (camera.colwise() - mc).transpose();
    const Eigen::JacobiSVD<Eigen::Matrix3d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d R = svd.matrixV() * svd.matrixU().transpose();
    if (R.determinant() < 0.0) {
        Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
        flip(2, 2) = -1.0;
        R = svd.matrixV() * flip * svd.matrixU().transpose();
    }
    return Pose(R, mc - R * mm);
}

double reprojection_rms(const Pose& pose, std::span<const Correspondence> corrs,
                        const CameraIntrinsics& K) {
    double ss = 0.0;
    for (const Correspondence& c : corrs) {
        const Eigen::Vector3d pc = pose.apply(c.p3);
        if (pc.z() <= 0.0) return std::numeric_limits<double>::infinity();
        ss += (project_point(pc, K) - c.p2).squaredNorm();
    }
    return std::sqrt(ss / static_cast<double>(corrs.size()));
}

}  // namespace

std::optional<Pose> try_epnp_solve(std::span<const Correspondence> corrs, const CameraIntrinsics& K,
                                   const EpnpOptions& opts) {
    const Eigen::Index n = static_cast<Eigen::Index>(corrs.size());
    if (n < 4) return std::nullopt;

    Eigen::Matrix3Xd pw(3, n);
    for (Eigen::Index i = 0; i < n; ++i) pw.col(i) = corrs[static_cast<std::size_t>(i)].p3;

    // control points: centroid + principal directions of the point cloud
    const Eigen::Vector3d c0 = pw.rowwise().mean();
    const Eigen::Matrix3Xd centered = pw.colwise() - c0;
    const Eigen::Matrix3d scatter = centered * centered.transpose() / static_cast<double>(n);
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(scatter);
    if (es.info() != Eigen::Success) return std::nullopt;
    const Eigen::Vector3d evals = es.eigenvalues();  // ascending
    if (evals[2] <= 0.0 || evals[0] <= 1e-9 * evals[2]) {
        return std::nullopt;  // coplanar or collapsed configuration
    }

    std::array<Eigen::Vector3d, 4> cw;
    cw[0] = c0;
    for (int k = 0; k < 3; ++k) {
        cw[static_cast<std::size_t>(k + 1)] = c0 + std::sqrt(evals[2 - k]) * es.eigenvectors().col(2 - k);
    }

    // barycentric coordinates of every point in the control-point basis
    Eigen::Matrix3d C;
    for (int k = 0; k < 3; ++k) C.col(k) = cw[static_cast<std::size_t>(k + 1)] - cw[0];
    const Eigen::Matrix3d Cinv = C.inverse();
    Eigen::MatrixX4d alphas(n, 4);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Vector3d b = Cinv * (pw.col(i) - c0);
        alphas(i, 1) = b[0];
        alphas(i, 2) = b[1];
        alphas(i, 3) = b[2];
        alphas(i, 0) = 1.0 - b.sum();
    }

    // 2n x 12 projection constraints
    Eigen::MatrixXd M(2 * n, 12);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Vector2d& uv = corrs[static_cast<std::size_t>(i)].p2;
        for (int j = 0; j < 4; ++j) {
            const double a = alphas(i, j);
            M(2 * i, 3 * j + 0) = a * K.fx;
            M(2 * i, 3 * j + 1) = 0.0;
            M(2 * i, 3 * j + 2) = a * (K.cx - uv.x());
            M(2 * i + 1, 3 * j + 0) = 0.0;
            M(2 * i + 1, 3 * j + 1) = a * K.fy;
            M(2 * i + 1, 3 * j + 2) = a * (K.cy - uv.y());
        }
    }

    const Matrix12d MtM = M.transpose() * M;
    const Eigen::SelfAdjointEigenSolver<Matrix12d> es12(MtM);
    if (es12.info() != Eigen::Success) return std::nullopt;

    NullBasis basis;
    for (int k = 0; k < 4; ++k) {
        const Vector12d col = es12.eigenvectors().col(k);
        for (int i = 0; i < 4; ++i) {
            basis.v[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] = col.segment<3>(3 * i);
        }
    }

    Vector6d rho;
    Eigen::Matrix<double, 6, 10> L;
    // quadratic term order: b11 b12 b13 b14 b22 b23 b24 b33 b34 b44
    for (int row = 0; row < 6; ++row) {
        const auto [i, j] = kControlPairs[static_cast<std::size_t>(row)];
        rho[row] = (cw[static_cast<std::size_t>(i)] - cw[static_cast<std::size_t>(j)]).squaredNorm();
        std::array<Eigen::Vector3d, 4> dv;
        for (int k = 0; k < 4; ++k) {
            dv[static_cast<std::size_t>(k)] = basis.v[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] -
                                              basis.v[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
        }
        int col = 0;
        for (int a = 0; a < 4; ++a) {
            for (int b = a; b < 4; ++b) {
                const double dot = dv[static_cast<std::size_t>(a)].dot(dv[static_cast<std::size_t>(b)]);
                L(row, col++) = a == b ? dot : 2.0 * dot;
            }
        }
    }

    const std::array<Vector4d, 4> seeds = {betas_case1(L, rho), betas_case2(L, rho),
                                           betas_case3(L, rho), betas_case4(L, rho)};

    std::optional<Pose> best;
    double best_rms = std::numeric_limits<double>::infinity();
    for (Vector4d betas : seeds) {
        if (opts.gauss_newton) gauss_newton(basis, rho, opts.gn_iterations, betas);

        auto cc = control_points_for(basis, betas);
        Eigen::Matrix3Xd pc(3, n);
        double depth_sum = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            pc.col(i) = alphas(i, 0) * cc[0] + alphas(i, 1) * cc[1] + alphas(i, 2) * cc[2] +
                        alphas(i, 3) * cc[3];
            depth_sum += pc(2, i);
        }
        if (depth_sum < 0.0) pc = -pc;  // beta sign ambiguity

        Pose candidate = absolute_orientation(pw, pc);
        const double rms = reprojection_rms(candidate, corrs, K);
        if (rms < best_rms) {
            best_rms = rms;
            best = candidate;
        }
    }
    if (!best || !std::isfinite(best_rms)) return std::nullopt;
    return best;
}

Pose epnp_solve(std::span<const Correspondence> corrs, const CameraIntrinsics& K,
                const EpnpOptions& opts) {
    if (corrs.size() < 4) throw std::invalid_argument("epnp_solve: need at least 4 correspondences");
    const auto pose = try_epnp_solve(corrs, K, opts);
    if (!pose) throw SolverFailure("epnp_solve: rank-deficient or depth-infeasible configuration");
    return *pose;
}

double reprojection_error(const Pose& pose, const Correspondence& c, const CameraIntrinsics& K) {
    const Eigen::Vector3d pc = pose.apply(c.p3);
    if (pc.z() <= 0.0) return std::numeric_limits<double>::infinity();
    return (project_point(pc, K) - c.p2).norm();
}

}  // namespace fusepose
