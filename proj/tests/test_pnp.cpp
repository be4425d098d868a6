#include "fusepose/pnp.hpp"

#include "fusepose/rng.hpp"
#include "fusepose/simkit.hpp"

#include <doctest.h>

#include <algorithm>
#include <functional>
#include <numbers>

using namespace fusepose;

namespace {

CameraIntrinsics bench_k() {
    CameraIntrinsics k;
    k.fx = k.fy = 800.0;
    k.cx = 400.0;
    k.cy = 360.0;
    return k;
}

Pose random_viewing_pose(Rng& rng) {
    Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    q.normalize();
    return Pose(q, Eigen::Vector3d(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1),
                                   rng.uniform(2.0, 5.0)));
}

std::vector<Correspondence> project_landmarks(const LandmarkSet& lm, const Pose& pose,
                                              const CameraIntrinsics& k) {
    std::vector<Correspondence> corrs;
    for (Eigen::Index i = 0; i < lm.count(); ++i) {
        const Eigen::Vector3d pc = pose.apply(lm.points.col(i));
        REQUIRE(pc.z() > 0.0);
        corrs.push_back({lm.points.col(i), project_point(pc, k), Channel::Rgb, static_cast<int>(i)});
    }
    return corrs;
}

// Exhaustive RANSAC stand-in: scores every sample_size-subset with the same
// threshold and tie-break rule, then refits on the winning consensus set.
// Kept brute-force on purpose; it must not share the sampling path it checks.
PnPResult exhaustive_pnp(std::span<const Correspondence> corrs, const CameraIntrinsics& k,
                         const RansacConfig& cfg) {
    const int n = static_cast<int>(corrs.size());
    std::vector<int> subset(static_cast<std::size_t>(cfg.sample_size));
    std::vector<int> best_inliers;
    double best_mean = std::numeric_limits<double>::infinity();
    Pose best_pose;
    bool found = false;

    const std::function<void(int, int)> visit = [&](int start, int depth) {
        if (depth == cfg.sample_size) {
            std::vector<Correspondence> sample;
            for (int idx : subset) sample.push_back(corrs[static_cast<std::size_t>(idx)]);
            const auto pose = try_epnp_solve(sample, k);
            if (!pose) return;
            std::vector<int> inliers;
            double sum = 0.0;
            for (int i = 0; i < n; ++i) {
                const double r = reprojection_error(*pose, corrs[static_cast<std::size_t>(i)], k);
                if (r < cfg.reproj_threshold) {
                    inliers.push_back(i);
                    sum += r;
                }
            }
            const double mean = inliers.empty() ? std::numeric_limits<double>::infinity()
                                                : sum / static_cast<double>(inliers.size());
            if (!found || inliers.size() > best_inliers.size() ||
                (inliers.size() == best_inliers.size() && mean < best_mean)) {
                found = true;
                best_inliers = inliers;
                best_mean = mean;
                best_pose = *pose;
            }
            return;
        }
        for (int i = start; i < n; ++i) {
            subset[static_cast<std::size_t>(depth)] = i;
            visit(i + 1, depth + 1);
        }
    };
    visit(0, 0);

    PnPResult result;
    if (!found || static_cast<int>(best_inliers.size()) < cfg.min_inliers) {
        result.degenerate = true;
        result.inliers = best_inliers;
        return result;
    }
    std::vector<Correspondence> consensus;
    for (int i : best_inliers) consensus.push_back(corrs[static_cast<std::size_t>(i)]);
    if (const auto refit = try_epnp_solve(consensus, k)) best_pose = *refit;
    result.pose = best_pose;
    result.inliers = best_inliers;
    return result;
}

}  // namespace

TEST_CASE("epnp noiseless round-trip on 8 landmarks") {
    Rng rng(42);
    const CameraIntrinsics k = bench_k();
    const LandmarkSet lm = generate_landmarks(8, 0.5, 12345);
    for (int trial = 0; trial < 20; ++trial) {
        const Pose truth = random_viewing_pose(rng);
        const auto corrs = project_landmarks(lm, truth, k);
        const Pose est = epnp_solve(corrs, k);
        CHECK(quat_angle_deg(truth.rotation(), est.rotation()) < 1e-4);
        CHECK((truth.translation() - est.translation()).norm() < 1e-6);
    }
}

TEST_CASE("epnp recovers an axis-aligned fixture near-exactly") {
    const CameraIntrinsics k = bench_k();
    LandmarkSet lm;
    lm.points.resize(3, 8);
    lm.points << -0.2, 0.2, 0.2, -0.2, -0.15, 0.15, 0.1, -0.1,
                 -0.2, -0.2, 0.2, 0.2, -0.1, -0.12, 0.18, 0.14,
                 -0.1, -0.15, 0.1, 0.15, 0.12, -0.05, 0.08, -0.14;
    const Pose truth(Eigen::Quaterniond::Identity(), Eigen::Vector3d(0, 0, 1));
    const auto corrs = project_landmarks(lm, truth, k);
    const Pose est = epnp_solve(corrs, k);
    CHECK((est.translation() - Eigen::Vector3d(0, 0, 1)).norm() < 1e-9);
    CHECK(quat_angle_deg(truth.rotation(), est.rotation()) < 1e-7);
}

TEST_CASE("epnp with 1px noise stays under half a degree at the 95th percentile") {
    Rng rng(7);
    const CameraIntrinsics k = bench_k();
    const LandmarkSet lm = generate_landmarks(18, 0.6, 77);
    std::vector<double> rot_errors;
    for (int trial = 0; trial < 100; ++trial) {
        const Pose truth(Eigen::Quaterniond::Identity(), Eigen::Vector3d(0, 0, 1.0));
        auto corrs = project_landmarks(lm, truth, k);
        for (auto& c : corrs) {
            c.p2.x() += rng.normal(0.0, 1.0);
            c.p2.y() += rng.normal(0.0, 1.0);
        }
        const Pose est = epnp_solve(corrs, k);
        rot_errors.push_back(quat_angle_deg(truth.rotation(), est.rotation()));
    }
    std::sort(rot_errors.begin(), rot_errors.end());
    CHECK(rot_errors[94] < 0.5);
}

TEST_CASE("epnp rejects coplanar configurations with a solver failure") {
    const CameraIntrinsics k = bench_k();
    std::vector<Correspondence> corrs;
    for (int i = 0; i < 6; ++i) {
        const Eigen::Vector3d p(0.1 * i, 0.05 * (i % 3), 0.0);  // all in the z=0 plane
        corrs.push_back({p, Eigen::Vector2d(100.0 + 10.0 * i, 200.0), Channel::Rgb, i});
    }
    CHECK_THROWS_AS(epnp_solve(corrs, k), SolverFailure);
    CHECK_THROWS_AS(epnp_solve(std::vector<Correspondence>{}, k), std::invalid_argument);
}

TEST_CASE("epnp equivariance under rigid re-parameterization of the model frame") {
    Rng rng(55);
    const CameraIntrinsics k = bench_k();
    const LandmarkSet lm = generate_landmarks(10, 0.4, 9);
    const Pose truth = random_viewing_pose(rng);
    const auto corrs = project_landmarks(lm, truth, k);

    Eigen::Quaterniond sq(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    sq.normalize();
    const Pose shuffle(sq, Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()));

    LandmarkSet lm2;
    lm2.points.resize(3, lm.count());
    for (Eigen::Index i = 0; i < lm.count(); ++i) {
        lm2.points.col(i) = shuffle.apply(lm.points.col(i));
    }
    const Pose truth2 = truth.compose(shuffle.inverse());
    std::vector<Correspondence> corrs2;
    for (Eigen::Index i = 0; i < lm2.count(); ++i) {
        corrs2.push_back({lm2.points.col(i), corrs[static_cast<std::size_t>(i)].p2, Channel::Rgb,
                          static_cast<int>(i)});
    }

    const Pose est1 = epnp_solve(corrs, k);
    const Pose est2 = epnp_solve(corrs2, k);
    for (Eigen::Index i = 0; i < lm.count(); ++i) {
        const Eigen::Vector2d r1 = project_point(est1.apply(lm.points.col(i)), k);
        const Eigen::Vector2d r2 = project_point(est2.apply(lm2.points.col(i)), k);
        CHECK((r1 - r2).norm() < 1e-9);
    }
    (void)truth2;
}

TEST_CASE("reprojection_error basics") {
    const CameraIntrinsics k = bench_k();
    const Pose pose(Eigen::Quaterniond::Identity(), Eigen::Vector3d(0, 0, 1));
    Correspondence c{Eigen::Vector3d(0.05, -0.02, 0.1), {}, Channel::Rgb, 0};
    c.p2 = project_point(pose.apply(c.p3), k);
    CHECK(reprojection_error(pose, c, k) == doctest::Approx(0.0));
    c.p2 += Eigen::Vector2d(3.0, 4.0);
    CHECK(reprojection_error(pose, c, k) == doctest::Approx(5.0));
    c.p3 = Eigen::Vector3d(0, 0, -2.0);  // behind the camera
    CHECK(reprojection_error(pose, c, k) == std::numeric_limits<double>::infinity());
}

TEST_CASE("ransac with no outliers keeps every correspondence") {
    Rng rng(3);
    const CameraIntrinsics k = bench_k();
    const LandmarkSet lm = generate_landmarks(18, 0.4, 21);
    const Pose truth = random_viewing_pose(rng);
    const auto corrs = project_landmarks(lm, truth, k);

    RansacConfig cfg;
    cfg.seed = 5;
    const PnPResult result = ransac_pnp(corrs, k, cfg);
    CHECK_FALSE(result.degenerate);
    CHECK(result.inliers.size() == corrs.size());
    CHECK(quat_angle_deg(truth.rotation(), result.pose.rotation()) < 1e-4);
    CHECK((truth.translation() - result.pose.translation()).norm() < 1e-6);
}

TEST_CASE("ransac isolates gross outliers exactly") {
    Rng rng(31);
    const CameraIntrinsics k = bench_k();
    const LandmarkSet lm = generate_landmarks(18, 0.4, 33);
    const Pose truth(Eigen::Quaterniond::Identity(), Eigen::Vector3d(0, 0, 1.2));
    auto corrs = project_landmarks(lm, truth, k);
    for (auto& c : corrs) {
        c.p2.x() += rng.normal(0.0, 1.0);
        c.p2.y() += rng.normal(0.0, 1.0);
    }
    // displace six of them far beyond the threshold
    const std::vector<int> outliers = {1, 4, 7, 9, 13, 16};
    for (int i : outliers) {
        const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
        corrs[static_cast<std::size_t>(i)].p2 += 150.0 * Eigen::Vector2d(std::cos(angle), std::sin(angle));
    }

    // oracle classification straight from the ground-truth pose
    std::vector<int> expected;
    for (int i = 0; i < 18; ++i) {
        if (reprojection_error(truth, corrs[static_cast<std::size_t>(i)], k) < 20.0) {
            expected.push_back(i);
        }
    }
    REQUIRE(expected.size() == 12);

    RansacConfig cfg;
    cfg.seed = 8;
    const PnPResult result = ransac_pnp(corrs, k, cfg);
    CHECK_FALSE(result.degenerate);
    CHECK(result.inliers == expected);
}

TEST_CASE("ransac flags consensus starvation as degenerate") {
    // 2 clean points and 3 gross outliers cannot assemble 4 coherent inliers
    const CameraIntrinsics k = bench_k();
    const LandmarkSet lm = generate_landmarks(5, 0.4, 61);
    const Pose truth(Eigen::Quaterniond::Identity(), Eigen::Vector3d(0, 0, 1.0));
    auto corrs = project_landmarks(lm, truth, k);
    corrs[1].p2 += Eigen::Vector2d(400.0, 150.0);
    corrs[2].p2 += Eigen::Vector2d(-380.0, 220.0);
    corrs[4].p2 += Eigen::Vector2d(160.0, -390.0);

    RansacConfig cfg;
    cfg.seed = 2;
    cfg.iterations = 2000;
    const PnPResult result = ransac_pnp(corrs, k, cfg);
    const PnPResult oracle = exhaustive_pnp(corrs, k, cfg);
    CHECK(oracle.degenerate);
    CHECK(result.degenerate);
    CHECK(result.pose.rotation().isApprox(Eigen::Quaterniond::Identity()));
    CHECK(result.pose.translation().norm() == 0.0);
}

TEST_CASE("ransac matches exhaustive enumeration on small problems") {
    const CameraIntrinsics k = bench_k();
    int matches = 0;
    const int trials = 100;
    for (int trial = 0; trial < trials; ++trial) {
        Rng rng(1000 + static_cast<std::uint64_t>(trial));
        const LandmarkSet lm = generate_landmarks(11, 0.4, 500 + static_cast<std::uint64_t>(trial));
        const Pose truth(Eigen::Quaterniond(Eigen::AngleAxisd(rng.uniform(-0.5, 0.5),
                                                              Eigen::Vector3d::UnitY())),
                         Eigen::Vector3d(0, 0, rng.uniform(0.9, 1.6)));
        auto corrs = project_landmarks(lm, truth, k);
        for (auto& c : corrs) {
            c.p2.x() += rng.normal(0.0, 1.0);
            c.p2.y() += rng.normal(0.0, 1.0);
        }
        const int n_out = 3 + rng.uniform_int(2);
        for (int i = 0; i < n_out; ++i) {
            const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
            corrs[static_cast<std::size_t>(rng.uniform_int(11))].p2 +=
                rng.uniform(120.0, 300.0) * Eigen::Vector2d(std::cos(angle), std::sin(angle));
        }

        RansacConfig cfg;
        cfg.seed = static_cast<std::uint64_t>(trial);
        const PnPResult fast = ransac_pnp(corrs, k, cfg);
        const PnPResult oracle = exhaustive_pnp(corrs, k, cfg);
        if (fast.degenerate == oracle.degenerate && fast.inliers == oracle.inliers) ++matches;
    }
    CHECK(matches >= 99);
}

TEST_CASE("ransac is deterministic for a fixed seed") {
    Rng rng(13);
    const CameraIntrinsics k = bench_k();
    const LandmarkSet lm = generate_landmarks(18, 0.4, 101);
    const Pose truth = random_viewing_pose(rng);
    auto corrs = project_landmarks(lm, truth, k);
    for (auto& c : corrs) c.p2.x() += rng.normal(0.0, 2.0);
    corrs[3].p2 += Eigen::Vector2d(200.0, -120.0);

    RansacConfig cfg;
    cfg.seed = 77;
    const PnPResult a = ransac_pnp(corrs, k, cfg);
    const PnPResult b = ransac_pnp(corrs, k, cfg);
    CHECK(a.inliers == b.inliers);
    CHECK(a.pose.rotation().coeffs() == b.pose.rotation().coeffs());
    CHECK(a.pose.translation() == b.pose.translation());
    CHECK(a.mean_reproj_error == b.mean_reproj_error);
}

TEST_CASE("adding an exact inlier never shrinks the consensus on noiseless fixtures") {
    const CameraIntrinsics k = bench_k();
    const LandmarkSet lm = generate_landmarks(12, 0.4, 202);
    const Pose truth(Eigen::Quaterniond::Identity(), Eigen::Vector3d(0, 0, 1.1));
    auto corrs = project_landmarks(lm, truth, k);

    RansacConfig cfg;
    cfg.seed = 4;
    cfg.iterations = 500;
    for (int extra = 0; extra < 4; ++extra) {
        const PnPResult before = ransac_pnp(corrs, k, cfg);
        Correspondence c;
        c.p3 = Eigen::Vector3d(0.05 * (extra + 1), -0.03 * extra, 0.04);
        c.p2 = project_point(truth.apply(c.p3), k);
        c.landmark_id = static_cast<int>(corrs.size());
        corrs.push_back(c);
        const PnPResult after = ransac_pnp(corrs, k, cfg);
        CHECK(after.inliers.size() >= before.inliers.size() + 1);
    }
}

TEST_CASE("fuse_correspondences concatenates channels and drops invalid entries") {
    const LandmarkSet lm = generate_landmarks(18, 0.4, 303);
    KeypointSet rgb(18), event(18);
    for (int i = 0; i < 18; ++i) {
        rgb.points.col(i) = Eigen::Vector2d(i, i);
        event.points.col(i) = Eigen::Vector2d(i + 0.5, i);
    }
    auto fused = fuse_correspondences(rgb, event, lm);
    REQUIRE(fused.size() == 36);
    std::vector<int> per_landmark(18, 0);
    for (const auto& c : fused) per_landmark[static_cast<std::size_t>(c.landmark_id)]++;
    for (int count : per_landmark) CHECK(count == 2);
    CHECK(fused[0].channel == Channel::Rgb);
    CHECK(fused[18].channel == Channel::Event);

    for (auto& v : event.valid) v = 0;
    fused = fuse_correspondences(rgb, event, lm);
    CHECK(fused.size() == 18);
    for (const auto& c : fused) CHECK(c.channel == Channel::Rgb);

    KeypointSet wrong(24);
    CHECK_THROWS_AS(fuse_correspondences(rgb, wrong, lm), std::invalid_argument);
}
