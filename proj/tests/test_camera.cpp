#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Geometry>
#include <cmath>

#include "platypose/camera.hpp"
#include "platypose/rng.hpp"
#include "platypose/synth.hpp"
#include "platypose/types.hpp"

using namespace platypose;

namespace {

CameraParams identity_camera(double fx = 1.0, double fy = 1.0, double cx = 0.0, double cy = 0.0) {
    CameraParams cam;
    cam.focal = {fx, fy};
    cam.principal_point = {cx, cy};
    return cam;
}

MotionSequence two_joint_instance(const Eigen::Vector3d& joint1, const Eigen::Vector3d& root_world) {
    MotionSequence seq = make_motion(1, 2, 0);
    for (int k = 0; k < 3; ++k) {
        seq.at(0, 1, k) = static_cast<float>(joint1(k));
        seq.root_at(0, k) = static_cast<float>(root_world(k));
    }
    return seq;
}

// random but in-front-of-camera configuration for oracle sweeps
struct RandomConfig {
    MatX<double> poses, root;
    CameraParams cam;
};

RandomConfig random_config(std::uint64_t seed, int frames = 2, int joints = 4) {
    Rng rng(seed);
    RandomConfig c;
    c.poses.resize(frames, joints * 3);
    c.root.resize(frames, 3);
    for (int f = 0; f < frames; ++f) {
        for (int j = 0; j < joints * 3; ++j) c.poses(f, j) = 0.4 * rng.normal();
        c.root(f, 0) = 0.3 * rng.normal();
        c.root(f, 1) = 0.3 * rng.normal();
        c.root(f, 2) = 4.0 + 0.5 * rng.normal();  // well in front
    }
    const Eigen::Vector3d axis = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()).normalized();
    c.cam.rotation = Eigen::AngleAxisd(0.2 * rng.normal(), axis).toRotationMatrix();
    c.cam.translation = {0.1 * rng.normal(), 0.1 * rng.normal(), 0.2 * rng.normal()};
    c.cam.focal = {600.0 + 100.0 * rng.uniform(), 600.0 + 100.0 * rng.uniform()};
    c.cam.principal_point = {500.0, 500.0};
    return c;
}

}  // namespace

TEST_CASE("projection matches hand-evaluated pinhole formulas", "[camera]") {
    SECTION("optical axis maps to the principal point") {
        const auto seq = two_joint_instance({0.0, 0.0, 0.0}, {0.0, 0.0, 1.0});
        const auto proj = project(seq, identity_camera());
        REQUIRE(proj.valid_mask(0, 0));
        REQUIRE(proj.u(0, 0) == Catch::Approx(0.0).margin(1e-12));
        REQUIRE(proj.v(0, 0) == Catch::Approx(0.0).margin(1e-12));
    }
    SECTION("off-axis point with focal and principal offset") {
        // joint at (0.5, 0, 0) around a root at depth 2: pixel (10 + 2*0.5/2, 10)
        const auto seq = two_joint_instance({0.5, 0.0, 0.0}, {0.0, 0.0, 2.0});
        const auto proj = project(seq, identity_camera(2.0, 2.0, 10.0, 10.0));
        REQUIRE(proj.u(0, 1) == Catch::Approx(10.5));
        REQUIRE(proj.v(0, 1) == Catch::Approx(10.0));
    }
    SECTION("a frame behind the camera is masked, not fatal") {
        MotionSequence seq = make_motion(2, 2, 0);
        seq.root_at(0, 2) = 1.0f;   // frame 0 in front
        seq.root_at(1, 2) = -1.0f;  // frame 1 behind
        const auto proj = project(seq, identity_camera());
        REQUIRE(proj.valid_mask(0, 0));
        REQUIRE_FALSE(proj.valid_mask(1, 0));
        REQUIRE_FALSE(proj.valid_mask(1, 1));
    }
    SECTION("every point behind the camera is an error") {
        const auto seq = two_joint_instance({0.0, 0.1, 0.0}, {0.0, 0.0, -1.0});
        try {
            (void)project(seq, identity_camera());
            FAIL("expected AllPointsBehindCamera");
        } catch (const Error& e) {
            REQUIRE(e.code() == ErrorCode::AllPointsBehindCamera);
        }
    }
}

TEST_CASE("analytic Jacobian at the axis and its depth scaling", "[camera]") {
    const auto seq = two_joint_instance({0.0, 0.0, 0.0}, {0.0, 0.0, 1.0});
    const auto jac = project_jacobian(seq, identity_camera());
    Eigen::Matrix<double, 2, 3> expected;
    expected << 1, 0, 0, 0, 1, 0;
    REQUIRE((jac[0] - expected).cwiseAbs().maxCoeff() < 1e-12);

    const auto seq2 = two_joint_instance({0.0, 0.0, 0.0}, {0.0, 0.0, 2.0});
    const auto jac2 = project_jacobian(seq2, identity_camera());
    REQUIRE(jac2[0](0, 0) == Catch::Approx(0.5 * jac[0](0, 0)));
    REQUIRE(jac2[0](1, 1) == Catch::Approx(0.5 * jac[0](1, 1)));
}

TEST_CASE("Jacobian matches central finite differences over 100 seeded configs", "[camera][oracle]") {
    const double h = 1e-5;
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto c = random_config(seed);
        const auto jac = detail::project_points_jacobian<double>(c.poses, c.root, c.cam);
        const int J = static_cast<int>(c.poses.cols() / 3);
        for (int f = 0; f < c.poses.rows(); ++f)
            for (int j = 0; j < J; ++j)
                for (int axis = 0; axis < 3; ++axis) {
                    MatX<double> plus = c.poses, minus = c.poses;
                    plus(f, 3 * j + axis) += h;
                    minus(f, 3 * j + axis) -= h;
                    const auto pp = detail::project_points<double>(plus, c.root, c.cam);
                    const auto pm = detail::project_points<double>(minus, c.root, c.cam);
                    for (int uv = 0; uv < 2; ++uv) {
                        const double fd = (pp.pixels(f, 2 * j + uv) - pm.pixels(f, 2 * j + uv)) / (2.0 * h);
                        const double an = jac[static_cast<std::size_t>(f) * J + j](uv, axis);
                        const double rel = std::abs(an - fd) / std::max({1.0, std::abs(an), std::abs(fd)});
                        worst = std::max(worst, rel);
                    }
                }
    }
    REQUIRE(worst < 1e-4);
}

TEST_CASE("projection is invariant to a rigid world re-parameterization", "[camera]") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto c = random_config(seed, 3, 5);
        const auto base = detail::project_points<double>(c.poses, c.root, c.cam);

        Rng rng(seed + 1000);
        const Eigen::Vector3d axis = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()).normalized();
        const Eigen::Matrix3d R0 = Eigen::AngleAxisd(rng.uniform() * 2.0, axis).toRotationMatrix();
        const Eigen::Vector3d t0(rng.normal(), rng.normal(), rng.normal());

        // transform the world: x' = R0 x + t0 for world points, camera compensates
        MatX<double> poses2 = c.poses;
        MatX<double> root2 = c.root;
        const int J = static_cast<int>(c.poses.cols() / 3);
        for (int f = 0; f < c.poses.rows(); ++f) {
            for (int j = 0; j < J; ++j)
                poses2.block<1, 3>(f, 3 * j) = (R0 * c.poses.block<1, 3>(f, 3 * j).transpose()).transpose();
            root2.row(f) = (R0 * c.root.row(f).transpose() + t0).transpose();
        }
        CameraParams cam2 = c.cam;
        cam2.rotation = c.cam.rotation * R0.transpose();
        cam2.translation = c.cam.translation - cam2.rotation * t0;

        const auto moved = detail::project_points<double>(poses2, root2, cam2);
        REQUIRE((moved.pixels - base.pixels).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("Jacobian refuses points on the camera plane", "[camera]") {
    MatX<double> poses = MatX<double>::Zero(1, 3);
    MatX<double> root = MatX<double>::Zero(1, 3);  // z = 0 exactly
    CameraParams cam;
    try {
        (void)detail::project_points_jacobian<double>(poses, root, cam);
        FAIL("expected PointAtCameraPlane");
    } catch (const Error& e) {
        REQUIRE(e.code() == ErrorCode::PointAtCameraPlane);
    }
}
