#pragma once

#include <Eigen/Dense>
#include <vector>

#include "platypose/errors.hpp"
#include "platypose/types.hpp"

namespace platypose {

// Points closer to the camera plane than this are treated as invalid.
constexpr double kZMin = 1e-6;

/// Pixel coordinates per (frame, joint) plus a front-of-camera mask.
struct ProjectedKeypoints {
    Eigen::MatrixXd pixels;                                      // F x 2J, uv pairs per joint
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> valid_mask;  // F x J

    double u(int f, int j) const { return pixels(f, 2 * j); }
    double v(int f, int j) const { return pixels(f, 2 * j + 1); }
};

namespace detail {

template <class S>
struct ProjectedT {
    MatX<S> pixels;                                              // F x 2J
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> valid_mask;  // F x J
};

// poses: F x 3J root-relative, root: F x 3 world translation of the root.
template <class S>
ProjectedT<S> project_points(const MatX<S>& poses, const MatX<S>& root, const CameraParams& cam) {
    const int F = static_cast<int>(poses.rows());
    const int J = static_cast<int>(poses.cols() / 3);
    const Eigen::Matrix<S, 3, 3> R = cam.rotation.cast<S>();
    const Eigen::Matrix<S, 3, 1> t = cam.translation.cast<S>();
    const S fx = static_cast<S>(cam.focal.x()), fy = static_cast<S>(cam.focal.y());
    const S cx = static_cast<S>(cam.principal_point.x()), cy = static_cast<S>(cam.principal_point.y());

    ProjectedT<S> out;
    out.pixels.setZero(F, 2 * J);
    out.valid_mask.setConstant(F, J, false);
    bool any_valid = false;
    for (int f = 0; f < F; ++f) {
        const Eigen::Matrix<S, 3, 1> r(root(f, 0), root(f, 1), root(f, 2));
        for (int j = 0; j < J; ++j) {
            const Eigen::Matrix<S, 3, 1> p(poses(f, 3 * j), poses(f, 3 * j + 1), poses(f, 3 * j + 2));
            const Eigen::Matrix<S, 3, 1> pc = R * (p + r) + t;
            if (pc.z() > static_cast<S>(kZMin)) {
                out.pixels(f, 2 * j) = fx * pc.x() / pc.z() + cx;
                out.pixels(f, 2 * j + 1) = fy * pc.y() / pc.z() + cy;
                out.valid_mask(f, j) = true;
                any_valid = true;
            }
        }
    }
    check(any_valid, ErrorCode::AllPointsBehindCamera, "every keypoint is behind the camera");
    return out;
}

// d(pixels)/d(root-relative position), one 2x3 block per (frame, joint).
// The root trajectory is a known input, not a free variable.
template <class S>
std::vector<Eigen::Matrix<S, 2, 3>> project_points_jacobian(const MatX<S>& poses, const MatX<S>& root,
                                                            const CameraParams& cam) {
    const int F = static_cast<int>(poses.rows());
    const int J = static_cast<int>(poses.cols() / 3);
    const Eigen::Matrix<S, 3, 3> R = cam.rotation.cast<S>();
    const Eigen::Matrix<S, 3, 1> t = cam.translation.cast<S>();
    const S fx = static_cast<S>(cam.focal.x()), fy = static_cast<S>(cam.focal.y());

    std::vector<Eigen::Matrix<S, 2, 3>> jac(static_cast<std::size_t>(F) * J);
    for (int f = 0; f < F; ++f) {
        const Eigen::Matrix<S, 3, 1> r(root(f, 0), root(f, 1), root(f, 2));
        for (int j = 0; j < J; ++j) {
            const Eigen::Matrix<S, 3, 1> p(poses(f, 3 * j), poses(f, 3 * j + 1), poses(f, 3 * j + 2));
            const Eigen::Matrix<S, 3, 1> pc = R * (p + r) + t;
            check(std::abs(static_cast<double>(pc.z())) >= kZMin, ErrorCode::PointAtCameraPlane,
                  "keypoint on the camera plane, Jacobian undefined");
            // chain rule through the perspective divide: d(pc)/d(p) = R
            const S inv_z = S(1) / pc.z();
            Eigen::Matrix<S, 2, 3> d_pix_d_pc;
            d_pix_d_pc << fx * inv_z, S(0), -fx * pc.x() * inv_z * inv_z,
                          S(0), fy * inv_z, -fy * pc.y() * inv_z * inv_z;
            jac[static_cast<std::size_t>(f) * J + j] = d_pix_d_pc * R;
        }
    }
    return jac;
}

}  // namespace detail

/// Pinhole projection of a motion sequence (root trajectory re-attached).
inline ProjectedKeypoints project(const MotionSequence& seq, const CameraParams& cam) {
    auto res = detail::project_points<double>(to_pose_matrix<double>(seq), to_root_matrix<double>(seq), cam);
    return ProjectedKeypoints{std::move(res.pixels), std::move(res.valid_mask)};
}

/// Analytic 2x3 Jacobian blocks, indexed f * J + j.
inline std::vector<Eigen::Matrix<double, 2, 3>> project_jacobian(const MotionSequence& seq,
                                                                 const CameraParams& cam) {
    return detail::project_points_jacobian<double>(to_pose_matrix<double>(seq), to_root_matrix<double>(seq), cam);
}

}  // namespace platypose
