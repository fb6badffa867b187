#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>
#include <vector>

#include "platypose/camera.hpp"
#include "platypose/errors.hpp"
#include "platypose/types.hpp"

namespace platypose {

// How per-keypoint confidences c enter the guidance gradient:
//   Ones     - c = 1 everywhere (ground-truth keypoints)
//   FromFile - c read from the observation's confidence channel
//   Oracle   - c = |y* - proj(x0)| against reference 2D keypoints, recomputed
//              from the current estimate at every update call
enum class ConfidenceMode { Ones, FromFile, Oracle };

struct EnergyConfig {
    // Step scale matched to the default rig (focal ~900 px at ~3 m): the
    // per-coordinate curvature of E is about sum_cams 2 (f/z)^2, and the
    // decay handles instance-to-instance variation from there.
    double lambda = 1e-6;
    int k = 3;                  // update iterations per diffusion step
    double decay_factor = 0.1;  // applied to lambda whenever the energy rises
    ConfidenceMode confidence_mode = ConfidenceMode::Ones;
    std::vector<std::pair<Observation2D, CameraParams>> observations;
    std::vector<Observation2D> oracle_reference;  // parallel to observations in Oracle mode
};

inline void validate_energy_config(const EnergyConfig& cfg) {
    check(cfg.lambda > 0.0, ErrorCode::InvalidConfig, "lambda must be > 0");
    check(cfg.k >= 1, ErrorCode::InvalidConfig, "k must be >= 1");
    check(cfg.decay_factor > 0.0 && cfg.decay_factor < 1.0, ErrorCode::InvalidConfig,
          "decay_factor must lie in (0, 1)");
    check(!cfg.observations.empty(), ErrorCode::InvalidConfig, "need at least one observation");
    if (cfg.confidence_mode == ConfidenceMode::Oracle)
        check(cfg.oracle_reference.size() == cfg.observations.size(), ErrorCode::InvalidConfig,
              "oracle mode needs one reference observation per camera");
}

/// Confidence proxy: per-keypoint L1 pixel deviation between reference 2D
/// keypoints and the current reprojection; zero where the point is invalid.
template <class S>
Eigen::MatrixXd estimate_confidences_core(const Observation2D& reference, const MatX<S>& poses,
                                          const MatX<S>& root, const CameraParams& cam) {
    const auto proj = detail::project_points<S>(poses, root, cam);
    const int F = static_cast<int>(poses.rows());
    const int J = static_cast<int>(poses.cols() / 3);
    check(reference.frames == F && reference.joints == J, ErrorCode::ShapeMismatch,
          "reference observation shape mismatch");
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(F, J);
    for (int f = 0; f < F; ++f)
        for (int j = 0; j < J; ++j)
            if (proj.valid_mask(f, j))
                c(f, j) = std::abs(static_cast<double>(reference.pixel(f, j, 0)) - static_cast<double>(proj.pixels(f, 2 * j))) +
                          std::abs(static_cast<double>(reference.pixel(f, j, 1)) - static_cast<double>(proj.pixels(f, 2 * j + 1)));
    return c;
}

inline Eigen::MatrixXd estimate_confidences(const Observation2D& reference, const MotionSequence& x0,
                                            const CameraParams& cam) {
    return estimate_confidences_core<double>(reference, to_pose_matrix<double>(x0), to_root_matrix<double>(x0), cam);
}

/// Reprojection energy: sum over cameras, frames and joints of the squared
/// pixel error. Behind-camera points contribute zero. The scale lambda is
/// applied in the update step, not here.
template <class S>
double energy_core(const MatX<S>& poses, const MatX<S>& root, const EnergyConfig& cfg) {
    const int F = static_cast<int>(poses.rows());
    const int J = static_cast<int>(poses.cols() / 3);
    double total = 0.0;
    for (const auto& [obs, cam] : cfg.observations) {
        check(obs.frames == F && obs.joints == J, ErrorCode::ShapeMismatch, "observation shape mismatch");
        const auto proj = detail::project_points<S>(poses, root, cam);
        for (int f = 0; f < F; ++f)
            for (int j = 0; j < J; ++j) {
                if (!proj.valid_mask(f, j)) continue;
                const double du = static_cast<double>(proj.pixels(f, 2 * j)) - static_cast<double>(obs.pixel(f, j, 0));
                const double dv = static_cast<double>(proj.pixels(f, 2 * j + 1)) - static_cast<double>(obs.pixel(f, j, 1));
                total += du * du + dv * dv;
            }
    }
    return total;
}

/// Gradient of the energy w.r.t. the root-relative positions, scaled by the
/// per-keypoint confidence of each camera. Root joint rows are zeroed: the
/// root is pinned at the origin.
template <class S>
MatX<S> energy_gradient_core(const MatX<S>& poses, const MatX<S>& root, const EnergyConfig& cfg,
                             int root_index) {
    const int F = static_cast<int>(poses.rows());
    const int J = static_cast<int>(poses.cols() / 3);
    MatX<S> grad = MatX<S>::Zero(F, 3 * J);
    for (std::size_t ci = 0; ci < cfg.observations.size(); ++ci) {
        const auto& [obs, cam] = cfg.observations[ci];
        check(obs.frames == F && obs.joints == J, ErrorCode::ShapeMismatch, "observation shape mismatch");
        const auto proj = detail::project_points<S>(poses, root, cam);
        const auto jac = detail::project_points_jacobian<S>(poses, root, cam);

        Eigen::MatrixXd conf;
        if (cfg.confidence_mode == ConfidenceMode::Oracle)
            conf = estimate_confidences_core<S>(cfg.oracle_reference[ci], poses, root, cam);

        for (int f = 0; f < F; ++f)
            for (int j = 0; j < J; ++j) {
                if (!proj.valid_mask(f, j) || j == root_index) continue;
                double c = 1.0;
                if (cfg.confidence_mode == ConfidenceMode::FromFile) c = obs.conf(f, j);
                else if (cfg.confidence_mode == ConfidenceMode::Oracle) c = conf(f, j);
                if (c == 0.0) continue;
                Eigen::Matrix<S, 2, 1> residual;
                residual << proj.pixels(f, 2 * j) - static_cast<S>(obs.pixel(f, j, 0)),
                    proj.pixels(f, 2 * j + 1) - static_cast<S>(obs.pixel(f, j, 1));
                const Eigen::Matrix<S, 3, 1> g =
                    static_cast<S>(2.0 * c) * jac[static_cast<std::size_t>(f) * J + j].transpose() * residual;
                grad(f, 3 * j) += g(0);
                grad(f, 3 * j + 1) += g(1);
                grad(f, 3 * j + 2) += g(2);
            }
    }
    return grad;
}

/// k gradient steps on the reprojection energy with energy-scale decay:
/// whenever an iteration raises the energy, lambda shrinks by decay_factor.
/// The decayed lambda is returned and persists across diffusion steps.
template <class S>
double guided_update_core(MatX<S>& poses, const MatX<S>& root, const EnergyConfig& cfg, double lambda_state,
                          int root_index) {
    double e_prev = energy_core<S>(poses, root, cfg);
    for (int i = 0; i < cfg.k; ++i) {
        const MatX<S> g = energy_gradient_core<S>(poses, root, cfg, root_index);
        poses -= static_cast<S>(lambda_state) * g;
        check(poses.allFinite(), ErrorCode::NonFiniteUpdate, "guided update produced non-finite coordinates");
        const double e_new = energy_core<S>(poses, root, cfg);
        if (e_new > e_prev) lambda_state *= cfg.decay_factor;
        e_prev = e_new;
    }
    return lambda_state;
}

// MotionSequence-facing wrappers used by tests and the CLI.

inline double energy(const MotionSequence& x0, const EnergyConfig& cfg) {
    validate_energy_config(cfg);
    return energy_core<double>(to_pose_matrix<double>(x0), to_root_matrix<double>(x0), cfg);
}

inline Eigen::MatrixXd energy_gradient(const MotionSequence& x0, const EnergyConfig& cfg) {
    validate_energy_config(cfg);
    return energy_gradient_core<double>(to_pose_matrix<double>(x0), to_root_matrix<double>(x0), cfg,
                                        x0.root_index);
}

inline std::pair<MotionSequence, double> guided_update(const MotionSequence& x0, const EnergyConfig& cfg,
                                                       double lambda_state) {
    validate_energy_config(cfg);
    MatX<double> poses = to_pose_matrix<double>(x0);
    const MatX<double> root = to_root_matrix<double>(x0);
    const double lambda_out = guided_update_core<double>(poses, root, cfg, lambda_state, x0.root_index);
    return {from_pose_matrix<double>(poses, root, x0.root_index), lambda_out};
}

}  // namespace platypose
