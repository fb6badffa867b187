#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "platypose/checkpoint.hpp"
#include "platypose/denoiser.hpp"
#include "platypose/energy.hpp"
#include "platypose/errors.hpp"
#include "platypose/metrics.hpp"
#include "platypose/rng.hpp"
#include "platypose/schedule.hpp"
#include "platypose/types.hpp"

namespace platypose {

struct SamplerConfig {
    int T = 10;
    int S = 2;
    int n = 1;
    int N = 10;  // hypotheses
    EnergyConfig energy;
    std::uint64_t seed = 0;
};

struct SampleStats {
    std::int64_t denoiser_evals = 0;
    std::vector<double> final_lambda;  // per hypothesis
};

namespace detail {

struct SampleProblem {
    int frames = 0;
    int joints = 0;
    int root_index = 0;
    MatX<float> root;  // frames x 3
    EnergyConfig energy;  // observations filled in; lambda <= 0 disables guidance
    bool guided = false;
};

// One posterior draw. The hypothesis index selects an independent noise
// stream, so draws neither interact nor depend on how many run alongside.
inline MatX<float> sample_one(const Checkpoint& ckpt, const SampleProblem& prob, const SamplingGrid& grid,
                              const NoiseSchedule& sched, int sampler_T, std::uint64_t seed,
                              std::uint64_t hypothesis_index, double* final_lambda = nullptr) {
    Rng rng = derive_stream(seed, hypothesis_index);
    const int T_train = ckpt.train.T;
    auto mapped = [&](int t) { return respace_index(t, sampler_T, T_train); };

    MatX<float> x(prob.frames, prob.joints * 3);
    for (Eigen::Index r = 0; r < x.rows(); ++r)
        for (Eigen::Index c = 0; c < x.cols(); ++c) x(r, c) = static_cast<float>(rng.normal());
    x = forward_diffuse<float>(x, mapped(grid.T_start), sched, rng);

    double lambda_state = prob.energy.lambda;
    MatX<float> x0_hat;
    for (std::size_t i = 0; i < grid.steps.size(); ++i) {
        const int t = grid.steps[i];
        x0_hat = denoiser_forward<float>(ckpt.weights, ckpt.model, x, mapped(t));
        // the root joint is pinned at the origin in root-relative coordinates
        for (int f = 0; f < prob.frames; ++f)
            for (int k = 0; k < 3; ++k) x0_hat(f, 3 * prob.root_index + k) = 0.0f;
        if (prob.guided)
            lambda_state = guided_update_core<float>(x0_hat, prob.root, prob.energy, lambda_state, prob.root_index);
        if (i + 1 == grid.steps.size()) break;
        x = forward_diffuse<float>(x0_hat, mapped(t - grid.n), sched, rng);
    }
    if (final_lambda) *final_lambda = lambda_state;
    return x0_hat;
}

}  // namespace detail

/// Draw N hypotheses conditioned on the 2D observations via energy guidance.
/// `root_trajectory` (frames x 3) is the known world path of the root joint.
/// A non-positive energy scale or an empty observation list falls back to
/// unguided prior sampling.
inline HypothesisSet sample(const Checkpoint& ckpt,
                            const std::vector<std::pair<Observation2D, CameraParams>>& observations,
                            const Eigen::MatrixXd& root_trajectory, const SamplerConfig& cfg,
                            int root_index = 0, SampleStats* stats = nullptr,
                            const std::string& observation_ref = "") {
    check(cfg.N >= 1, ErrorCode::InvalidConfig, "need at least one hypothesis");
    check(cfg.T <= ckpt.train.T, ErrorCode::GridMismatch,
          "sampler T exceeds the trained schedule (" + std::to_string(cfg.T) + " > " +
              std::to_string(ckpt.train.T) + ")");
    const SamplingGrid grid = make_grid(cfg.T, cfg.S, cfg.n);
    const NoiseSchedule sched = ckpt.schedule();

    detail::SampleProblem prob;
    prob.frames = static_cast<int>(root_trajectory.rows());
    prob.joints = ckpt.model.joints;
    prob.root_index = root_index;
    check(prob.frames >= 1, ErrorCode::ShapeMismatch, "empty root trajectory");
    check(prob.frames <= ckpt.model.max_frames, ErrorCode::SequenceTooLong,
          "sequence longer than the model's max_frames");
    check(root_index >= 0 && root_index < prob.joints, ErrorCode::ShapeMismatch, "root index out of range");
    prob.root = root_trajectory.cast<float>();
    prob.energy = cfg.energy;
    prob.energy.observations = observations;
    prob.guided = cfg.energy.lambda > 0.0 && !observations.empty();
    if (prob.guided) {
        validate_energy_config(prob.energy);
        for (const auto& [obs, cam] : observations) {
            check(obs.frames == prob.frames && obs.joints == prob.joints, ErrorCode::ShapeMismatch,
                  "observation shape does not match the problem instance");
            validate_camera(cam);
        }
    }

    HypothesisSet out;
    out.observation_ref = observation_ref;
    if (stats) {
        stats->denoiser_evals = 0;
        stats->final_lambda.clear();
    }
    for (int i = 0; i < cfg.N; ++i) {
        double lam = prob.energy.lambda;
        MatX<float> poses = detail::sample_one(ckpt, prob, grid, sched, cfg.T, cfg.seed,
                                               static_cast<std::uint64_t>(i), &lam);
        if (stats) {
            stats->denoiser_evals += static_cast<std::int64_t>(grid.steps.size());
            stats->final_lambda.push_back(lam);
        }
        out.hypotheses.push_back(from_pose_matrix<float>(poses, prob.root, root_index));
    }
    return out;
}

struct TimingRow {
    int steps = 0;
    double seconds = 0.0;
    double min_mpjpe = 0.0;  // mm
};

// Effective ladder length for a requested step count: skip the top fifth of
// the timesteps, i.e. the smallest T with T - ceil(T/5) = steps.
inline std::pair<int, int> steps_to_grid(int steps) {
    for (int T = steps + 1; T <= 5 * steps + 5; ++T) {
        const int S = (T + 4) / 5;
        if (T - S == steps) return {T, S};
    }
    raise(ErrorCode::InvalidGrid, "no ladder realizes " + std::to_string(steps) + " steps");
}

/// Wall-time / error trade-off across step counts, at fixed everything else.
inline std::vector<TimingRow> sample_timing(const Checkpoint& ckpt,
                                            const std::vector<std::pair<Observation2D, CameraParams>>& observations,
                                            const MotionSequence& gt, const SamplerConfig& base,
                                            const std::vector<int>& steps_list) {
    std::vector<TimingRow> rows;
    for (int steps : steps_list) {
        auto [T_eff, S_eff] = steps_to_grid(steps);
        SamplerConfig cfg = base;
        cfg.T = T_eff;
        cfg.S = S_eff;
        cfg.n = 1;
        const auto t0 = std::chrono::steady_clock::now();
        const HypothesisSet h =
            sample(ckpt, observations, to_root_matrix<double>(gt), cfg, gt.root_index);
        const auto t1 = std::chrono::steady_clock::now();
        TimingRow row;
        row.steps = steps;
        row.seconds = std::chrono::duration<double>(t1 - t0).count();
        row.min_mpjpe = min_mpjpe(h, gt).first;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace platypose
