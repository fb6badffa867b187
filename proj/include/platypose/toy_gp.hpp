#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

#include "platypose/errors.hpp"
#include "platypose/rng.hpp"

// Sequence-estimation warm-up on a 1D problem: regress a noisy sine with a
// periodic-kernel Gaussian process, then compare two ways of scoring sampled
// sequences -- per-frame best sample vs. best sequence as a whole -- with and
// without within-frame shuffling of the samples. Shuffling preserves every
// per-frame marginal but destroys temporal correlation, which only the
// whole-sequence score notices.

namespace platypose::toy {

struct ToyConfig {
    int n_obs = 20;
    double noise_std = 0.05;
    double kernel_period = 2.0 * std::numbers::pi;
    double kernel_length = 1.0;
    double kernel_amplitude = 1.0;
    int grid_points = 200;
    double grid_lo = 0.0;
    double grid_hi = 2.0 * std::numbers::pi;
    int sample_count = 50;  // M
    std::uint64_t seed = 0;
};

struct GpPosterior {
    Eigen::VectorXd grid;
    Eigen::VectorXd obs_x, obs_y;
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

// exponential sine squared kernel
inline double periodic_kernel(double x1, double x2, const ToyConfig& cfg) {
    const double s = std::sin(std::numbers::pi * std::abs(x1 - x2) / cfg.kernel_period);
    return cfg.kernel_amplitude * std::exp(-2.0 * s * s / (cfg.kernel_length * cfg.kernel_length));
}

/// GP regression of noisy sine observations onto the evaluation grid.
inline GpPosterior gp_posterior(const ToyConfig& cfg) {
    check(cfg.noise_std > 0.0, ErrorCode::InvalidConfig, "noise_std must be > 0");
    check(cfg.grid_points >= 2 && cfg.grid_hi > cfg.grid_lo, ErrorCode::InvalidConfig, "bad grid");
    check(cfg.n_obs >= 0, ErrorCode::InvalidConfig, "n_obs must be >= 0");

    GpPosterior post;
    post.grid.resize(cfg.grid_points);
    for (int i = 0; i < cfg.grid_points; ++i)
        post.grid(i) = cfg.grid_lo + (cfg.grid_hi - cfg.grid_lo) * i / (cfg.grid_points - 1);

    Rng rng(cfg.seed);
    post.obs_x.resize(cfg.n_obs);
    post.obs_y.resize(cfg.n_obs);
    for (int i = 0; i < cfg.n_obs; ++i) {
        post.obs_x(i) = cfg.grid_lo + (cfg.grid_hi - cfg.grid_lo) * rng.uniform();
        post.obs_y(i) = std::sin(post.obs_x(i)) + cfg.noise_std * rng.normal();
    }

    Eigen::MatrixXd kgg(cfg.grid_points, cfg.grid_points);
    for (int i = 0; i < cfg.grid_points; ++i)
        for (int j = 0; j < cfg.grid_points; ++j) kgg(i, j) = periodic_kernel(post.grid(i), post.grid(j), cfg);

    if (cfg.n_obs == 0) {
        post.mean = Eigen::VectorXd::Zero(cfg.grid_points);
        post.cov = kgg;
        return post;
    }

    Eigen::MatrixXd koo(cfg.n_obs, cfg.n_obs);
    for (int i = 0; i < cfg.n_obs; ++i)
        for (int j = 0; j < cfg.n_obs; ++j) koo(i, j) = periodic_kernel(post.obs_x(i), post.obs_x(j), cfg);
    koo.diagonal().array() += cfg.noise_std * cfg.noise_std;

    Eigen::MatrixXd kgo(cfg.grid_points, cfg.n_obs);
    for (int i = 0; i < cfg.grid_points; ++i)
        for (int j = 0; j < cfg.n_obs; ++j) kgo(i, j) = periodic_kernel(post.grid(i), post.obs_x(j), cfg);

    const Eigen::LLT<Eigen::MatrixXd> llt(koo);
    check(llt.info() == Eigen::Success, ErrorCode::NonPSDAfterJitter, "observation kernel not positive definite");
    post.mean = kgo * llt.solve(post.obs_y);
    post.cov = kgg - kgo * llt.solve(kgo.transpose());
    post.cov = 0.5 * (post.cov + post.cov.transpose());  // symmetrize roundoff
    post.cov.diagonal().array() += 1e-9;
    return post;
}

/// M joint draws from the posterior, one row per draw. With `shuffled`, the
/// M values within each grid point are independently permuted: marginals are
/// preserved, temporal correlation is destroyed.
inline Eigen::MatrixXd sample_sequences(const GpPosterior& post, int M, bool shuffled, Rng& rng) {
    check(M >= 1, ErrorCode::InvalidConfig, "need at least one sample");
    const Eigen::Index n = post.grid.size();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(post.cov);
    check(eig.info() == Eigen::Success, ErrorCode::NonPSDAfterJitter, "eigendecomposition failed");
    check(eig.eigenvalues().minCoeff() > -1e-8, ErrorCode::NonPSDAfterJitter,
          "posterior covariance has significantly negative eigenvalues");
    const Eigen::VectorXd clamped = eig.eigenvalues().cwiseMax(0.0);
    const Eigen::MatrixXd scale = eig.eigenvectors() * clamped.cwiseSqrt().asDiagonal();

    Eigen::MatrixXd draws(M, n);
    for (int m = 0; m < M; ++m) {
        Eigen::VectorXd z(n);
        for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.normal();
        draws.row(m) = (post.mean + scale * z).transpose();
    }
    if (shuffled && M > 1) {
        for (Eigen::Index c = 0; c < n; ++c) {
            for (int m = M - 1; m > 0; --m) {
                const auto k = static_cast<int>(rng.uniform_int(0, m));
                std::swap(draws(m, c), draws(k, c));
            }
        }
    }
    return draws;
}

/// Strategy 1: best sample independently per frame (pose-style score).
/// Strategy 2: best sequence as a whole (motion-style score).
inline std::pair<double, double> evaluate_strategies(const Eigen::MatrixXd& sequences,
                                                     const Eigen::VectorXd& gt) {
    check(sequences.cols() == gt.size() && sequences.rows() >= 1, ErrorCode::ShapeMismatch,
          "sequences and ground truth disagree");
    const Eigen::MatrixXd abs_err = (sequences.rowwise() - gt.transpose()).cwiseAbs();
    const double strategy1 = abs_err.colwise().minCoeff().mean();
    const double strategy2 = abs_err.rowwise().mean().minCoeff();
    return {strategy1, strategy2};
}

}  // namespace platypose::toy
