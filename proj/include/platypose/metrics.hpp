#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "platypose/errors.hpp"
#include "platypose/stats.hpp"
#include "platypose/types.hpp"

// Evaluation metrics over hypothesis sets. All joint errors are computed on
// root-relative poses (the root trajectory is a given, not an estimate) and
// reported in millimeters.

namespace platypose {

struct QuantileEntry {
    double q = 0.0;
    double omega = 0.0;
};

struct ProcrustesOptions {
    bool with_scale = true;     // similarity alignment; false restricts to rigid
    bool per_sequence = false;  // one transform per sequence instead of per frame
};

struct MetricsReport {
    double min_mpjpe = 0.0;  // mm
    double pa_mpjpe = 0.0;   // mm
    double mpjve = 0.0;      // mm per frame step
    double ece = 0.0;
    std::vector<QuantileEntry> quantiles;
    int best_index = 0;
    int n_hypotheses = 0;
    ProcrustesOptions pa_options;
};

namespace detail {

inline void check_shapes(const HypothesisSet& h, const MotionSequence& gt) {
    check(!h.hypotheses.empty(), ErrorCode::TooFewHypotheses, "empty hypothesis set");
    check(h.frames() == gt.frames && h.joints() == gt.joints, ErrorCode::ShapeMismatch,
          "hypotheses and ground truth disagree on frames or joints");
}

inline double sequence_mpjpe_m(const MotionSequence& pred, const MotionSequence& gt) {
    double sum = 0.0;
    for (int f = 0; f < gt.frames; ++f)
        for (int j = 0; j < gt.joints; ++j) {
            const double dx = pred.at(f, j, 0) - gt.at(f, j, 0);
            const double dy = pred.at(f, j, 1) - gt.at(f, j, 1);
            const double dz = pred.at(f, j, 2) - gt.at(f, j, 2);
            sum += std::sqrt(dx * dx + dy * dy + dz * dz);
        }
    return sum / (static_cast<double>(gt.frames) * gt.joints);
}

}  // namespace detail

/// Best-over-hypotheses mean per-joint position error of the whole sequence.
inline std::pair<double, int> min_mpjpe(const HypothesisSet& h, const MotionSequence& gt) {
    detail::check_shapes(h, gt);
    double best = std::numeric_limits<double>::infinity();
    int best_index = 0;
    for (int i = 0; i < h.size(); ++i) {
        const double e = detail::sequence_mpjpe_m(h.hypotheses[i], gt);
        if (e < best) {
            best = e;
            best_index = i;
        }
    }
    return {best * 1000.0, best_index};
}

namespace detail {

// Least-squares similarity (or rigid) transform aligning src onto dst,
// applied to src; returns the mean post-alignment point distance.
inline double procrustes_error_m(const Eigen::MatrixXd& src, const Eigen::MatrixXd& dst, bool with_scale) {
    const auto n = static_cast<double>(src.rows());
    const Eigen::RowVector3d mu_s = src.colwise().mean();
    const Eigen::RowVector3d mu_d = dst.colwise().mean();
    const Eigen::MatrixXd sc = src.rowwise() - mu_s;
    const Eigen::MatrixXd dc = dst.rowwise() - mu_d;
    const double var_s = sc.squaredNorm() / n;
    check(var_s > 0.0, ErrorCode::DegenerateFrame, "source point cloud is rank-0");

    const Eigen::Matrix3d sigma = dc.transpose() * sc / n;
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(sigma, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Vector3d s = Eigen::Vector3d::Ones();
    if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) s(2) = -1.0;
    const Eigen::Matrix3d rot = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
    const double scale = with_scale ? (svd.singularValues().dot(s)) / var_s : 1.0;

    const Eigen::RowVector3d t = mu_d - scale * (rot * mu_s.transpose()).transpose();
    const Eigen::MatrixXd aligned = (scale * (rot * src.transpose())).transpose().rowwise() + t;
    return (aligned - dst).rowwise().norm().mean();
}

inline Eigen::MatrixXd frame_points(const MotionSequence& seq, int f) {
    Eigen::MatrixXd p(seq.joints, 3);
    for (int j = 0; j < seq.joints; ++j)
        for (int k = 0; k < 3; ++k) p(j, k) = seq.at(f, j, k);
    return p;
}

inline Eigen::MatrixXd all_points(const MotionSequence& seq) {
    Eigen::MatrixXd p(static_cast<Eigen::Index>(seq.frames) * seq.joints, 3);
    for (int f = 0; f < seq.frames; ++f)
        for (int j = 0; j < seq.joints; ++j)
            for (int k = 0; k < 3; ++k) p(static_cast<Eigen::Index>(f) * seq.joints + j, k) = seq.at(f, j, k);
    return p;
}

}  // namespace detail

/// Procrustes-aligned minMPJPE: alignment is solved per frame (or per
/// sequence) before the error is taken, then the best hypothesis is reported.
inline double pa_mpjpe(const HypothesisSet& h, const MotionSequence& gt, ProcrustesOptions opt = {}) {
    detail::check_shapes(h, gt);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& hyp : h.hypotheses) {
        double err;
        if (opt.per_sequence) {
            err = detail::procrustes_error_m(detail::all_points(hyp), detail::all_points(gt), opt.with_scale);
        } else {
            double sum = 0.0;
            for (int f = 0; f < gt.frames; ++f)
                sum += detail::procrustes_error_m(detail::frame_points(hyp, f), detail::frame_points(gt, f),
                                                  opt.with_scale);
            err = sum / gt.frames;
        }
        best = std::min(best, err);
    }
    return best * 1000.0;
}

/// Mean per-joint velocity error of the hypothesis that won min_mpjpe.
inline double mpjve(const HypothesisSet& h, const MotionSequence& gt, int best_index) {
    detail::check_shapes(h, gt);
    check(gt.frames >= 2, ErrorCode::TooFewFrames, "velocities need at least two frames");
    check(best_index >= 0 && best_index < h.size(), ErrorCode::ShapeMismatch, "best_index out of range");
    const auto& pred = h.hypotheses[best_index];
    double sum = 0.0;
    for (int f = 0; f + 1 < gt.frames; ++f)
        for (int j = 0; j < gt.joints; ++j) {
            double d2 = 0.0;
            for (int k = 0; k < 3; ++k) {
                const double vp = pred.at(f + 1, j, k) - pred.at(f, j, k);
                const double vg = gt.at(f + 1, j, k) - gt.at(f, j, k);
                d2 += (vp - vg) * (vp - vg);
            }
            sum += std::sqrt(d2);
        }
    return sum / (static_cast<double>(gt.frames - 1) * gt.joints) * 1000.0;
}

inline std::vector<double> default_quantile_grid() {
    std::vector<double> q;
    for (int i = 1; i <= 19; ++i) q.push_back(0.05 * i);
    return q;
}

/// Per-cell calibration statistic: for every (frame, joint) a Gaussian is fit
/// to the hypothesis positions and u = chi2_cdf_3(d^2) locates the ground
/// truth inside it. Well-calibrated samplers produce uniform u. The root
/// joint is skipped: its position is pinned, so it carries no signal.
inline std::vector<double> ece_uvalues(const HypothesisSet& h, const MotionSequence& gt) {
    detail::check_shapes(h, gt);
    const int N = h.size();
    check(N >= 8, ErrorCode::TooFewHypotheses, "need at least 8 hypotheses to fit per-joint Gaussians");
    constexpr double shrinkage = 1e-9;  // m^2 on the diagonal

    std::vector<double> us;
    us.reserve(static_cast<std::size_t>(gt.frames) * gt.joints);
    for (int f = 0; f < gt.frames; ++f) {
        for (int j = 0; j < gt.joints; ++j) {
            if (j == gt.root_index) continue;
            Eigen::Vector3d mean = Eigen::Vector3d::Zero();
            for (const auto& hyp : h.hypotheses)
                mean += Eigen::Vector3d(hyp.at(f, j, 0), hyp.at(f, j, 1), hyp.at(f, j, 2));
            mean /= N;
            Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
            for (const auto& hyp : h.hypotheses) {
                const Eigen::Vector3d d = Eigen::Vector3d(hyp.at(f, j, 0), hyp.at(f, j, 1), hyp.at(f, j, 2)) - mean;
                cov += d * d.transpose();
            }
            cov /= (N - 1);
            cov += shrinkage * Eigen::Matrix3d::Identity();
            Eigen::LLT<Eigen::Matrix3d> llt(cov);
            check(llt.info() == Eigen::Success, ErrorCode::SingularCovariance,
                  "covariance not positive definite after shrinkage (duplicate hypotheses?)");
            const Eigen::Vector3d r = Eigen::Vector3d(gt.at(f, j, 0), gt.at(f, j, 1), gt.at(f, j, 2)) - mean;
            const double d2 = r.dot(llt.solve(r));
            us.push_back(stats::chi2_cdf_3dof(d2));
        }
    }
    return us;
}

inline std::vector<QuantileEntry> coverage_table(const std::vector<double>& us, const std::vector<double>& grid) {
    std::vector<QuantileEntry> table;
    table.reserve(grid.size());
    for (double q : grid) {
        std::size_t inside = 0;
        for (double u : us)
            if (u <= q) ++inside;
        table.push_back({q, us.empty() ? 0.0 : static_cast<double>(inside) / static_cast<double>(us.size())});
    }
    return table;
}

inline double ece_from_table(const std::vector<QuantileEntry>& table) {
    double sum = 0.0;
    for (const auto& e : table) sum += std::abs(e.q - e.omega);
    return table.empty() ? 0.0 : sum / static_cast<double>(table.size());
}

/// Expected calibration error: mean |q - omega(q)| over the quantile grid.
inline std::pair<double, std::vector<QuantileEntry>> ece(const HypothesisSet& h, const MotionSequence& gt,
                                                         const std::vector<double>& grid = default_quantile_grid()) {
    const auto us = ece_uvalues(h, gt);
    auto table = coverage_table(us, grid);
    return {ece_from_table(table), std::move(table)};
}

inline MetricsReport evaluate(const HypothesisSet& h, const MotionSequence& gt, ProcrustesOptions opt = {}) {
    MetricsReport rep;
    rep.pa_options = opt;
    auto [mm, idx] = min_mpjpe(h, gt);
    rep.min_mpjpe = mm;
    rep.best_index = idx;
    rep.n_hypotheses = h.size();
    rep.pa_mpjpe = pa_mpjpe(h, gt, opt);
    rep.mpjve = gt.frames >= 2 ? mpjve(h, gt, idx) : 0.0;
    if (h.size() >= 8) {
        auto [e, table] = ece(h, gt);
        rep.ece = e;
        rep.quantiles = std::move(table);
    } else {
        rep.ece = -1.0;  // not computable
    }
    return rep;
}

inline nlohmann::json report_to_json(const MetricsReport& rep) {
    nlohmann::json q = nlohmann::json::array();
    for (const auto& e : rep.quantiles) q.push_back({{"q", e.q}, {"omega", e.omega}});
    return nlohmann::json{{"min_mpjpe", rep.min_mpjpe},
                          {"pa_mpjpe", rep.pa_mpjpe},
                          {"mpjve", rep.mpjve},
                          {"ece", rep.ece},
                          {"quantiles", q},
                          {"best_index", rep.best_index},
                          {"n_hypotheses", rep.n_hypotheses},
                          {"pa_mode", {{"with_scale", rep.pa_options.with_scale},
                                       {"per_sequence", rep.pa_options.per_sequence}}}};
}

}  // namespace platypose
