#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <vector>

#include "platypose/checkpoint.hpp"
#include "platypose/errors.hpp"
#include "platypose/rng.hpp"
#include "platypose/types.hpp"

// Comparison model: a deterministic feed-forward regressor from flattened 2D
// observations to root-relative 3D sequences, wrapped in an isotropic
// Gaussian posterior N(mu(y), sigma^2 I). Samples are independent per frame,
// joint and coordinate, so they carry no temporal correlation around the
// mean; that is the point of the comparison.

namespace platypose {

struct BaselineConfig {
    int hidden = 256;
    std::int64_t steps = 4000;
    int batch_size = 32;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
};

struct BaselineModel {
    int frames = 0;
    int joints = 0;
    int root_index = 0;
    Eigen::MatrixXd w1, w2, w3;
    Eigen::VectorXd b1, b2, b3;
    Eigen::VectorXd input_mean, input_std;
    double sigma = 0.0;  // meters, per coordinate
};

namespace detail {

inline Eigen::VectorXd flatten_observation(const Observation2D& obs) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(obs.frames) * obs.joints * 2);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = obs.keypoints[static_cast<std::size_t>(i)];
    return x;
}

inline Eigen::VectorXd flatten_motion(const MotionSequence& seq) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(seq.frames) * seq.joints * 3);
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = seq.positions[static_cast<std::size_t>(i)];
    return y;
}

inline void pin_root_coords(Eigen::VectorXd& flat, int frames, int joints, int root_index) {
    for (int f = 0; f < frames; ++f)
        for (int k = 0; k < 3; ++k) flat((static_cast<Eigen::Index>(f) * joints + root_index) * 3 + k) = 0.0;
}

}  // namespace detail

/// Mean prediction mu(y) for one observation, root coordinates pinned.
inline Eigen::VectorXd baseline_predict(const BaselineModel& m, const Observation2D& obs) {
    check(obs.frames == m.frames && obs.joints == m.joints, ErrorCode::ShapeMismatch,
          "observation does not match the fitted model");
    Eigen::VectorXd x = detail::flatten_observation(obs);
    x = (x - m.input_mean).cwiseQuotient(m.input_std);
    const Eigen::VectorXd h1 = (m.w1 * x + m.b1).cwiseMax(0.0);
    const Eigen::VectorXd h2 = (m.w2 * h1 + m.b2).cwiseMax(0.0);
    Eigen::VectorXd out = m.w3 * h2 + m.b3;
    detail::pin_root_coords(out, m.frames, m.joints, m.root_index);
    return out;
}

/// Closed-form maximum-likelihood isotropic deviation: the RMS residual per
/// coordinate of the predictions against the targets.
inline double baseline_sigma(const std::vector<Eigen::VectorXd>& preds,
                             const std::vector<Eigen::VectorXd>& targets) {
    check(!preds.empty() && preds.size() == targets.size(), ErrorCode::ShapeMismatch, "bad residual inputs");
    double sum = 0.0;
    double count = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        sum += (preds[i] - targets[i]).squaredNorm();
        count += static_cast<double>(preds[i].size());
    }
    return std::sqrt(sum / count);
}

/// Trains the regressor by mean squared error, then fits sigma by maximum
/// likelihood on the training residuals.
inline BaselineModel fit_baseline(const std::vector<std::pair<Observation2D, MotionSequence>>& pairs,
                                  const BaselineConfig& cfg) {
    check(!pairs.empty(), ErrorCode::EmptyDataset, "baseline needs training pairs");
    const int F = pairs.front().second.frames;
    const int J = pairs.front().second.joints;
    const int root_index = pairs.front().second.root_index;
    for (const auto& [obs, seq] : pairs) {
        check(obs.frames == F && obs.joints == J && seq.frames == F && seq.joints == J,
              ErrorCode::ShapeMismatch, "baseline requires a fixed F and J across pairs");
    }

    const Eigen::Index din = static_cast<Eigen::Index>(F) * J * 2;
    const Eigen::Index dout = static_cast<Eigen::Index>(F) * J * 3;
    const Eigen::Index n = static_cast<Eigen::Index>(pairs.size());

    Eigen::MatrixXd X(n, din), Y(n, dout);
    for (Eigen::Index i = 0; i < n; ++i) {
        X.row(i) = detail::flatten_observation(pairs[static_cast<std::size_t>(i)].first).transpose();
        Y.row(i) = detail::flatten_motion(pairs[static_cast<std::size_t>(i)].second).transpose();
    }

    BaselineModel m;
    m.frames = F;
    m.joints = J;
    m.root_index = root_index;
    m.input_mean = X.colwise().mean().transpose();
    m.input_std.resize(din);
    for (Eigen::Index c = 0; c < din; ++c) {
        const double var = (X.col(c).array() - m.input_mean(c)).square().mean();
        m.input_std(c) = std::max(std::sqrt(var), 1e-8);
    }
    for (Eigen::Index i = 0; i < n; ++i)
        X.row(i) = (X.row(i) - m.input_mean.transpose()).cwiseQuotient(m.input_std.transpose());

    Rng rng(cfg.seed);
    const int H = cfg.hidden;
    auto init = [&rng](Eigen::Index rows, Eigen::Index cols) {
        Eigen::MatrixXd w(rows, cols);
        const double s = std::sqrt(2.0 / static_cast<double>(rows + cols));
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c) w(r, c) = rng.normal() * s;
        return w;
    };
    m.w1 = init(H, din);
    m.w2 = init(H, H);
    m.w3 = init(dout, H);
    m.b1 = Eigen::VectorXd::Zero(H);
    m.b2 = Eigen::VectorXd::Zero(H);
    m.b3 = Eigen::VectorXd::Zero(dout);

    // Adam on the MSE
    struct Moment {
        Eigen::MatrixXd m, v;
    };
    auto make_moment = [](const Eigen::MatrixXd& w) { return Moment{Eigen::MatrixXd::Zero(w.rows(), w.cols()),
                                                                    Eigen::MatrixXd::Zero(w.rows(), w.cols())}; };
    Moment mw1 = make_moment(m.w1), mw2 = make_moment(m.w2), mw3 = make_moment(m.w3);
    Moment mb1 = make_moment(m.b1), mb2 = make_moment(m.b2), mb3 = make_moment(m.b3);
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    auto adam = [&](Eigen::MatrixXd& w, const Eigen::MatrixXd& g, Moment& mo, std::int64_t step) {
        mo.m = beta1 * mo.m + (1.0 - beta1) * g;
        mo.v = beta2 * mo.v + (1.0 - beta2) * g.cwiseProduct(g);
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
        w -= (cfg.learning_rate * (mo.m / bc1).array() /
              ((mo.v / bc2).array().sqrt() + eps)).matrix();
    };

    const int B = std::min<int>(cfg.batch_size, static_cast<int>(n));
    for (std::int64_t step = 1; step <= cfg.steps; ++step) {
        Eigen::MatrixXd xb(B, din), yb(B, dout);
        for (int b = 0; b < B; ++b) {
            const auto idx = rng.uniform_int(0, n - 1);
            xb.row(b) = X.row(idx);
            yb.row(b) = Y.row(idx);
        }
        const Eigen::MatrixXd h1 = (xb * m.w1.transpose()).rowwise() + m.b1.transpose();
        const Eigen::MatrixXd a1 = h1.cwiseMax(0.0);
        const Eigen::MatrixXd h2 = (a1 * m.w2.transpose()).rowwise() + m.b2.transpose();
        const Eigen::MatrixXd a2 = h2.cwiseMax(0.0);
        const Eigen::MatrixXd pred = (a2 * m.w3.transpose()).rowwise() + m.b3.transpose();

        const double count = static_cast<double>(B) * static_cast<double>(dout);
        const Eigen::MatrixXd dpred = 2.0 * (pred - yb) / count;
        const Eigen::MatrixXd dw3 = dpred.transpose() * a2;
        const Eigen::VectorXd db3 = dpred.colwise().sum().transpose();
        Eigen::MatrixXd da2 = dpred * m.w3;
        da2 = da2.cwiseProduct((h2.array() > 0.0).cast<double>().matrix());
        const Eigen::MatrixXd dw2 = da2.transpose() * a1;
        const Eigen::VectorXd db2 = da2.colwise().sum().transpose();
        Eigen::MatrixXd da1 = da2 * m.w2;
        da1 = da1.cwiseProduct((h1.array() > 0.0).cast<double>().matrix());
        const Eigen::MatrixXd dw1 = da1.transpose() * xb;
        const Eigen::VectorXd db1 = da1.colwise().sum().transpose();

        adam(m.w1, dw1, mw1, step);
        adam(m.w2, dw2, mw2, step);
        adam(m.w3, dw3, mw3, step);
        Eigen::MatrixXd b1m = m.b1, b2m = m.b2, b3m = m.b3;
        adam(b1m, db1, mb1, step);
        adam(b2m, db2, mb2, step);
        adam(b3m, db3, mb3, step);
        m.b1 = b1m;
        m.b2 = b2m;
        m.b3 = b3m;
    }

    std::vector<Eigen::VectorXd> preds, targets;
    preds.reserve(pairs.size());
    targets.reserve(pairs.size());
    for (const auto& [obs, seq] : pairs) {
        preds.push_back(baseline_predict(m, obs));
        targets.push_back(detail::flatten_motion(seq));
    }
    m.sigma = baseline_sigma(preds, targets);
    return m;
}

/// N draws of mu(y) + sigma * eps, eps iid per frame, joint and coordinate.
/// Root coordinates stay pinned; `root_trajectory` (F x 3) is attached to
/// every hypothesis when provided.
inline HypothesisSet sample_baseline(const BaselineModel& m, const Observation2D& obs, int N, Rng& rng,
                                     const Eigen::MatrixXd* root_trajectory = nullptr) {
    check(N >= 1, ErrorCode::InvalidConfig, "need at least one draw");
    const Eigen::VectorXd mu = baseline_predict(m, obs);
    Eigen::MatrixXd root = Eigen::MatrixXd::Zero(m.frames, 3);
    if (root_trajectory) {
        check(root_trajectory->rows() == m.frames && root_trajectory->cols() == 3, ErrorCode::ShapeMismatch,
              "root trajectory shape mismatch");
        root = *root_trajectory;
    }
    HypothesisSet out;
    out.observation_ref = obs.camera_id;
    for (int i = 0; i < N; ++i) {
        Eigen::VectorXd draw = mu;
        for (Eigen::Index c = 0; c < draw.size(); ++c) draw(c) += m.sigma * rng.normal();
        detail::pin_root_coords(draw, m.frames, m.joints, m.root_index);
        MotionSequence seq = make_motion(m.frames, m.joints, m.root_index);
        for (Eigen::Index c = 0; c < draw.size(); ++c) seq.positions[static_cast<std::size_t>(c)] = static_cast<float>(draw(c));
        for (int f = 0; f < m.frames; ++f)
            for (int k = 0; k < 3; ++k) seq.root_at(f, k) = static_cast<float>(root(f, k));
        out.hypotheses.push_back(std::move(seq));
    }
    return out;
}

inline void save_baseline(const BaselineModel& m, const std::filesystem::path& path) {
    nlohmann::json config;
    config["kind"] = "baseline";
    config["frames"] = m.frames;
    config["joints"] = m.joints;
    config["root_index"] = m.root_index;
    config["sigma"] = m.sigma;
    TensorTable table;
    auto put = [&table](const std::string& name, const Eigen::MatrixXd& t) {
        NamedTensor nt;
        nt.dims = {static_cast<std::uint32_t>(t.rows()), static_cast<std::uint32_t>(t.cols())};
        nt.data.resize(static_cast<std::size_t>(t.rows()) * t.cols());
        std::size_t idx = 0;
        for (Eigen::Index r = 0; r < t.rows(); ++r)
            for (Eigen::Index c = 0; c < t.cols(); ++c) nt.data[idx++] = static_cast<float>(t(r, c));
        table.emplace(name, std::move(nt));
    };
    put("w1", m.w1);
    put("w2", m.w2);
    put("w3", m.w3);
    put("b1", m.b1);
    put("b2", m.b2);
    put("b3", m.b3);
    put("input_mean", m.input_mean);
    put("input_std", m.input_std);
    write_container(path, config, table);
}

inline BaselineModel load_baseline(const std::filesystem::path& path) {
    auto [config, table] = read_container(path);
    BaselineModel m;
    try {
        check(config.at("kind").get<std::string>() == "baseline", ErrorCode::VersionMismatch,
              "container does not hold a baseline model");
        m.frames = config.at("frames").get<int>();
        m.joints = config.at("joints").get<int>();
        m.root_index = config.at("root_index").get<int>();
        m.sigma = config.at("sigma").get<double>();
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::CorruptHeader, std::string("baseline config: ") + e.what());
    }
    auto get = [&table](const std::string& name) {
        const auto it = table.find(name);
        check(it != table.end(), ErrorCode::CorruptHeader, "missing tensor " + name);
        const auto& nt = it->second;
        check(nt.dims.size() == 2, ErrorCode::CorruptHeader, "tensor " + name + " must be rank 2");
        Eigen::MatrixXd t(nt.dims[0], nt.dims[1]);
        std::size_t idx = 0;
        for (Eigen::Index r = 0; r < t.rows(); ++r)
            for (Eigen::Index c = 0; c < t.cols(); ++c) t(r, c) = nt.data[idx++];
        return t;
    };
    m.w1 = get("w1");
    m.w2 = get("w2");
    m.w3 = get("w3");
    m.b1 = get("b1");
    m.b2 = get("b2");
    m.b3 = get("b3");
    m.input_mean = get("input_mean");
    m.input_std = get("input_std");
    return m;
}

}  // namespace platypose
