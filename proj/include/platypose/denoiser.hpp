#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "platypose/errors.hpp"
#include "platypose/rng.hpp"
#include "platypose/types.hpp"

// Single-step denoiser G(x_t, t) -> x0_hat: an encoder-only transformer over
// F + 1 tokens. Token 0 embeds the timestep (sinusoidal encoding through a
// 2-layer SiLU MLP); tokens 1..F are linear projections of the per-frame
// poses plus a fixed sinusoidal positional embedding. All output tokens
// except the first are linearly decoded back to pose space.
//
// Forward and backward passes are written out by hand so gradients are exact;
// the test suite checks them against central finite differences on a double
// instantiation.

namespace platypose {

struct DenoiserConfig {
    int model_dim = 64;
    int layers = 4;
    int heads = 4;
    int ff_dim = 256;  // conventionally 4 * model_dim
    int max_frames = 64;
    int joints = 17;
    int max_timestep = 50;
    double dropout = 0.1;

    int input_dim() const { return joints * 3; }
};

inline void validate_denoiser_config(const DenoiserConfig& cfg) {
    check(cfg.model_dim >= 2 && cfg.model_dim % cfg.heads == 0, ErrorCode::InvalidConfig,
          "model_dim must be positive and divisible by heads");
    check(cfg.layers >= 1 && cfg.ff_dim >= 1 && cfg.max_frames >= 1 && cfg.joints >= 2,
          ErrorCode::InvalidConfig, "bad denoiser dimensions");
    check(cfg.dropout >= 0.0 && cfg.dropout < 1.0, ErrorCode::InvalidConfig, "dropout must be in [0, 1)");
}

template <class S>
struct AttentionWeights {
    MatX<S> wq, wk, wv, wo;  // D x D
    VecX<S> bq, bk, bv, bo;  // D
};

template <class S>
struct BlockWeights {
    AttentionWeights<S> attn;
    VecX<S> ln1_gamma, ln1_beta;
    MatX<S> ff_w1;  // ff_dim x D
    VecX<S> ff_b1;
    MatX<S> ff_w2;  // D x ff_dim
    VecX<S> ff_b2;
    VecX<S> ln2_gamma, ln2_beta;
};

template <class S>
struct DenoiserWeights {
    MatX<S> time_w1, time_w2;  // D x D
    VecX<S> time_b1, time_b2;
    MatX<S> in_w;  // D x input_dim
    VecX<S> in_b;
    std::vector<BlockWeights<S>> blocks;
    MatX<S> out_w;  // input_dim x D
    VecX<S> out_b;
};

// Applies fn(name, tensor) to every weight tensor; `tensor` is either a
// MatX<S> or VecX<S> reference. Iteration order is the serialization order.
template <class S, class W, class Fn>
void visit_tensors(W&& w, Fn&& fn) {
    fn("time_w1", w.time_w1);
    fn("time_b1", w.time_b1);
    fn("time_w2", w.time_w2);
    fn("time_b2", w.time_b2);
    fn("in_w", w.in_w);
    fn("in_b", w.in_b);
    for (std::size_t l = 0; l < w.blocks.size(); ++l) {
        const std::string p = "block" + std::to_string(l) + "/";
        auto& b = w.blocks[l];
        fn(p + "attn_wq", b.attn.wq);
        fn(p + "attn_bq", b.attn.bq);
        fn(p + "attn_wk", b.attn.wk);
        fn(p + "attn_bk", b.attn.bk);
        fn(p + "attn_wv", b.attn.wv);
        fn(p + "attn_bv", b.attn.bv);
        fn(p + "attn_wo", b.attn.wo);
        fn(p + "attn_bo", b.attn.bo);
        fn(p + "ln1_gamma", b.ln1_gamma);
        fn(p + "ln1_beta", b.ln1_beta);
        fn(p + "ff_w1", b.ff_w1);
        fn(p + "ff_b1", b.ff_b1);
        fn(p + "ff_w2", b.ff_w2);
        fn(p + "ff_b2", b.ff_b2);
        fn(p + "ln2_gamma", b.ln2_gamma);
        fn(p + "ln2_beta", b.ln2_beta);
    }
    fn("out_w", w.out_w);
    fn("out_b", w.out_b);
}

namespace nn {

constexpr double kLayerNormEps = 1e-5;

template <class S>
S silu(S x) {
    const S sig = S(1) / (S(1) + std::exp(-x));
    return x * sig;
}

template <class S>
S silu_grad(S x) {
    const S sig = S(1) / (S(1) + std::exp(-x));
    return sig * (S(1) + x * (S(1) - sig));
}

template <class S>
S gelu(S x) {
    return S(0.5) * x * (S(1) + std::erf(x / std::sqrt(S(2))));
}

template <class S>
S gelu_grad(S x) {
    const S phi = std::exp(-x * x / S(2)) / std::sqrt(S(2) * static_cast<S>(std::numbers::pi));
    return S(0.5) * (S(1) + std::erf(x / std::sqrt(S(2)))) + x * phi;
}

template <class S>
VecX<S> sinusoidal_embedding(int pos, int dim) {
    VecX<S> e(dim);
    for (int i = 0; i < dim / 2; ++i) {
        const double freq = std::exp(-std::log(10000.0) * (2.0 * i) / dim);
        e(2 * i) = static_cast<S>(std::sin(pos * freq));
        e(2 * i + 1) = static_cast<S>(std::cos(pos * freq));
    }
    if (dim % 2 == 1) e(dim - 1) = S(0);
    return e;
}

// rowwise layer norm; caches mean/inv-std/normalized values for backward
template <class S>
struct LayerNormCache {
    VecX<S> mean, inv_std;
    MatX<S> xhat;
};

template <class S>
MatX<S> layer_norm(const MatX<S>& x, const VecX<S>& gamma, const VecX<S>& beta, LayerNormCache<S>& cache) {
    const auto rows = x.rows(), cols = x.cols();
    cache.mean.resize(rows);
    cache.inv_std.resize(rows);
    cache.xhat.resize(rows, cols);
    MatX<S> out(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const S mu = x.row(r).mean();
        const S var = (x.row(r).array() - mu).square().sum() / static_cast<S>(cols);
        const S inv = S(1) / std::sqrt(var + static_cast<S>(kLayerNormEps));
        cache.mean(r) = mu;
        cache.inv_std(r) = inv;
        cache.xhat.row(r) = (x.row(r).array() - mu) * inv;
        out.row(r) = cache.xhat.row(r).array() * gamma.transpose().array() + beta.transpose().array();
    }
    return out;
}

template <class S>
MatX<S> layer_norm_backward(const MatX<S>& dy, const LayerNormCache<S>& cache, const VecX<S>& gamma,
                            VecX<S>& dgamma, VecX<S>& dbeta) {
    const auto rows = dy.rows(), cols = dy.cols();
    MatX<S> dx(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        dgamma.array() += (dy.row(r).array() * cache.xhat.row(r).array()).transpose();
        dbeta.array() += dy.row(r).transpose().array();
        const Eigen::Array<S, 1, Eigen::Dynamic> dxhat = dy.row(r).array() * gamma.transpose().array();
        const S inv = cache.inv_std(r);
        const S m1 = dxhat.sum() / static_cast<S>(cols);
        const S m2 = (dxhat * cache.xhat.row(r).array()).sum() / static_cast<S>(cols);
        dx.row(r) = ((dxhat - m1 - cache.xhat.row(r).array() * m2) * inv).matrix();
    }
    return dx;
}

}  // namespace nn

template <class S>
DenoiserWeights<S> make_zero_weights(const DenoiserConfig& cfg) {
    const int D = cfg.model_dim, Din = cfg.input_dim(), Dff = cfg.ff_dim;
    DenoiserWeights<S> w;
    w.time_w1 = MatX<S>::Zero(D, D);
    w.time_b1 = VecX<S>::Zero(D);
    w.time_w2 = MatX<S>::Zero(D, D);
    w.time_b2 = VecX<S>::Zero(D);
    w.in_w = MatX<S>::Zero(D, Din);
    w.in_b = VecX<S>::Zero(D);
    w.blocks.resize(cfg.layers);
    for (auto& b : w.blocks) {
        b.attn.wq = MatX<S>::Zero(D, D);
        b.attn.wk = MatX<S>::Zero(D, D);
        b.attn.wv = MatX<S>::Zero(D, D);
        b.attn.wo = MatX<S>::Zero(D, D);
        b.attn.bq = VecX<S>::Zero(D);
        b.attn.bk = VecX<S>::Zero(D);
        b.attn.bv = VecX<S>::Zero(D);
        b.attn.bo = VecX<S>::Zero(D);
        b.ln1_gamma = VecX<S>::Zero(D);
        b.ln1_beta = VecX<S>::Zero(D);
        b.ff_w1 = MatX<S>::Zero(Dff, D);
        b.ff_b1 = VecX<S>::Zero(Dff);
        b.ff_w2 = MatX<S>::Zero(D, Dff);
        b.ff_b2 = VecX<S>::Zero(D);
        b.ln2_gamma = VecX<S>::Zero(D);
        b.ln2_beta = VecX<S>::Zero(D);
    }
    w.out_w = MatX<S>::Zero(Din, D);
    w.out_b = VecX<S>::Zero(Din);
    return w;
}

template <class S>
DenoiserWeights<S> init_denoiser(const DenoiserConfig& cfg, Rng& rng) {
    validate_denoiser_config(cfg);
    DenoiserWeights<S> w = make_zero_weights<S>(cfg);
    auto fill = [&rng](auto& tensor) {
        const double fan_in = tensor.cols() == 1 ? tensor.rows() : tensor.cols();
        const double fan_out = tensor.cols() == 1 ? tensor.rows() : tensor.rows();
        const double std_dev = std::sqrt(2.0 / (fan_in + fan_out));
        for (Eigen::Index r = 0; r < tensor.rows(); ++r)
            for (Eigen::Index c = 0; c < tensor.cols(); ++c)
                tensor(r, c) = static_cast<S>(rng.normal() * std_dev);
    };
    visit_tensors<S>(w, [&](const std::string& name, auto& t) {
        if (name.find("ln") != std::string::npos) return;  // handled below
        if constexpr (std::decay_t<decltype(t)>::ColsAtCompileTime == 1) {
            t.setZero();  // biases start at zero
        } else {
            fill(t);
        }
    });
    for (auto& b : w.blocks) {
        b.ln1_gamma.setOnes();
        b.ln1_beta.setZero();
        b.ln2_gamma.setOnes();
        b.ln2_beta.setZero();
    }
    return w;
}

namespace nn {

template <class S>
struct BlockCache {
    MatX<S> h_in;                  // block input
    MatX<S> q, k, v;               // M x D
    std::vector<MatX<S>> probs;    // per head, M x M
    MatX<S> concat;                // M x D, heads concatenated
    MatX<S> attn_out;              // after wo, before dropout
    MatX<S> drop_mask_attn;        // empty when dropout off
    LayerNormCache<S> ln1;
    MatX<S> h_mid;                 // after ln1
    MatX<S> ff_pre;                // M x Dff
    MatX<S> ff_act;
    MatX<S> ff_out;                // M x D, before dropout
    MatX<S> drop_mask_ff;
    LayerNormCache<S> ln2;
};

template <class S>
struct ForwardCache {
    int valid_tokens = 0;
    VecX<S> time_pe, time_pre, time_act;  // timestep embedding pipeline
    MatX<S> x;                            // F x Din input
    MatX<S> h0;                           // token matrix entering block 0
    std::vector<BlockCache<S>> blocks;
    MatX<S> h_final;
};

template <class S>
MatX<S> apply_dropout(const MatX<S>& x, double p, Rng& rng, MatX<S>& mask_out) {
    mask_out.resize(x.rows(), x.cols());
    const S scale = static_cast<S>(1.0 / (1.0 - p));
    MatX<S> out(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r)
        for (Eigen::Index c = 0; c < x.cols(); ++c) {
            const S keep = rng.uniform() < p ? S(0) : scale;
            mask_out(r, c) = keep;
            out(r, c) = x(r, c) * keep;
        }
    return out;
}

// Full forward pass over F + 1 tokens. Tokens with index > valid_f are
// padding: they are excluded from attention keys and carry no loss.
template <class S>
MatX<S> denoiser_forward_impl(const DenoiserWeights<S>& w, const DenoiserConfig& cfg, const MatX<S>& x_t,
                              int t, int valid_f, bool train_mode, Rng* drop_rng, ForwardCache<S>* cache) {
    const int F = static_cast<int>(x_t.rows());
    const int D = cfg.model_dim;
    const int heads = cfg.heads;
    const int dh = D / heads;
    check(F >= 1 && F <= cfg.max_frames, ErrorCode::SequenceTooLong,
          "sequence length " + std::to_string(F) + " exceeds max_frames " + std::to_string(cfg.max_frames));
    check(x_t.cols() == cfg.input_dim(), ErrorCode::ShapeMismatch, "input width must be joints*3");
    check(t >= 0 && t <= cfg.max_timestep, ErrorCode::TimestepOutOfRange,
          "timestep " + std::to_string(t) + " outside [0, " + std::to_string(cfg.max_timestep) + "]");
    if (valid_f < 0) valid_f = F;
    check(valid_f >= 1 && valid_f <= F, ErrorCode::ShapeMismatch, "valid frame count out of range");

    const int M = F + 1;
    const int Mv = valid_f + 1;  // token 0 plus valid frames
    const bool drop = train_mode && cfg.dropout > 0.0 && drop_rng != nullptr;
    const S inv_sqrt_dh = S(1) / std::sqrt(static_cast<S>(dh));

    // timestep token
    const VecX<S> pe_t = sinusoidal_embedding<S>(t, D);
    const VecX<S> pre = w.time_w1 * pe_t + w.time_b1;
    VecX<S> act(D);
    for (int i = 0; i < D; ++i) act(i) = silu(pre(i));
    const VecX<S> tok0 = w.time_w2 * act + w.time_b2;

    MatX<S> h(M, D);
    h.row(0) = tok0.transpose();
    for (int f = 0; f < F; ++f)
        h.row(f + 1) = (w.in_w * x_t.row(f).transpose() + w.in_b + sinusoidal_embedding<S>(f, D)).transpose();

    if (cache) {
        cache->valid_tokens = Mv;
        cache->time_pe = pe_t;
        cache->time_pre = pre;
        cache->time_act = act;
        cache->x = x_t;
        cache->h0 = h;
        cache->blocks.resize(cfg.layers);
    }

    for (int l = 0; l < cfg.layers; ++l) {
        const auto& b = w.blocks[l];
        BlockCache<S> bc;
        bc.h_in = h;

        MatX<S> q = h * b.attn.wq.transpose();
        q.rowwise() += b.attn.bq.transpose();
        MatX<S> k = h * b.attn.wk.transpose();
        k.rowwise() += b.attn.bk.transpose();
        MatX<S> v = h * b.attn.wv.transpose();
        v.rowwise() += b.attn.bv.transpose();

        MatX<S> concat(M, D);
        bc.probs.resize(heads);
        for (int hd = 0; hd < heads; ++hd) {
            const auto qh = q.middleCols(hd * dh, dh);
            const auto kh = k.middleCols(hd * dh, dh);
            const auto vh = v.middleCols(hd * dh, dh);
            MatX<S> scores = qh * kh.transpose() * inv_sqrt_dh;
            for (int r = 0; r < M; ++r)
                for (int c = Mv; c < M; ++c) scores(r, c) = -std::numeric_limits<S>::infinity();
            MatX<S> p(M, M);
            for (int r = 0; r < M; ++r) {
                const S mx = scores.row(r).head(Mv).maxCoeff();
                S denom = S(0);
                for (int c = 0; c < M; ++c) {
                    const S e = c < Mv ? std::exp(scores(r, c) - mx) : S(0);
                    p(r, c) = e;
                    denom += e;
                }
                p.row(r) /= denom;
            }
            concat.middleCols(hd * dh, dh) = p * vh;
            bc.probs[hd] = std::move(p);
        }
        MatX<S> attn_out = concat * b.attn.wo.transpose();
        attn_out.rowwise() += b.attn.bo.transpose();

        bc.q = std::move(q);
        bc.k = std::move(k);
        bc.v = std::move(v);
        bc.concat = std::move(concat);
        bc.attn_out = attn_out;

        MatX<S> attn_res = attn_out;
        if (drop) attn_res = apply_dropout(attn_out, cfg.dropout, *drop_rng, bc.drop_mask_attn);
        const MatX<S> sum1 = h + attn_res;
        MatX<S> h_mid = layer_norm(sum1, b.ln1_gamma, b.ln1_beta, bc.ln1);
        bc.h_mid = h_mid;

        MatX<S> ff_pre = h_mid * b.ff_w1.transpose();
        ff_pre.rowwise() += b.ff_b1.transpose();
        MatX<S> ff_act(M, cfg.ff_dim);
        for (Eigen::Index r = 0; r < ff_pre.rows(); ++r)
            for (Eigen::Index c = 0; c < ff_pre.cols(); ++c) ff_act(r, c) = gelu(ff_pre(r, c));
        MatX<S> ff_out = ff_act * b.ff_w2.transpose();
        ff_out.rowwise() += b.ff_b2.transpose();
        bc.ff_pre = std::move(ff_pre);
        bc.ff_act = std::move(ff_act);
        bc.ff_out = ff_out;

        MatX<S> ff_res = ff_out;
        if (drop) ff_res = apply_dropout(ff_out, cfg.dropout, *drop_rng, bc.drop_mask_ff);
        const MatX<S> sum2 = h_mid + ff_res;
        h = layer_norm(sum2, b.ln2_gamma, b.ln2_beta, bc.ln2);
        if (cache) cache->blocks[l] = std::move(bc);
    }

    if (cache) cache->h_final = h;

    MatX<S> y = h.bottomRows(F) * w.out_w.transpose();
    y.rowwise() += w.out_b.transpose();
    return y;
}

}  // namespace nn

/// Predict the clean sequence from a noised one. Deterministic (no dropout).
template <class S>
MatX<S> denoiser_forward(const DenoiserWeights<S>& w, const DenoiserConfig& cfg, const MatX<S>& x_t, int t,
                         int valid_f = -1) {
    return nn::denoiser_forward_impl<S>(w, cfg, x_t, t, valid_f, false, nullptr, nullptr);
}

template <class S>
struct TrainSample {
    MatX<S> x_t;  // padded to a common row count within a batch
    MatX<S> x0;
    int t = 0;
    int valid_f = 0;  // rows beyond this are padding
};

template <class S>
struct LossAndGrads {
    double loss = 0.0;
    DenoiserWeights<S> grads;
};

namespace nn {

template <class S>
void denoiser_backward_impl(const DenoiserWeights<S>& w, const DenoiserConfig& cfg, const ForwardCache<S>& fc,
                            const MatX<S>& dy, DenoiserWeights<S>& g) {
    const int F = static_cast<int>(fc.x.rows());
    const int M = F + 1;
    const int D = cfg.model_dim;
    const int heads = cfg.heads;
    const int dh = D / heads;
    const S inv_sqrt_dh = S(1) / std::sqrt(static_cast<S>(dh));

    // output projection
    g.out_w += dy.transpose() * fc.h_final.bottomRows(F);
    g.out_b += dy.colwise().sum().transpose();
    MatX<S> dh_cur = MatX<S>::Zero(M, D);
    dh_cur.bottomRows(F) = dy * w.out_w;

    for (int l = cfg.layers - 1; l >= 0; --l) {
        const auto& b = w.blocks[l];
        auto& gb = g.blocks[l];
        const auto& bc = fc.blocks[l];

        // ln2
        MatX<S> d_sum2 = layer_norm_backward(dh_cur, bc.ln2, b.ln2_gamma, gb.ln2_gamma, gb.ln2_beta);
        MatX<S> d_hmid = d_sum2;
        MatX<S> d_ffout = d_sum2;
        if (bc.drop_mask_ff.size() > 0) d_ffout = d_ffout.cwiseProduct(bc.drop_mask_ff);

        // feed-forward
        gb.ff_w2 += d_ffout.transpose() * bc.ff_act;
        gb.ff_b2 += d_ffout.colwise().sum().transpose();
        MatX<S> d_ffact = d_ffout * b.ff_w2;
        MatX<S> d_ffpre(M, cfg.ff_dim);
        for (Eigen::Index r = 0; r < d_ffpre.rows(); ++r)
            for (Eigen::Index c = 0; c < d_ffpre.cols(); ++c)
                d_ffpre(r, c) = d_ffact(r, c) * gelu_grad(bc.ff_pre(r, c));
        gb.ff_w1 += d_ffpre.transpose() * bc.h_mid;
        gb.ff_b1 += d_ffpre.colwise().sum().transpose();
        d_hmid += d_ffpre * b.ff_w1;

        // ln1
        MatX<S> d_sum1 = layer_norm_backward(d_hmid, bc.ln1, b.ln1_gamma, gb.ln1_gamma, gb.ln1_beta);
        MatX<S> d_hin = d_sum1;
        MatX<S> d_attnout = d_sum1;
        if (bc.drop_mask_attn.size() > 0) d_attnout = d_attnout.cwiseProduct(bc.drop_mask_attn);

        // attention output projection
        gb.attn.wo += d_attnout.transpose() * bc.concat;
        gb.attn.bo += d_attnout.colwise().sum().transpose();
        MatX<S> d_concat = d_attnout * b.attn.wo;

        MatX<S> dq(M, D), dk(M, D), dv(M, D);
        for (int hd = 0; hd < heads; ++hd) {
            const auto& p = bc.probs[hd];
            const auto vh = bc.v.middleCols(hd * dh, dh);
            const auto qh = bc.q.middleCols(hd * dh, dh);
            const auto kh = bc.k.middleCols(hd * dh, dh);
            const auto d_oh = d_concat.middleCols(hd * dh, dh);

            MatX<S> dp = d_oh * vh.transpose();
            dv.middleCols(hd * dh, dh) = p.transpose() * d_oh;

            MatX<S> dscores(M, M);
            for (int r = 0; r < M; ++r) {
                const S dot = dp.row(r).cwiseProduct(p.row(r)).sum();
                dscores.row(r) = (p.row(r).array() * (dp.row(r).array() - dot)).matrix();
            }
            dq.middleCols(hd * dh, dh) = dscores * kh * inv_sqrt_dh;
            dk.middleCols(hd * dh, dh) = dscores.transpose() * qh * inv_sqrt_dh;
        }
        gb.attn.wq += dq.transpose() * bc.h_in;
        gb.attn.bq += dq.colwise().sum().transpose();
        gb.attn.wk += dk.transpose() * bc.h_in;
        gb.attn.bk += dk.colwise().sum().transpose();
        gb.attn.wv += dv.transpose() * bc.h_in;
        gb.attn.bv += dv.colwise().sum().transpose();
        d_hin += dq * b.attn.wq + dk * b.attn.wk + dv * b.attn.wv;

        dh_cur = std::move(d_hin);
    }

    // timestep token
    const VecX<S> d_tok0 = dh_cur.row(0).transpose();
    g.time_w2 += d_tok0 * fc.time_act.transpose();
    g.time_b2 += d_tok0;
    VecX<S> d_act = w.time_w2.transpose() * d_tok0;
    VecX<S> d_pre(D);
    for (int i = 0; i < D; ++i) d_pre(i) = d_act(i) * silu_grad(fc.time_pre(i));
    g.time_w1 += d_pre * fc.time_pe.transpose();
    g.time_b1 += d_pre;

    // frame tokens
    const MatX<S> d_tok = dh_cur.bottomRows(F);
    g.in_w += d_tok.transpose() * fc.x;
    g.in_b += d_tok.colwise().sum().transpose();
}

}  // namespace nn

/// Mean-squared-error loss over all valid (frame, joint, coordinate) entries
/// of the batch, with exact gradients for every weight tensor.
template <class S>
LossAndGrads<S> loss_and_gradient(const DenoiserWeights<S>& w, const DenoiserConfig& cfg,
                                  const std::vector<TrainSample<S>>& batch, bool train_mode = false,
                                  Rng* drop_rng = nullptr) {
    check(!batch.empty(), ErrorCode::EmptyDataset, "empty batch");
    double total_count = 0.0;
    for (const auto& s : batch) {
        check(s.x_t.rows() == s.x0.rows() && s.x_t.cols() == s.x0.cols(), ErrorCode::ShapeMismatch,
              "x_t and x0 must have matching shapes");
        check(s.valid_f >= 1 && s.valid_f <= s.x_t.rows(), ErrorCode::ShapeMismatch, "bad valid_f");
        total_count += static_cast<double>(s.valid_f) * static_cast<double>(s.x_t.cols());
    }

    LossAndGrads<S> out;
    out.grads = make_zero_weights<S>(cfg);
    double loss = 0.0;
    for (const auto& s : batch) {
        nn::ForwardCache<S> fc;
        const MatX<S> y = nn::denoiser_forward_impl<S>(w, cfg, s.x_t, s.t, s.valid_f, train_mode, drop_rng, &fc);
        MatX<S> dy = MatX<S>::Zero(y.rows(), y.cols());
        for (int f = 0; f < s.valid_f; ++f) {
            for (Eigen::Index c = 0; c < y.cols(); ++c) {
                const double diff = static_cast<double>(y(f, c)) - static_cast<double>(s.x0(f, c));
                loss += diff * diff;
                dy(f, c) = static_cast<S>(2.0 * diff / total_count);
            }
        }
        nn::denoiser_backward_impl<S>(w, cfg, fc, dy, out.grads);
    }
    out.loss = loss / total_count;
    return out;
}

}  // namespace platypose
