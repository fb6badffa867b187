#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include "platypose/checkpoint.hpp"
#include "platypose/denoiser.hpp"
#include "platypose/errors.hpp"
#include "platypose/rng.hpp"
#include "platypose/schedule.hpp"
#include "platypose/types.hpp"

namespace platypose {

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<double> loss_history;           // one entry per optimizer step
    std::vector<std::size_t> crop_histogram;    // index f-1 counts crops of length f
};

namespace detail {

template <class S>
struct TensorPtr {
    S* data;
    std::size_t size;
};

template <class S, class W>
std::vector<TensorPtr<S>> tensor_ptrs(W& w) {
    std::vector<TensorPtr<S>> out;
    visit_tensors<S>(w, [&](const std::string&, auto& t) {
        out.push_back({t.data(), static_cast<std::size_t>(t.size())});
    });
    return out;
}

}  // namespace detail

inline int draw_crop_length(Rng& rng, int max_frames) {
    return static_cast<int>(rng.uniform_int(1, max_frames));
}

/// One AdamW step with optional global-norm gradient clipping.
/// With zero gradients, zero decay and fresh moments the weights are a fixed point.
inline void adamw_step(DenoiserWeights<float>& weights, const DenoiserWeights<float>& grads,
                       DenoiserWeights<float>& m, DenoiserWeights<float>& v, std::int64_t step,
                       const TrainConfig& cfg) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    auto wp = detail::tensor_ptrs<float>(weights);
    auto gp = detail::tensor_ptrs<float>(const_cast<DenoiserWeights<float>&>(grads));
    auto mp = detail::tensor_ptrs<float>(m);
    auto vp = detail::tensor_ptrs<float>(v);

    double norm_sq = 0.0;
    for (const auto& g : gp)
        for (std::size_t i = 0; i < g.size; ++i) norm_sq += static_cast<double>(g.data[i]) * g.data[i];
    float scale = 1.0f;
    if (cfg.grad_clip > 0.0 && norm_sq > cfg.grad_clip * cfg.grad_clip)
        scale = static_cast<float>(cfg.grad_clip / std::sqrt(norm_sq));

    const float bc1 = static_cast<float>(1.0 - std::pow(beta1, static_cast<double>(step)));
    const float bc2 = static_cast<float>(1.0 - std::pow(beta2, static_cast<double>(step)));
    const float lr = static_cast<float>(cfg.learning_rate);
    const float wd = static_cast<float>(cfg.weight_decay);
    for (std::size_t ti = 0; ti < wp.size(); ++ti) {
        for (std::size_t i = 0; i < wp[ti].size; ++i) {
            const float g = gp[ti].data[i] * scale;
            float& mm = mp[ti].data[i];
            float& vv = vp[ti].data[i];
            mm = static_cast<float>(beta1) * mm + static_cast<float>(1.0 - beta1) * g;
            vv = static_cast<float>(beta2) * vv + static_cast<float>(1.0 - beta2) * g * g;
            const float mhat = mm / bc1;
            const float vhat = vv / bc2;
            float& wv = wp[ti].data[i];
            wv -= lr * (mhat / (std::sqrt(vhat) + static_cast<float>(eps)) + wd * wv);
        }
    }
}

namespace detail {

struct PreparedDataset {
    std::vector<MatX<float>> poses;  // one F x 3J matrix per sequence
    int joints = 0;
};

inline PreparedDataset prepare_dataset(const std::vector<MotionSequence>& dataset) {
    check(!dataset.empty(), ErrorCode::EmptyDataset, "training dataset is empty");
    PreparedDataset out;
    out.joints = dataset.front().joints;
    for (const auto& seq : dataset) {
        check(seq.joints == out.joints, ErrorCode::InconsistentJoints,
              "all training sequences must share a joint count");
        check(seq.frames >= 1, ErrorCode::EmptyDataset, "sequence without frames");
        out.poses.push_back(to_pose_matrix<float>(seq));
    }
    return out;
}

// Runs the per-element forward/backward over a small thread pool. Gradients
// are combined afterwards in element order, so results do not depend on the
// thread count.
inline void run_batch(const DenoiserWeights<float>& weights, const DenoiserConfig& mcfg,
                      const std::vector<TrainSample<float>>& batch, const std::vector<std::uint64_t>& drop_seeds,
                      double dropout, double& loss_out, DenoiserWeights<float>& grads_out) {
    const std::size_t B = batch.size();
    std::vector<LossAndGrads<float>> partial(B);
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t workers = std::min<std::size_t>({B, hw, 4});

    auto work = [&](std::size_t begin) {
        for (std::size_t b = begin; b < B; b += workers) {
            Rng drop_rng(drop_seeds[b]);
            partial[b] = loss_and_gradient<float>(weights, mcfg, {batch[b]}, dropout > 0.0, &drop_rng);
        }
    };
    if (workers <= 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(work, t);
        work(0);
        for (auto& th : pool) th.join();
    }

    double total_count = 0.0;
    for (const auto& s : batch) total_count += static_cast<double>(s.valid_f) * s.x_t.cols();
    loss_out = 0.0;
    auto acc = detail::tensor_ptrs<float>(grads_out);
    for (std::size_t b = 0; b < B; ++b) {
        const double w_b = static_cast<double>(batch[b].valid_f) * batch[b].x_t.cols() / total_count;
        loss_out += partial[b].loss * w_b;
        auto src = detail::tensor_ptrs<float>(partial[b].grads);
        for (std::size_t ti = 0; ti < acc.size(); ++ti)
            for (std::size_t i = 0; i < acc[ti].size; ++i)
                acc[ti].data[i] += static_cast<float>(w_b) * src[ti].data[i];
    }
}

}  // namespace detail

inline TrainResult resume_training(Checkpoint ckpt, const std::vector<MotionSequence>& dataset,
                                   std::int64_t total_steps);

/// Training loop: per step draw a batch of sequences, crop each to a random
/// prefix length, noise it to a random timestep, and take one AdamW step on
/// the denoising loss. Deterministic per seed.
inline TrainResult train(const std::vector<MotionSequence>& dataset, const TrainConfig& tcfg,
                         const DenoiserConfig& mcfg) {
    validate_train_config(tcfg);
    validate_denoiser_config(mcfg);
    auto prep = detail::prepare_dataset(dataset);
    check(prep.joints == mcfg.joints, ErrorCode::InconsistentJoints,
          "dataset joints do not match the model configuration");

    Checkpoint ckpt;
    ckpt.train = tcfg;
    ckpt.model = mcfg;
    Rng init_rng = derive_stream(tcfg.seed, 0);
    ckpt.weights = init_denoiser<float>(mcfg, init_rng);
    ckpt.opt_m = make_zero_weights<float>(mcfg);
    ckpt.opt_v = make_zero_weights<float>(mcfg);
    ckpt.step = 0;
    ckpt.rng_state = derive_stream(tcfg.seed, 1).serialize();

    return resume_training(std::move(ckpt), dataset, tcfg.steps);
}

/// Continues training until `total_steps` optimizer steps have been taken.
/// Resuming from a saved checkpoint matches an uninterrupted run bit-exactly.
inline TrainResult resume_training(Checkpoint ckpt, const std::vector<MotionSequence>& dataset,
                                   std::int64_t total_steps) {
    auto prep = detail::prepare_dataset(dataset);
    check(prep.joints == ckpt.model.joints, ErrorCode::InconsistentJoints,
          "dataset joints do not match the checkpoint");
    const NoiseSchedule sched = ckpt.schedule();
    const int crop_cap = std::min(ckpt.train.F_max, ckpt.model.max_frames);

    Rng rng;
    rng.deserialize(ckpt.rng_state);

    TrainResult result;
    result.crop_histogram.assign(static_cast<std::size_t>(crop_cap), 0);

    std::vector<TrainSample<float>> batch(static_cast<std::size_t>(ckpt.train.batch_size));
    std::vector<std::uint64_t> drop_seeds(batch.size());

    while (ckpt.step < total_steps) {
        int pad_rows = 1;
        for (std::size_t b = 0; b < batch.size(); ++b) {
            const auto idx = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(prep.poses.size()) - 1));
            const auto& full = prep.poses[idx];
            const int f_cap = std::min<int>(static_cast<int>(full.rows()), crop_cap);
            const int f_b = draw_crop_length(rng, f_cap);
            const int t_b = static_cast<int>(rng.uniform_int(1, ckpt.train.T));
            result.crop_histogram[static_cast<std::size_t>(f_b - 1)]++;

            TrainSample<float>& s = batch[b];
            s.valid_f = f_b;
            s.t = t_b;
            s.x0 = full.topRows(f_b);
            s.x_t = forward_diffuse<float>(s.x0, t_b, sched, rng);
            drop_seeds[b] = rng.bits();
            pad_rows = std::max(pad_rows, f_b);
        }
        // pad to the longest crop in the batch; padded rows are masked out
        for (auto& s : batch) {
            if (s.x_t.rows() < pad_rows) {
                MatX<float> xt = MatX<float>::Zero(pad_rows, s.x_t.cols());
                MatX<float> x0 = MatX<float>::Zero(pad_rows, s.x0.cols());
                xt.topRows(s.x_t.rows()) = s.x_t;
                x0.topRows(s.x0.rows()) = s.x0;
                s.x_t = std::move(xt);
                s.x0 = std::move(x0);
            }
        }

        double loss = 0.0;
        DenoiserWeights<float> grads = make_zero_weights<float>(ckpt.model);
        detail::run_batch(ckpt.weights, ckpt.model, batch, drop_seeds, ckpt.model.dropout, loss, grads);

        ckpt.step += 1;
        adamw_step(ckpt.weights, grads, ckpt.opt_m, ckpt.opt_v, ckpt.step, ckpt.train);
        result.loss_history.push_back(loss);
    }

    ckpt.rng_state = rng.serialize();
    result.checkpoint = std::move(ckpt);
    return result;
}

}  // namespace platypose
