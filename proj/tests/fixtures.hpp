#pragma once

// Shared fixture for sampler-level tests: a tiny diffusion prior trained on a
// 5-joint chain skeleton. Training runs once per test process.

#include <utility>
#include <vector>

#include "platypose/rng.hpp"
#include "platypose/sampler.hpp"
#include "platypose/synth.hpp"
#include "platypose/trainer.hpp"

namespace fixtures {

using namespace platypose;

struct TinyWorld {
    synth::GeneratorConfig gen;
    std::vector<MotionSequence> train_set;
    Checkpoint ckpt;
    std::vector<CameraParams> rig;
    double train_mean_speed = 0.0;  // m per frame, root-relative joints
};

inline double mean_joint_speed(const MotionSequence& seq) {
    double sum = 0.0;
    std::size_t n = 0;
    for (int f = 0; f + 1 < seq.frames; ++f)
        for (int j = 0; j < seq.joints; ++j) {
            if (j == seq.root_index) continue;
            double d2 = 0.0;
            for (int k = 0; k < 3; ++k) {
                const double d = seq.at(f + 1, j, k) - seq.at(f, j, k);
                d2 += d * d;
            }
            sum += std::sqrt(d2);
            ++n;
        }
    return n ? sum / static_cast<double>(n) : 0.0;
}

inline const TinyWorld& tiny_world() {
    static const TinyWorld world = [] {
        TinyWorld w;
        w.gen.skeleton = synth::chain_skeleton(5);
        w.gen.rest_offsets = synth::chain_offsets(5);
        w.gen.n_sequences = 48;
        w.gen.frames = 16;
        w.gen.seed = 1234;
        w.train_set = synth::generate_motions(w.gen);

        TrainConfig tcfg;
        tcfg.steps = 1500;
        tcfg.batch_size = 8;
        tcfg.learning_rate = 1e-3;
        tcfg.weight_decay = 0.0;
        tcfg.seed = 99;
        tcfg.T = 50;
        tcfg.F_max = 16;

        DenoiserConfig mcfg;
        mcfg.model_dim = 32;
        mcfg.layers = 2;
        mcfg.heads = 4;
        mcfg.ff_dim = 64;
        mcfg.max_frames = 16;
        mcfg.joints = 5;
        mcfg.dropout = 0.0;

        w.ckpt = train(w.train_set, tcfg, mcfg).checkpoint;
        w.rig = synth::default_camera_rig(4);
        for (const auto& seq : w.train_set) w.train_mean_speed += mean_joint_speed(seq);
        w.train_mean_speed /= static_cast<double>(w.train_set.size());
        return w;
    }();
    return world;
}

struct TestInstance {
    MotionSequence gt;
    std::vector<std::pair<Observation2D, CameraParams>> observations;  // all rig cameras
};

inline TestInstance make_instance(std::uint64_t seed, double pixel_noise = 0.0) {
    const TinyWorld& w = tiny_world();
    TestInstance inst;
    synth::GeneratorConfig gen = w.gen;
    gen.seed = seed + 100000;  // outside the training stream
    inst.gt = synth::generate_motion(gen, 0);
    Rng rng = derive_stream(seed, 0xfeedULL);
    const auto obs = synth::render_observations(inst.gt, w.rig, pixel_noise, rng);
    for (std::size_t c = 0; c < w.rig.size(); ++c) inst.observations.emplace_back(obs[c], w.rig[c]);
    return inst;
}

inline double mean_reprojection_error_px(const HypothesisSet& h,
                                         const std::vector<std::pair<Observation2D, CameraParams>>& obs) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& hyp : h.hypotheses) {
        for (const auto& [o, cam] : obs) {
            const auto proj = project(hyp, cam);
            for (int f = 0; f < hyp.frames; ++f)
                for (int j = 0; j < hyp.joints; ++j) {
                    if (!proj.valid_mask(f, j)) continue;
                    const double du = proj.u(f, j) - o.pixel(f, j, 0);
                    const double dv = proj.v(f, j) - o.pixel(f, j, 1);
                    sum += std::sqrt(du * du + dv * dv);
                    ++n;
                }
        }
    }
    return n ? sum / static_cast<double>(n) : 1e18;
}

inline SamplerConfig guided_config(std::uint64_t seed, int N = 1) {
    SamplerConfig cfg;
    cfg.T = 10;
    cfg.S = 2;
    cfg.n = 1;
    cfg.N = N;
    cfg.seed = seed;
    // slightly under the stability edge of the default 4-camera rig, with
    // extra update iterations so the final step lands within a pixel
    cfg.energy.lambda = 1.3e-6;
    cfg.energy.k = 5;
    return cfg;
}

}  // namespace fixtures
