#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cmath>
#include <numbers>
#include <vector>

#include "platypose/camera.hpp"
#include "platypose/errors.hpp"
#include "platypose/rng.hpp"
#include "platypose/types.hpp"

// Procedural stand-in for mocap training data. Every bone swings about its
// rest direction with a superposition of 2-4 random sinusoids inside the
// configured frequency/amplitude bands; positions follow by composing bone
// vectors down the tree, so bone lengths are constant by construction.
// Per-bone swing amplitudes are rescaled so that they sum to at most amp_hi
// along any root-to-leaf path, which bounds every root-relative joint speed
// by 2*pi*freq_hi*amp_hi.

namespace platypose::synth {

struct GeneratorConfig {
    Skeleton skeleton = h36m_skeleton();
    std::vector<Eigen::Vector3d> rest_offsets = h36m_rest_offsets();
    int n_sequences = 64;
    int frames = 64;
    double freq_lo = 0.3, freq_hi = 1.2;   // Hz
    double amp_lo = 0.05, amp_hi = 0.25;   // meters, per-bone swing displacement
    double frame_rate = 25.0;
    double root_walk_std = 0.015;          // meters per frame before smoothing
    double root_smoothness = 0.85;         // increment low-pass coefficient in [0, 1)
    double noise_std_2d = 1.0;             // rendering pixel noise
    std::uint64_t seed = 0;
};

inline void validate_generator_config(const GeneratorConfig& cfg) {
    validate_skeleton(cfg.skeleton);
    check(cfg.rest_offsets.size() == cfg.skeleton.parent.size(), ErrorCode::InvalidConfig,
          "rest_offsets must match the skeleton");
    check(cfg.n_sequences >= 1 && cfg.frames >= 1, ErrorCode::InvalidConfig, "need sequences and frames");
    check(cfg.freq_lo > 0.0 && cfg.freq_hi >= cfg.freq_lo, ErrorCode::InvalidConfig, "bad frequency band");
    check(cfg.amp_lo > 0.0 && cfg.amp_hi >= cfg.amp_lo, ErrorCode::InvalidConfig, "bad amplitude band");
    check(cfg.frame_rate > 0.0, ErrorCode::InvalidConfig, "frame_rate must be > 0");
    check(cfg.root_smoothness >= 0.0 && cfg.root_smoothness < 1.0, ErrorCode::InvalidConfig,
          "root_smoothness must lie in [0, 1)");
    check(cfg.noise_std_2d >= 0.0, ErrorCode::InvalidConfig, "noise_std_2d must be >= 0");
}

namespace detail {

struct BoneOscillator {
    std::vector<Eigen::Vector3d> axes;  // unit, orthogonal to the rest offset
    std::vector<double> angle_amp;      // radians
    std::vector<double> freq_hz;
    std::vector<double> phase;

    Eigen::Vector3d rotation_vector(double t_seconds) const {
        Eigen::Vector3d w = Eigen::Vector3d::Zero();
        for (std::size_t i = 0; i < axes.size(); ++i)
            w += axes[i] * (angle_amp[i] * std::sin(2.0 * std::numbers::pi * freq_hz[i] * t_seconds + phase[i]));
        return w;
    }
};

inline Eigen::Vector3d random_unit_orthogonal(const Eigen::Vector3d& v, Rng& rng) {
    const Eigen::Vector3d dir = v.norm() > 1e-12 ? v.normalized() : Eigen::Vector3d::UnitZ();
    for (;;) {
        Eigen::Vector3d r(rng.normal(), rng.normal(), rng.normal());
        r -= r.dot(dir) * dir;
        if (r.norm() > 1e-6) return r.normalized();
    }
}

// depth-first order guaranteeing parents precede children
inline std::vector<int> topological_order(const Skeleton& s) {
    std::vector<int> order;
    order.reserve(s.parent.size());
    std::vector<std::vector<int>> children(s.parent.size());
    for (int j = 0; j < s.joints(); ++j)
        if (s.parent[j] != kNoParent) children[static_cast<std::size_t>(s.parent[j])].push_back(j);
    std::vector<int> stack{s.root_index};
    while (!stack.empty()) {
        const int j = stack.back();
        stack.pop_back();
        order.push_back(j);
        for (auto it = children[static_cast<std::size_t>(j)].rbegin();
             it != children[static_cast<std::size_t>(j)].rend(); ++it)
            stack.push_back(*it);
    }
    return order;
}

}  // namespace detail

inline MotionSequence generate_motion(const GeneratorConfig& cfg, std::uint64_t sequence_index) {
    validate_generator_config(cfg);
    const auto& skel = cfg.skeleton;
    const int J = skel.joints();
    Rng rng = derive_stream(cfg.seed, sequence_index);

    // draw per-bone oscillators
    std::vector<detail::BoneOscillator> osc(static_cast<std::size_t>(J));
    std::vector<double> amp(static_cast<std::size_t>(J), 0.0);  // displacement target, meters
    for (int j = 0; j < J; ++j) {
        if (j == skel.root_index || cfg.rest_offsets[static_cast<std::size_t>(j)].norm() < 1e-9) continue;
        const int components = static_cast<int>(rng.uniform_int(2, 4));
        amp[static_cast<std::size_t>(j)] = cfg.amp_lo + (cfg.amp_hi - cfg.amp_lo) * rng.uniform();
        auto& o = osc[static_cast<std::size_t>(j)];
        std::vector<double> weights(static_cast<std::size_t>(components));
        double wsum = 0.0;
        for (auto& w : weights) {
            w = 0.2 + 0.8 * rng.uniform();
            wsum += w;
        }
        for (int i = 0; i < components; ++i) {
            o.axes.push_back(detail::random_unit_orthogonal(cfg.rest_offsets[static_cast<std::size_t>(j)], rng));
            o.angle_amp.push_back(weights[static_cast<std::size_t>(i)] / wsum);  // filled in below
            o.freq_hz.push_back(cfg.freq_lo + (cfg.freq_hi - cfg.freq_lo) * rng.uniform());
            o.phase.push_back(2.0 * std::numbers::pi * rng.uniform());
        }
    }

    // normalize so swing amplitudes along any root-to-leaf path sum to <= amp_hi
    double max_path = 0.0;
    for (int j = 0; j < J; ++j) {
        double path = 0.0;
        for (int cur = j; cur != kNoParent; cur = skel.parent[static_cast<std::size_t>(cur)])
            path += amp[static_cast<std::size_t>(cur)];
        max_path = std::max(max_path, path);
    }
    const double rescale = max_path > cfg.amp_hi ? cfg.amp_hi / max_path : 1.0;
    for (int j = 0; j < J; ++j) {
        auto& o = osc[static_cast<std::size_t>(j)];
        if (o.axes.empty()) continue;
        const double bone = cfg.rest_offsets[static_cast<std::size_t>(j)].norm();
        amp[static_cast<std::size_t>(j)] *= rescale;
        const double total_angle = std::min(amp[static_cast<std::size_t>(j)] / bone, 0.8);
        for (auto& a : o.angle_amp) a *= total_angle;  // weights already sum to 1
    }

    // smoothed root random walk
    MotionSequence seq = make_motion(cfg.frames, J, skel.root_index);
    Eigen::Vector3d pos = Eigen::Vector3d::Zero();
    Eigen::Vector3d vel = Eigen::Vector3d::Zero();
    for (int f = 0; f < cfg.frames; ++f) {
        const Eigen::Vector3d kick(rng.normal(), rng.normal(), rng.normal());
        vel = cfg.root_smoothness * vel + (1.0 - cfg.root_smoothness) * cfg.root_walk_std * kick;
        pos += vel;
        for (int k = 0; k < 3; ++k) seq.root_at(f, k) = static_cast<float>(pos(k));
    }

    // forward kinematics: bone vectors swing about their rest direction
    const auto order = detail::topological_order(skel);
    std::vector<Eigen::Vector3d> world(static_cast<std::size_t>(J));
    for (int f = 0; f < cfg.frames; ++f) {
        const double t = static_cast<double>(f) / cfg.frame_rate;
        for (int j : order) {
            if (j == skel.root_index) {
                world[static_cast<std::size_t>(j)] = Eigen::Vector3d::Zero();
                continue;
            }
            const auto& o = osc[static_cast<std::size_t>(j)];
            Eigen::Vector3d bone = cfg.rest_offsets[static_cast<std::size_t>(j)];
            if (!o.axes.empty()) {
                const Eigen::Vector3d w = o.rotation_vector(t);
                const double angle = w.norm();
                if (angle > 1e-12) bone = Eigen::AngleAxisd(angle, w / angle) * bone;
            }
            world[static_cast<std::size_t>(j)] = world[static_cast<std::size_t>(skel.parent[static_cast<std::size_t>(j)])] + bone;
        }
        for (int j = 0; j < J; ++j)
            for (int k = 0; k < 3; ++k) seq.at(f, j, k) = static_cast<float>(world[static_cast<std::size_t>(j)](k));
    }
    return seq;
}

/// Deterministic dataset: sequence i uses the stream derived from (seed, i).
inline std::vector<MotionSequence> generate_motions(const GeneratorConfig& cfg) {
    validate_generator_config(cfg);
    std::vector<MotionSequence> out;
    out.reserve(static_cast<std::size_t>(cfg.n_sequences));
    for (int i = 0; i < cfg.n_sequences; ++i) out.push_back(generate_motion(cfg, static_cast<std::uint64_t>(i)));
    return out;
}

/// Cameras on a circle of `radius` meters at `height`, all looking at
/// `target`. Mirrors a four-camera capture rig by default.
inline std::vector<CameraParams> default_camera_rig(int n_cameras, double radius = 3.0, double height = 1.5,
                                                    double focal = 900.0, double principal = 500.0,
                                                    const Eigen::Vector3d& target = Eigen::Vector3d(0.0, 0.0, 0.0)) {
    check(n_cameras >= 1, ErrorCode::InvalidConfig, "need at least one camera");
    std::vector<CameraParams> rig;
    for (int i = 0; i < n_cameras; ++i) {
        const double phi = 2.0 * std::numbers::pi * i / n_cameras + 0.35;  // offset avoids axis-aligned views
        const Eigen::Vector3d center(radius * std::cos(phi), height, radius * std::sin(phi));
        const Eigen::Vector3d fwd = (target - center).normalized();
        Eigen::Vector3d right = Eigen::Vector3d::UnitY().cross(fwd);
        check(right.norm() > 1e-9, ErrorCode::InvalidConfig, "camera looks along the up axis");
        right.normalize();
        const Eigen::Vector3d down = fwd.cross(right);
        CameraParams cam;
        cam.rotation.row(0) = right.transpose();
        cam.rotation.row(1) = down.transpose();
        cam.rotation.row(2) = fwd.transpose();
        cam.translation = -cam.rotation * center;
        cam.focal = {focal, focal};
        cam.principal_point = {principal, principal};
        validate_camera(cam);
        rig.push_back(cam);
    }
    return rig;
}

/// Projects the sequence with every camera and adds iid pixel noise.
/// Confidences are set to 1 (ground-truth keypoint mode).
inline std::vector<Observation2D> render_observations(const MotionSequence& seq,
                                                      const std::vector<CameraParams>& cameras,
                                                      double noise_std_2d, Rng& rng) {
    check(!cameras.empty(), ErrorCode::InvalidConfig, "no cameras");
    std::vector<Observation2D> out;
    for (std::size_t c = 0; c < cameras.size(); ++c) {
        const ProjectedKeypoints proj = project(seq, cameras[c]);
        Observation2D obs = make_observation("cam" + std::to_string(c), seq.frames, seq.joints);
        for (int f = 0; f < seq.frames; ++f)
            for (int j = 0; j < seq.joints; ++j) {
                check(proj.valid_mask(f, j), ErrorCode::AllPointsBehindCamera,
                      "keypoint behind camera " + std::to_string(c));
                obs.pixel(f, j, 0) = static_cast<float>(proj.u(f, j) + noise_std_2d * rng.normal());
                obs.pixel(f, j, 1) = static_cast<float>(proj.v(f, j) + noise_std_2d * rng.normal());
            }
        out.push_back(std::move(obs));
    }
    return out;
}

/// Small skeleton for fast tests: a kinked chain of `joints` bones.
inline Skeleton chain_skeleton(int joints) {
    Skeleton s;
    for (int j = 0; j < joints; ++j) {
        s.joint_names.push_back("j" + std::to_string(j));
        s.parent.push_back(j == 0 ? kNoParent : j - 1);
    }
    s.root_index = 0;
    return s;
}

inline std::vector<Eigen::Vector3d> chain_offsets(int joints, double bone_length = 0.3) {
    std::vector<Eigen::Vector3d> offsets{Eigen::Vector3d::Zero()};
    const Eigen::Vector3d dirs[3] = {{0.0, -1.0, 0.2}, {0.6, -0.8, 0.0}, {-0.3, -0.9, 0.3}};
    for (int j = 1; j < joints; ++j) offsets.push_back(dirs[j % 3].normalized() * bone_length);
    return offsets;
}

}  // namespace platypose::synth
