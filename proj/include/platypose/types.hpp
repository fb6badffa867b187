#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "platypose/errors.hpp"

namespace platypose {

template <class S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

constexpr int kNoParent = -1;

/// Joint hierarchy. `parent[j]` is the index of joint j's parent; the root
/// carries kNoParent.
struct Skeleton {
    std::vector<std::string> joint_names;
    std::vector<int> parent;
    int root_index = 0;

    int joints() const { return static_cast<int>(parent.size()); }
};

void validate_skeleton(const Skeleton& s);

/// Root-relative 3D keypoint trajectory plus the world-frame path of the
/// root joint. Positions are stored as float32 so file round-trips are
/// bit-exact; math runs on wider scalars via to_pose_matrix.
struct MotionSequence {
    int frames = 0;
    int joints = 0;
    int root_index = 0;
    std::vector<float> positions;        // frames * joints * 3, frame-major
    std::vector<float> root_trajectory;  // frames * 3

    float& at(int f, int j, int k) { return positions[(static_cast<std::size_t>(f) * joints + j) * 3 + k]; }
    float at(int f, int j, int k) const { return positions[(static_cast<std::size_t>(f) * joints + j) * 3 + k]; }
    float& root_at(int f, int k) { return root_trajectory[static_cast<std::size_t>(f) * 3 + k]; }
    float root_at(int f, int k) const { return root_trajectory[static_cast<std::size_t>(f) * 3 + k]; }
};

inline MotionSequence make_motion(int frames, int joints, int root_index = 0) {
    MotionSequence seq;
    seq.frames = frames;
    seq.joints = joints;
    seq.root_index = root_index;
    seq.positions.assign(static_cast<std::size_t>(frames) * joints * 3, 0.0f);
    seq.root_trajectory.assign(static_cast<std::size_t>(frames) * 3, 0.0f);
    return seq;
}

void validate_motion(const MotionSequence& seq);

/// 2D keypoints for one camera with per-keypoint confidences.
struct Observation2D {
    std::string camera_id;
    int frames = 0;
    int joints = 0;
    std::vector<float> keypoints;    // frames * joints * 2, pixels
    std::vector<float> confidence;   // frames * joints

    float& pixel(int f, int j, int k) { return keypoints[(static_cast<std::size_t>(f) * joints + j) * 2 + k]; }
    float pixel(int f, int j, int k) const { return keypoints[(static_cast<std::size_t>(f) * joints + j) * 2 + k]; }
    float& conf(int f, int j) { return confidence[static_cast<std::size_t>(f) * joints + j]; }
    float conf(int f, int j) const { return confidence[static_cast<std::size_t>(f) * joints + j]; }
};

inline Observation2D make_observation(const std::string& camera_id, int frames, int joints) {
    Observation2D obs;
    obs.camera_id = camera_id;
    obs.frames = frames;
    obs.joints = joints;
    obs.keypoints.assign(static_cast<std::size_t>(frames) * joints * 2, 0.0f);
    obs.confidence.assign(static_cast<std::size_t>(frames) * joints, 1.0f);
    return obs;
}

void validate_observation(const Observation2D& obs);

/// Pinhole camera: world -> camera rotation/translation plus intrinsics.
struct CameraParams {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
    Eigen::Vector2d focal{1.0, 1.0};
    Eigen::Vector2d principal_point{0.0, 0.0};
};

void validate_camera(const CameraParams& cam);

/// N posterior draws for one observation; the unit all metrics consume.
struct HypothesisSet {
    std::vector<MotionSequence> hypotheses;
    std::string observation_ref;

    int size() const { return static_cast<int>(hypotheses.size()); }
    int frames() const { return hypotheses.empty() ? 0 : hypotheses.front().frames; }
    int joints() const { return hypotheses.empty() ? 0 : hypotheses.front().joints; }
};

void validate_hypothesis_set(const HypothesisSet& h);

// --- implementation ------------------------------------------------------

inline void validate_skeleton(const Skeleton& s) {
    const int J = s.joints();
    check(J >= 2, ErrorCode::TooFewJoints, "skeleton needs at least 2 joints, got " + std::to_string(J));
    check(s.root_index >= 0 && s.root_index < J, ErrorCode::MultipleRoots, "root_index out of range");
    check(s.joint_names.size() == s.parent.size(), ErrorCode::TooFewJoints, "joint_names/parent size mismatch");

    for (int j = 0; j < J; ++j)
        check(s.parent[j] == kNoParent || (s.parent[j] >= 0 && s.parent[j] < J), ErrorCode::CyclicHierarchy,
              "parent index out of range at joint " + std::to_string(j));

    // cycles first: walking up from any joint must terminate within J hops
    for (int j = 0; j < J; ++j) {
        int cur = j;
        int hops = 0;
        while (s.parent[cur] != kNoParent) {
            cur = s.parent[cur];
            check(++hops <= J, ErrorCode::CyclicHierarchy, "cycle reachable from joint " + std::to_string(j));
        }
        check(cur == s.root_index, ErrorCode::MultipleRoots,
              "joint " + std::to_string(j) + " terminates at a joint other than the root");
    }

    int roots = 0;
    for (int j = 0; j < J; ++j)
        if (s.parent[j] == kNoParent) ++roots;
    check(roots == 1, ErrorCode::MultipleRoots, "expected exactly one root, found " + std::to_string(roots));
}

inline void validate_motion(const MotionSequence& seq) {
    check(seq.frames >= 1, ErrorCode::InvalidMotion, "need at least one frame");
    check(seq.joints >= 2, ErrorCode::TooFewJoints, "need at least two joints");
    check(seq.root_index >= 0 && seq.root_index < seq.joints, ErrorCode::InvalidMotion, "root_index out of range");
    check(seq.positions.size() == static_cast<std::size_t>(seq.frames) * seq.joints * 3,
          ErrorCode::ShapeMismatch, "positions size mismatch");
    check(seq.root_trajectory.size() == static_cast<std::size_t>(seq.frames) * 3,
          ErrorCode::ShapeMismatch, "root_trajectory size mismatch");
    for (float v : seq.positions)
        check(std::isfinite(v), ErrorCode::InvalidMotion, "non-finite joint position");
    for (float v : seq.root_trajectory)
        check(std::isfinite(v), ErrorCode::InvalidMotion, "non-finite root trajectory");
    for (int f = 0; f < seq.frames; ++f)
        for (int k = 0; k < 3; ++k)
            check(seq.at(f, seq.root_index, k) == 0.0f, ErrorCode::InvalidMotion,
                  "root joint must sit at the origin every frame (frame " + std::to_string(f) + ")");
}

inline void validate_observation(const Observation2D& obs) {
    check(obs.frames >= 1 && obs.joints >= 1, ErrorCode::ShapeMismatch, "empty observation");
    check(obs.keypoints.size() == static_cast<std::size_t>(obs.frames) * obs.joints * 2,
          ErrorCode::ShapeMismatch, "keypoints size mismatch");
    check(obs.confidence.size() == static_cast<std::size_t>(obs.frames) * obs.joints,
          ErrorCode::ShapeMismatch, "confidence size mismatch");
    for (float v : obs.keypoints)
        check(std::isfinite(v), ErrorCode::ShapeMismatch, "non-finite keypoint");
    for (float v : obs.confidence)
        check(std::isfinite(v) && v >= 0.0f, ErrorCode::ShapeMismatch, "confidence must be finite and >= 0");
}

inline void validate_camera(const CameraParams& cam) {
    const Eigen::Matrix3d gram = cam.rotation.transpose() * cam.rotation;
    check((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-6,
          ErrorCode::InvalidCamera, "rotation is not orthonormal");
    check(std::abs(cam.rotation.determinant() - 1.0) < 1e-6, ErrorCode::InvalidCamera,
          "rotation determinant must be +1");
    check(cam.focal.x() > 0.0 && cam.focal.y() > 0.0, ErrorCode::InvalidCamera, "focal lengths must be positive");
}

inline void validate_hypothesis_set(const HypothesisSet& h) {
    check(!h.hypotheses.empty(), ErrorCode::TooFewHypotheses, "need at least one hypothesis");
    const auto& first = h.hypotheses.front();
    for (const auto& seq : h.hypotheses) {
        check(seq.frames == first.frames && seq.joints == first.joints, ErrorCode::ShapeMismatch,
              "hypotheses must share frames and joints");
        validate_motion(seq);
    }
}

// --- pose-matrix views ----------------------------------------------------
// Sequences are handled numerically as F x (3J) matrices: one row per frame,
// xyz triplets per joint.

template <class S>
MatX<S> to_pose_matrix(const MotionSequence& seq) {
    MatX<S> m(seq.frames, seq.joints * 3);
    for (int f = 0; f < seq.frames; ++f)
        for (int c = 0; c < seq.joints * 3; ++c)
            m(f, c) = static_cast<S>(seq.positions[static_cast<std::size_t>(f) * seq.joints * 3 + c]);
    return m;
}

template <class S>
MatX<S> to_root_matrix(const MotionSequence& seq) {
    MatX<S> m(seq.frames, 3);
    for (int f = 0; f < seq.frames; ++f)
        for (int k = 0; k < 3; ++k)
            m(f, k) = static_cast<S>(seq.root_at(f, k));
    return m;
}

template <class S>
MotionSequence from_pose_matrix(const MatX<S>& poses, const MatX<S>& root, int root_index) {
    MotionSequence seq = make_motion(static_cast<int>(poses.rows()), static_cast<int>(poses.cols() / 3), root_index);
    for (int f = 0; f < seq.frames; ++f) {
        for (int c = 0; c < seq.joints * 3; ++c)
            seq.positions[static_cast<std::size_t>(f) * seq.joints * 3 + c] = static_cast<float>(poses(f, c));
        for (int k = 0; k < 3; ++k)
            seq.root_at(f, k) = static_cast<float>(root(f, k));
    }
    return seq;
}

/// The default 17-joint skeleton in the Human3.6M joint ordering.
inline Skeleton h36m_skeleton() {
    Skeleton s;
    s.joint_names = {"hip",        "right_hip",  "right_knee",  "right_foot", "left_hip",      "left_knee",
                     "left_foot",  "spine",      "thorax",      "neck",       "head",          "left_shoulder",
                     "left_elbow", "left_wrist", "right_shoulder", "right_elbow", "right_wrist"};
    s.parent = {kNoParent, 0, 1, 2, 0, 4, 5, 0, 7, 8, 9, 8, 11, 12, 8, 14, 15};
    s.root_index = 0;
    return s;
}

/// Rest offsets (meters, child relative to parent) for h36m_skeleton.
inline std::vector<Eigen::Vector3d> h36m_rest_offsets() {
    return {
        {0.0, 0.0, 0.0},        // hip (root)
        {-0.13, 0.0, 0.0},      // right_hip
        {0.0, -0.45, 0.0},      // right_knee
        {0.0, -0.45, 0.0},      // right_foot
        {0.13, 0.0, 0.0},       // left_hip
        {0.0, -0.45, 0.0},      // left_knee
        {0.0, -0.45, 0.0},      // left_foot
        {0.0, 0.25, 0.0},       // spine
        {0.0, 0.25, 0.0},       // thorax
        {0.0, 0.12, 0.0},       // neck
        {0.0, 0.12, 0.0},       // head
        {0.16, -0.02, 0.0},     // left_shoulder
        {0.28, 0.0, 0.0},       // left_elbow
        {0.25, 0.0, 0.0},       // left_wrist
        {-0.16, -0.02, 0.0},    // right_shoulder
        {-0.28, 0.0, 0.0},      // right_elbow
        {-0.25, 0.0, 0.0},      // right_wrist
    };
}

}  // namespace platypose
