#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "platypose/errors.hpp"
#include "platypose/types.hpp"

// On-disk formats are little-endian binary with 4-byte magics:
//   .mseq  "MSEQ" v1: u32 F, u32 J, u32 root_index,
//          F*J*3 float32 positions, F*3 float32 root trajectory
//   .obs2d "OBS2" v1: u32 F, u32 J, u32 C, then per camera:
//          u32 id length, id bytes, F*J*2 float32 keypoints, F*J float32 confidences
// Camera parameters travel as JSON (rotation row-major 9, translation 3,
// focal 2, principal_point 2).

namespace platypose {

static_assert(std::endian::native == std::endian::little, "writers assume a little-endian host");

namespace detail {

inline void write_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline std::uint32_t read_u32(std::istream& is, const char* what) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    check(static_cast<bool>(is), ErrorCode::CorruptHeader, std::string("truncated while reading ") + what);
    return v;
}

inline void write_f32(std::ostream& os, const float* data, std::size_t count) {
    os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(float)));
}

inline void read_f32(std::istream& is, float* data, std::size_t count, const char* what) {
    is.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(float)));
    check(static_cast<bool>(is), ErrorCode::CorruptHeader, std::string("truncated while reading ") + what);
}

inline void expect_magic(std::istream& is, const char expected[4], const char* format_name) {
    std::array<char, 4> m{};
    is.read(m.data(), 4);
    check(static_cast<bool>(is), ErrorCode::CorruptHeader, std::string("file too short for ") + format_name);
    check(std::memcmp(m.data(), expected, 4) == 0, ErrorCode::CorruptHeader,
          std::string("bad magic for ") + format_name);
}

}  // namespace detail

inline void write_motion(const MotionSequence& seq, const std::filesystem::path& path) {
    validate_motion(seq);
    std::ofstream os(path, std::ios::binary);
    check(static_cast<bool>(os), ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    os.write("MSEQ", 4);
    detail::write_u32(os, 1u);
    detail::write_u32(os, static_cast<std::uint32_t>(seq.frames));
    detail::write_u32(os, static_cast<std::uint32_t>(seq.joints));
    detail::write_u32(os, static_cast<std::uint32_t>(seq.root_index));
    detail::write_f32(os, seq.positions.data(), seq.positions.size());
    detail::write_f32(os, seq.root_trajectory.data(), seq.root_trajectory.size());
    check(static_cast<bool>(os), ErrorCode::IoFailure, "write failed for " + path.string());
}

inline MotionSequence read_motion(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    check(static_cast<bool>(is), ErrorCode::IoFailure, "cannot open " + path.string());
    detail::expect_magic(is, "MSEQ", "motion file");
    const auto version = detail::read_u32(is, "version");
    check(version == 1u, ErrorCode::FormatVersionMismatch,
          "unsupported motion file version " + std::to_string(version));
    const auto frames = detail::read_u32(is, "frame count");
    const auto joints = detail::read_u32(is, "joint count");
    const auto root = detail::read_u32(is, "root index");
    check(frames >= 1 && joints >= 2 && root < joints, ErrorCode::CorruptHeader, "implausible header");
    MotionSequence seq = make_motion(static_cast<int>(frames), static_cast<int>(joints), static_cast<int>(root));
    detail::read_f32(is, seq.positions.data(), seq.positions.size(), "positions");
    detail::read_f32(is, seq.root_trajectory.data(), seq.root_trajectory.size(), "root trajectory");
    return seq;
}

inline void write_observations(const std::vector<Observation2D>& cams, const std::filesystem::path& path) {
    check(!cams.empty(), ErrorCode::ShapeMismatch, "no observations to write");
    for (const auto& o : cams) validate_observation(o);
    const int F = cams.front().frames, J = cams.front().joints;
    for (const auto& o : cams)
        check(o.frames == F && o.joints == J, ErrorCode::ShapeMismatch, "cameras disagree on F or J");

    std::ofstream os(path, std::ios::binary);
    check(static_cast<bool>(os), ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    os.write("OBS2", 4);
    detail::write_u32(os, 1u);
    detail::write_u32(os, static_cast<std::uint32_t>(F));
    detail::write_u32(os, static_cast<std::uint32_t>(J));
    detail::write_u32(os, static_cast<std::uint32_t>(cams.size()));
    for (const auto& o : cams) {
        detail::write_u32(os, static_cast<std::uint32_t>(o.camera_id.size()));
        os.write(o.camera_id.data(), static_cast<std::streamsize>(o.camera_id.size()));
        detail::write_f32(os, o.keypoints.data(), o.keypoints.size());
        detail::write_f32(os, o.confidence.data(), o.confidence.size());
    }
    check(static_cast<bool>(os), ErrorCode::IoFailure, "write failed for " + path.string());
}

inline std::vector<Observation2D> read_observations(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    check(static_cast<bool>(is), ErrorCode::IoFailure, "cannot open " + path.string());
    detail::expect_magic(is, "OBS2", "observation file");
    const auto version = detail::read_u32(is, "version");
    check(version == 1u, ErrorCode::FormatVersionMismatch,
          "unsupported observation file version " + std::to_string(version));
    const auto frames = detail::read_u32(is, "frame count");
    const auto joints = detail::read_u32(is, "joint count");
    const auto n_cams = detail::read_u32(is, "camera count");
    check(frames >= 1 && joints >= 1 && n_cams >= 1 && n_cams < 1024, ErrorCode::CorruptHeader, "implausible header");

    std::vector<Observation2D> cams;
    cams.reserve(n_cams);
    for (std::uint32_t c = 0; c < n_cams; ++c) {
        const auto id_len = detail::read_u32(is, "camera id length");
        check(id_len < 4096, ErrorCode::CorruptHeader, "implausible camera id length");
        std::string id(id_len, '\0');
        is.read(id.data(), id_len);
        check(static_cast<bool>(is), ErrorCode::CorruptHeader, "truncated camera id");
        Observation2D obs = make_observation(id, static_cast<int>(frames), static_cast<int>(joints));
        detail::read_f32(is, obs.keypoints.data(), obs.keypoints.size(), "keypoints");
        detail::read_f32(is, obs.confidence.data(), obs.confidence.size(), "confidences");
        cams.push_back(std::move(obs));
    }
    return cams;
}

inline nlohmann::json camera_to_json(const CameraParams& cam) {
    nlohmann::json j;
    j["rotation"] = std::vector<double>{cam.rotation(0, 0), cam.rotation(0, 1), cam.rotation(0, 2),
                                        cam.rotation(1, 0), cam.rotation(1, 1), cam.rotation(1, 2),
                                        cam.rotation(2, 0), cam.rotation(2, 1), cam.rotation(2, 2)};
    j["translation"] = std::vector<double>{cam.translation.x(), cam.translation.y(), cam.translation.z()};
    j["focal"] = std::vector<double>{cam.focal.x(), cam.focal.y()};
    j["principal_point"] = std::vector<double>{cam.principal_point.x(), cam.principal_point.y()};
    return j;
}

inline CameraParams camera_from_json(const nlohmann::json& j) {
    CameraParams cam;
    try {
        const auto r = j.at("rotation").get<std::vector<double>>();
        const auto t = j.at("translation").get<std::vector<double>>();
        const auto f = j.at("focal").get<std::vector<double>>();
        const auto p = j.at("principal_point").get<std::vector<double>>();
        check(r.size() == 9 && t.size() == 3 && f.size() == 2 && p.size() == 2,
              ErrorCode::CorruptHeader, "camera JSON arrays have wrong lengths");
        for (int i = 0; i < 3; ++i)
            for (int k = 0; k < 3; ++k) cam.rotation(i, k) = r[static_cast<std::size_t>(i) * 3 + k];
        cam.translation = {t[0], t[1], t[2]};
        cam.focal = {f[0], f[1]};
        cam.principal_point = {p[0], p[1]};
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::CorruptHeader, std::string("camera JSON: ") + e.what());
    }
    validate_camera(cam);
    return cam;
}

inline void write_camera(const CameraParams& cam, const std::filesystem::path& path) {
    std::ofstream os(path);
    check(static_cast<bool>(os), ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    os << camera_to_json(cam).dump(2) << "\n";
    check(static_cast<bool>(os), ErrorCode::IoFailure, "write failed for " + path.string());
}

inline CameraParams read_camera(const std::filesystem::path& path) {
    std::ifstream is(path);
    check(static_cast<bool>(is), ErrorCode::IoFailure, "cannot open " + path.string());
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::CorruptHeader, std::string("camera JSON parse: ") + e.what());
    }
    return camera_from_json(j);
}

}  // namespace platypose
