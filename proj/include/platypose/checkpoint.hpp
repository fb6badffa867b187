#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "platypose/denoiser.hpp"
#include "platypose/errors.hpp"
#include "platypose/schedule.hpp"
#include "platypose/serialization.hpp"

// Checkpoint container: magic "PLTY", u32 version, length-prefixed JSON
// config block, then a named-tensor table (u32 tensor count; per tensor:
// u32 name length, name bytes, u32 rank, u32 dims, row-major float32
// payload). Little-endian throughout. The diffusion prior and the Gaussian
// baseline share the container and differ in the JSON "kind" field.

namespace platypose {

struct NamedTensor {
    std::vector<std::uint32_t> dims;
    std::vector<float> data;
};

using TensorTable = std::map<std::string, NamedTensor>;

inline void write_container(const std::filesystem::path& path, const nlohmann::json& config,
                            const TensorTable& table) {
    std::ofstream os(path, std::ios::binary);
    check(static_cast<bool>(os), ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    os.write("PLTY", 4);
    detail::write_u32(os, 1u);
    const std::string cfg = config.dump();
    detail::write_u32(os, static_cast<std::uint32_t>(cfg.size()));
    os.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
    detail::write_u32(os, static_cast<std::uint32_t>(table.size()));
    for (const auto& [name, tensor] : table) {
        detail::write_u32(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        detail::write_u32(os, static_cast<std::uint32_t>(tensor.dims.size()));
        for (auto d : tensor.dims) detail::write_u32(os, d);
        detail::write_f32(os, tensor.data.data(), tensor.data.size());
    }
    check(static_cast<bool>(os), ErrorCode::IoFailure, "write failed for " + path.string());
}

inline std::pair<nlohmann::json, TensorTable> read_container(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    check(static_cast<bool>(is), ErrorCode::IoFailure, "cannot open " + path.string());
    char magic[4];
    is.read(magic, 4);
    check(static_cast<bool>(is) && std::memcmp(magic, "PLTY", 4) == 0, ErrorCode::VersionMismatch,
          path.string() + " is not a checkpoint container");
    const auto version = detail::read_u32(is, "container version");
    check(version == 1u, ErrorCode::VersionMismatch, "unsupported container version " + std::to_string(version));
    const auto cfg_len = detail::read_u32(is, "config length");
    check(cfg_len < (1u << 26), ErrorCode::CorruptHeader, "implausible config block length");
    std::string cfg(cfg_len, '\0');
    is.read(cfg.data(), cfg_len);
    check(static_cast<bool>(is), ErrorCode::CorruptHeader, "truncated config block");
    nlohmann::json config;
    try {
        config = nlohmann::json::parse(cfg);
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::CorruptHeader, std::string("config block: ") + e.what());
    }
    const auto count = detail::read_u32(is, "tensor count");
    check(count < (1u << 20), ErrorCode::CorruptHeader, "implausible tensor count");
    TensorTable table;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = detail::read_u32(is, "tensor name length");
        check(name_len < 4096, ErrorCode::CorruptHeader, "implausible tensor name length");
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        check(static_cast<bool>(is), ErrorCode::CorruptHeader, "truncated tensor name");
        NamedTensor t;
        const auto rank = detail::read_u32(is, "tensor rank");
        check(rank <= 4, ErrorCode::CorruptHeader, "implausible tensor rank");
        std::size_t total = 1;
        for (std::uint32_t r = 0; r < rank; ++r) {
            t.dims.push_back(detail::read_u32(is, "tensor dim"));
            total *= t.dims.back();
        }
        check(total < (1u << 28), ErrorCode::CorruptHeader, "implausible tensor size");
        t.data.resize(total);
        detail::read_f32(is, t.data.data(), total, ("tensor " + name).c_str());
        table.emplace(std::move(name), std::move(t));
    }
    return {config, table};
}

// --- tensor table <-> weight structs --------------------------------------

template <class S, class W>
void weights_to_table(W& weights, TensorTable& table, const std::string& prefix = "") {
    visit_tensors<S>(weights, [&](const std::string& name, auto& t) {
        NamedTensor nt;
        if constexpr (std::decay_t<decltype(t)>::ColsAtCompileTime == 1) {
            nt.dims = {static_cast<std::uint32_t>(t.rows())};
            nt.data.resize(t.rows());
            for (Eigen::Index r = 0; r < t.rows(); ++r) nt.data[r] = static_cast<float>(t(r));
        } else {
            nt.dims = {static_cast<std::uint32_t>(t.rows()), static_cast<std::uint32_t>(t.cols())};
            nt.data.resize(static_cast<std::size_t>(t.rows()) * t.cols());
            std::size_t idx = 0;
            for (Eigen::Index r = 0; r < t.rows(); ++r)
                for (Eigen::Index c = 0; c < t.cols(); ++c) nt.data[idx++] = static_cast<float>(t(r, c));
        }
        table.emplace(prefix + name, std::move(nt));
    });
}

template <class S, class W>
void weights_from_table(W& weights, const TensorTable& table, const std::string& prefix = "") {
    visit_tensors<S>(weights, [&](const std::string& name, auto& t) {
        const auto it = table.find(prefix + name);
        check(it != table.end(), ErrorCode::CorruptHeader, "missing tensor " + prefix + name);
        const auto& nt = it->second;
        if constexpr (std::decay_t<decltype(t)>::ColsAtCompileTime == 1) {
            check(nt.dims.size() == 1 && nt.dims[0] == static_cast<std::uint32_t>(t.rows()),
                  ErrorCode::ShapeMismatch, "shape mismatch for " + prefix + name);
            for (Eigen::Index r = 0; r < t.rows(); ++r) t(r) = static_cast<S>(nt.data[r]);
        } else {
            check(nt.dims.size() == 2 && nt.dims[0] == static_cast<std::uint32_t>(t.rows()) &&
                      nt.dims[1] == static_cast<std::uint32_t>(t.cols()),
                  ErrorCode::ShapeMismatch, "shape mismatch for " + prefix + name);
            std::size_t idx = 0;
            for (Eigen::Index r = 0; r < t.rows(); ++r)
                for (Eigen::Index c = 0; c < t.cols(); ++c) t(r, c) = static_cast<S>(nt.data[idx++]);
        }
    });
}

// --- training configuration and checkpoint state ---------------------------

struct TrainConfig {
    std::int64_t steps = 20000;
    int batch_size = 32;
    double learning_rate = 3e-4;
    double weight_decay = 1e-4;
    double grad_clip = 1.0;  // global norm; <= 0 disables
    std::uint64_t seed = 0;
    int T = 50;
    int F_max = 64;
    ScheduleKind schedule_kind = ScheduleKind::Linear;
};

inline void validate_train_config(const TrainConfig& cfg) {
    check(cfg.steps >= 1, ErrorCode::InvalidConfig, "steps must be >= 1");
    check(cfg.batch_size >= 1, ErrorCode::InvalidConfig, "batch_size must be >= 1");
    check(cfg.learning_rate > 0.0, ErrorCode::InvalidConfig, "learning_rate must be > 0");
    check(cfg.weight_decay >= 0.0, ErrorCode::InvalidConfig, "weight_decay must be >= 0");
    check(cfg.T >= 2, ErrorCode::InvalidT, "T must be >= 2");
    check(cfg.F_max >= 1, ErrorCode::InvalidConfig, "F_max must be >= 1");
}

inline nlohmann::json train_config_to_json(const TrainConfig& c) {
    return nlohmann::json{{"steps", c.steps},
                          {"batch_size", c.batch_size},
                          {"learning_rate", c.learning_rate},
                          {"weight_decay", c.weight_decay},
                          {"grad_clip", c.grad_clip},
                          {"seed", c.seed},
                          {"T", c.T},
                          {"F_max", c.F_max},
                          {"schedule_kind", schedule_kind_name(c.schedule_kind)}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.steps = j.at("steps").get<std::int64_t>();
    c.batch_size = j.at("batch_size").get<int>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.weight_decay = j.at("weight_decay").get<double>();
    c.grad_clip = j.at("grad_clip").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.T = j.at("T").get<int>();
    c.F_max = j.at("F_max").get<int>();
    c.schedule_kind = schedule_kind_from_name(j.at("schedule_kind").get<std::string>());
    return c;
}

inline nlohmann::json denoiser_config_to_json(const DenoiserConfig& c) {
    return nlohmann::json{{"model_dim", c.model_dim}, {"layers", c.layers},
                          {"heads", c.heads},         {"ff_dim", c.ff_dim},
                          {"max_frames", c.max_frames}, {"joints", c.joints},
                          {"max_timestep", c.max_timestep}, {"dropout", c.dropout}};
}

inline DenoiserConfig denoiser_config_from_json(const nlohmann::json& j) {
    DenoiserConfig c;
    c.model_dim = j.at("model_dim").get<int>();
    c.layers = j.at("layers").get<int>();
    c.heads = j.at("heads").get<int>();
    c.ff_dim = j.at("ff_dim").get<int>();
    c.max_frames = j.at("max_frames").get<int>();
    c.joints = j.at("joints").get<int>();
    c.max_timestep = j.at("max_timestep").get<int>();
    c.dropout = j.at("dropout").get<double>();
    return c;
}

/// Full training state: reloading restores the trajectory bit-exactly on
/// the same platform.
struct Checkpoint {
    TrainConfig train;
    DenoiserConfig model;
    DenoiserWeights<float> weights;
    DenoiserWeights<float> opt_m;
    DenoiserWeights<float> opt_v;
    std::int64_t step = 0;
    std::string rng_state;

    NoiseSchedule schedule() const { return make_schedule(train.T, train.schedule_kind); }
};

inline void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    nlohmann::json config;
    config["kind"] = "diffusion_prior";
    config["train"] = train_config_to_json(ckpt.train);
    config["model"] = denoiser_config_to_json(ckpt.model);
    config["step"] = ckpt.step;
    config["rng"] = ckpt.rng_state;
    TensorTable table;
    weights_to_table<float>(const_cast<DenoiserWeights<float>&>(ckpt.weights), table, "weights/");
    weights_to_table<float>(const_cast<DenoiserWeights<float>&>(ckpt.opt_m), table, "opt_m/");
    weights_to_table<float>(const_cast<DenoiserWeights<float>&>(ckpt.opt_v), table, "opt_v/");
    write_container(path, config, table);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    auto [config, table] = read_container(path);
    Checkpoint ckpt;
    try {
        check(config.at("kind").get<std::string>() == "diffusion_prior", ErrorCode::VersionMismatch,
              "container does not hold a diffusion prior");
        ckpt.train = train_config_from_json(config.at("train"));
        ckpt.model = denoiser_config_from_json(config.at("model"));
        ckpt.step = config.at("step").get<std::int64_t>();
        ckpt.rng_state = config.at("rng").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::CorruptHeader, std::string("checkpoint config: ") + e.what());
    }
    ckpt.weights = make_zero_weights<float>(ckpt.model);
    ckpt.opt_m = make_zero_weights<float>(ckpt.model);
    ckpt.opt_v = make_zero_weights<float>(ckpt.model);
    weights_from_table<float>(ckpt.weights, table, "weights/");
    weights_from_table<float>(ckpt.opt_m, table, "opt_m/");
    weights_from_table<float>(ckpt.opt_v, table, "opt_v/");
    return ckpt;
}

}  // namespace platypose
