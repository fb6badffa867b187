#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "platypose/baseline.hpp"
#include "platypose/errors.hpp"
#include "platypose/metrics.hpp"
#include "platypose/sampler.hpp"
#include "platypose/serialization.hpp"
#include "platypose/synth.hpp"
#include "platypose/toy_gp.hpp"
#include "platypose/trainer.hpp"

namespace platypose::cli {

namespace fs = std::filesystem;
using nlohmann::json;

// --- strict config parsing -------------------------------------------------

inline void require_keys(const json& j, const std::string& section, const std::set<std::string>& allowed) {
    if (!j.is_object()) raise(ErrorCode::InvalidConfig, "section '" + section + "' must be a JSON object");
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key))
            raise(ErrorCode::InvalidConfig, "unknown key '" + key + "' in section '" + section + "'");
}

template <class T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        raise(ErrorCode::InvalidConfig, "key '" + key + "': " + e.what());
    }
}

inline void validate_config_schema(const json& cfg) {
    require_keys(cfg, "top level",
                 {"seed", "out", "generator", "train", "model", "sampler", "baseline", "toy", "eval", "ablate",
                  "dataset", "checkpoint", "observations", "reference", "cameras"});
    if (cfg.contains("generator"))
        require_keys(cfg.at("generator"), "generator",
                     {"n_sequences", "frames", "freq_band", "amp_band", "frame_rate", "root_walk_std",
                      "root_smoothness", "noise_std_2d", "n_cameras", "camera_radius", "camera_height", "focal",
                      "principal_point", "skeleton"});
    if (cfg.contains("train"))
        require_keys(cfg.at("train"), "train",
                     {"steps", "batch_size", "learning_rate", "weight_decay", "grad_clip", "T", "F_max", "schedule"});
    if (cfg.contains("model"))
        require_keys(cfg.at("model"), "model", {"model_dim", "layers", "heads", "ff_dim", "max_frames", "dropout"});
    if (cfg.contains("sampler"))
        require_keys(cfg.at("sampler"), "sampler",
                     {"T", "skip", "stride", "hypotheses", "lambda", "k", "decay_factor", "confidence_mode"});
    if (cfg.contains("baseline"))
        require_keys(cfg.at("baseline"), "baseline", {"hidden", "steps", "batch_size", "learning_rate"});
    if (cfg.contains("toy"))
        require_keys(cfg.at("toy"), "toy",
                     {"n_obs", "noise_std", "kernel_period", "kernel_length", "kernel_amplitude", "grid_points",
                      "grid_lo", "grid_hi", "samples", "seeds"});
    if (cfg.contains("eval")) require_keys(cfg.at("eval"), "eval", {"pa_with_scale", "pa_per_sequence"});
    if (cfg.contains("ablate"))
        require_keys(cfg.at("ablate"), "ablate", {"steps_list", "hypotheses_list", "seeds", "instances"});
}

inline json load_config(const fs::path& path) {
    std::ifstream is(path);
    check(static_cast<bool>(is), ErrorCode::IoFailure, "cannot open config " + path.string());
    json cfg;
    try {
        is >> cfg;
    } catch (const json::exception& e) {
        raise(ErrorCode::InvalidConfig, std::string("config parse: ") + e.what());
    }
    validate_config_schema(cfg);
    return cfg;
}

// --- section decoding -------------------------------------------------------

inline synth::GeneratorConfig generator_from_json(const json& cfg) {
    synth::GeneratorConfig g;
    if (!cfg.contains("generator")) return g;
    const json& j = cfg.at("generator");
    g.n_sequences = get_or(j, "n_sequences", g.n_sequences);
    g.frames = get_or(j, "frames", g.frames);
    if (j.contains("freq_band")) {
        const auto band = j.at("freq_band").get<std::vector<double>>();
        check(band.size() == 2, ErrorCode::InvalidConfig, "freq_band must have two entries");
        g.freq_lo = band[0];
        g.freq_hi = band[1];
    }
    if (j.contains("amp_band")) {
        const auto band = j.at("amp_band").get<std::vector<double>>();
        check(band.size() == 2, ErrorCode::InvalidConfig, "amp_band must have two entries");
        g.amp_lo = band[0];
        g.amp_hi = band[1];
    }
    g.frame_rate = get_or(j, "frame_rate", g.frame_rate);
    g.root_walk_std = get_or(j, "root_walk_std", g.root_walk_std);
    g.root_smoothness = get_or(j, "root_smoothness", g.root_smoothness);
    g.noise_std_2d = get_or(j, "noise_std_2d", g.noise_std_2d);
    const std::string skel = get_or<std::string>(j, "skeleton", "h36m");
    if (skel == "h36m") {
        g.skeleton = h36m_skeleton();
        g.rest_offsets = h36m_rest_offsets();
    } else if (skel.rfind("chain", 0) == 0) {
        const int joints = std::stoi(skel.substr(5));
        g.skeleton = synth::chain_skeleton(joints);
        g.rest_offsets = synth::chain_offsets(joints);
    } else {
        raise(ErrorCode::InvalidConfig, "unknown skeleton '" + skel + "'");
    }
    return g;
}

struct RigSpec {
    int n_cameras = 4;
    double radius = 3.0;
    double height = 1.5;
    double focal = 900.0;
    double principal = 500.0;
};

inline RigSpec rig_from_json(const json& cfg) {
    RigSpec r;
    if (!cfg.contains("generator")) return r;
    const json& j = cfg.at("generator");
    r.n_cameras = get_or(j, "n_cameras", r.n_cameras);
    r.radius = get_or(j, "camera_radius", r.radius);
    r.height = get_or(j, "camera_height", r.height);
    r.focal = get_or(j, "focal", r.focal);
    r.principal = get_or(j, "principal_point", r.principal);
    return r;
}

inline TrainConfig train_from_json(const json& cfg, std::uint64_t seed) {
    TrainConfig t;
    t.seed = seed;
    if (!cfg.contains("train")) return t;
    const json& j = cfg.at("train");
    t.steps = get_or<std::int64_t>(j, "steps", t.steps);
    t.batch_size = get_or(j, "batch_size", t.batch_size);
    t.learning_rate = get_or(j, "learning_rate", t.learning_rate);
    t.weight_decay = get_or(j, "weight_decay", t.weight_decay);
    t.grad_clip = get_or(j, "grad_clip", t.grad_clip);
    t.T = get_or(j, "T", t.T);
    t.F_max = get_or(j, "F_max", t.F_max);
    t.schedule_kind = schedule_kind_from_name(get_or<std::string>(j, "schedule", "linear"));
    return t;
}

inline DenoiserConfig model_from_json(const json& cfg, int joints, int T) {
    DenoiserConfig m;
    m.joints = joints;
    m.max_timestep = T;
    if (!cfg.contains("model")) {
        m.ff_dim = 4 * m.model_dim;
        return m;
    }
    const json& j = cfg.at("model");
    m.model_dim = get_or(j, "model_dim", m.model_dim);
    m.layers = get_or(j, "layers", m.layers);
    m.heads = get_or(j, "heads", m.heads);
    m.ff_dim = get_or(j, "ff_dim", 4 * m.model_dim);
    m.max_frames = get_or(j, "max_frames", m.max_frames);
    m.dropout = get_or(j, "dropout", m.dropout);
    return m;
}

inline ConfidenceMode confidence_mode_from_name(const std::string& name) {
    if (name == "ones") return ConfidenceMode::Ones;
    if (name == "oracle") return ConfidenceMode::Oracle;
    if (name == "file") return ConfidenceMode::FromFile;
    raise(ErrorCode::InvalidConfig, "unknown confidence mode '" + name + "'");
}

inline SamplerConfig sampler_from_json(const json& cfg, std::uint64_t seed) {
    SamplerConfig s;
    s.seed = seed;
    if (!cfg.contains("sampler")) return s;
    const json& j = cfg.at("sampler");
    s.T = get_or(j, "T", s.T);
    s.S = get_or(j, "skip", s.S);
    s.n = get_or(j, "stride", s.n);
    s.N = get_or(j, "hypotheses", s.N);
    s.energy.lambda = get_or(j, "lambda", s.energy.lambda);
    s.energy.k = get_or(j, "k", s.energy.k);
    s.energy.decay_factor = get_or(j, "decay_factor", s.energy.decay_factor);
    s.energy.confidence_mode = confidence_mode_from_name(get_or<std::string>(j, "confidence_mode", "ones"));
    return s;
}

// --- output tracking ----------------------------------------------------------

// Tracks every file a command writes; on failure the partial outputs are
// removed so exit code 0 coincides with fully written results.
class OutputTracker {
public:
    explicit OutputTracker(fs::path out_dir) : out_(std::move(out_dir)) { fs::create_directories(out_); }

    const fs::path& dir() const { return out_; }

    fs::path reserve(const std::string& relative) {
        fs::path p = out_ / relative;
        fs::create_directories(p.parent_path());
        written_.push_back(p);
        return p;
    }

    void cleanup() noexcept {
        for (const auto& p : written_) {
            std::error_code ec;
            fs::remove(p, ec);
        }
    }

private:
    fs::path out_;
    std::vector<fs::path> written_;
};

inline void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    check(static_cast<bool>(os), ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    os << text;
    check(static_cast<bool>(os), ErrorCode::IoFailure, "write failed for " + path.string());
}

inline void echo_config(OutputTracker& out, const json& cfg, std::uint64_t seed) {
    json echo = cfg;
    echo["seed"] = seed;  // the effective seed after flag overrides
    write_text(out.reserve("config_echo.json"), echo.dump(2) + "\n");
}

inline std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline std::string index_name(const char* prefix, int i, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%04d%s", prefix, i, ext);
    return buf;
}

// --- commands -----------------------------------------------------------------

/// synth: write a deterministic dataset (motions, observations, cameras,
/// manifest) into the output directory.
inline void cmd_synth(const json& cfg, OutputTracker& out, std::uint64_t seed) {
    synth::GeneratorConfig gen = generator_from_json(cfg);
    gen.seed = seed;
    const RigSpec rig_spec = rig_from_json(cfg);
    const auto rig = synth::default_camera_rig(rig_spec.n_cameras, rig_spec.radius, rig_spec.height,
                                               rig_spec.focal, rig_spec.principal);

    echo_config(out, cfg, seed);
    json manifest;
    manifest["motions"] = json::array();
    manifest["observations"] = json::array();
    manifest["cameras"] = json::array();
    manifest["skeleton"] = {{"joint_names", gen.skeleton.joint_names},
                            {"parent", gen.skeleton.parent},
                            {"root_index", gen.skeleton.root_index}};

    for (std::size_t c = 0; c < rig.size(); ++c) {
        const std::string rel = "cameras/cam" + std::to_string(c) + ".json";
        write_camera(rig[c], out.reserve(rel));
        manifest["cameras"].push_back(rel);
    }
    const auto motions = synth::generate_motions(gen);
    for (int i = 0; i < gen.n_sequences; ++i) {
        const std::string mrel = "motions/" + index_name("seq", i, ".mseq");
        write_motion(motions[static_cast<std::size_t>(i)], out.reserve(mrel));
        manifest["motions"].push_back(mrel);

        Rng render_rng = derive_stream(seed, 0x0b5e0000ULL + static_cast<std::uint64_t>(i));
        const auto observations =
            synth::render_observations(motions[static_cast<std::size_t>(i)], rig, gen.noise_std_2d, render_rng);
        const std::string orel = "observations/" + index_name("obs", i, ".obs2d");
        write_observations(observations, out.reserve(orel));
        manifest["observations"].push_back(orel);
    }
    write_text(out.reserve("manifest.json"), manifest.dump(2) + "\n");
}

inline std::vector<MotionSequence> load_dataset(const fs::path& dataset_dir) {
    const fs::path manifest_path = dataset_dir / "manifest.json";
    std::ifstream is(manifest_path);
    check(static_cast<bool>(is), ErrorCode::IoFailure, "cannot open dataset manifest " + manifest_path.string());
    json manifest;
    try {
        is >> manifest;
    } catch (const json::exception& e) {
        raise(ErrorCode::CorruptHeader, std::string("manifest parse: ") + e.what());
    }
    std::vector<MotionSequence> dataset;
    for (const auto& rel : manifest.at("motions")) dataset.push_back(read_motion(dataset_dir / rel.get<std::string>()));
    check(!dataset.empty(), ErrorCode::EmptyDataset, "manifest lists no motions");
    return dataset;
}

/// train: fit the diffusion prior on a synth dataset; writes checkpoint.plty
/// and the loss curve.
inline void cmd_train(const json& cfg, OutputTracker& out, std::uint64_t seed, bool resume) {
    check(cfg.contains("dataset"), ErrorCode::InvalidConfig, "train needs a 'dataset' path");
    const auto dataset = load_dataset(fs::path(cfg.at("dataset").get<std::string>()));

    echo_config(out, cfg, seed);
    TrainResult result;
    if (resume) {
        check(cfg.contains("checkpoint"), ErrorCode::InvalidConfig, "resume needs a 'checkpoint' path");
        Checkpoint ckpt = load_checkpoint(fs::path(cfg.at("checkpoint").get<std::string>()));
        const TrainConfig tcfg = train_from_json(cfg, seed);
        result = resume_training(std::move(ckpt), dataset, tcfg.steps);
    } else {
        const TrainConfig tcfg = train_from_json(cfg, seed);
        const DenoiserConfig mcfg = model_from_json(cfg, dataset.front().joints, tcfg.T);
        result = train(dataset, tcfg, mcfg);
    }
    save_checkpoint(result.checkpoint, out.reserve("checkpoint.plty"));

    std::ostringstream csv;
    csv << "step,loss\n";
    const std::int64_t first = result.checkpoint.step - static_cast<std::int64_t>(result.loss_history.size());
    for (std::size_t i = 0; i < result.loss_history.size(); ++i)
        csv << (first + static_cast<std::int64_t>(i) + 1) << "," << format_number(result.loss_history[i]) << "\n";
    write_text(out.reserve("loss_curve.csv"), csv.str());
}

struct SampleInputs {
    Checkpoint ckpt;
    MotionSequence reference;  // supplies the root trajectory (and evaluation target)
    std::vector<std::pair<Observation2D, CameraParams>> observations;
    std::vector<Observation2D> clean_reference_obs;  // oracle confidences
};

inline SampleInputs load_sample_inputs(const json& cfg, const std::vector<int>& camera_subset) {
    check(cfg.contains("checkpoint"), ErrorCode::InvalidConfig, "sample needs a 'checkpoint' path");
    check(cfg.contains("observations"), ErrorCode::InvalidConfig, "sample needs an 'observations' path");
    check(cfg.contains("reference"), ErrorCode::InvalidConfig,
          "sample needs a 'reference' motion for the root trajectory");
    check(cfg.contains("cameras"), ErrorCode::InvalidConfig, "sample needs a 'cameras' list");

    SampleInputs in;
    in.ckpt = load_checkpoint(fs::path(cfg.at("checkpoint").get<std::string>()));
    in.reference = read_motion(fs::path(cfg.at("reference").get<std::string>()));
    const auto all_obs = read_observations(fs::path(cfg.at("observations").get<std::string>()));
    std::vector<CameraParams> cams;
    for (const auto& rel : cfg.at("cameras")) cams.push_back(read_camera(fs::path(rel.get<std::string>())));
    check(cams.size() == all_obs.size(), ErrorCode::ShapeMismatch,
          "camera list and observation file disagree on camera count");

    std::vector<int> subset = camera_subset;
    if (subset.empty())
        for (int i = 0; i < static_cast<int>(cams.size()); ++i) subset.push_back(i);
    for (int idx : subset) {
        check(idx >= 0 && idx < static_cast<int>(cams.size()), ErrorCode::InvalidConfig,
              "camera index " + std::to_string(idx) + " out of range");
        in.observations.emplace_back(all_obs[static_cast<std::size_t>(idx)], cams[static_cast<std::size_t>(idx)]);
    }

    // clean projections of the reference serve as oracle keypoints
    for (const auto& [obs, cam] : in.observations) {
        const auto proj = project(in.reference, cam);
        Observation2D ref = make_observation(obs.camera_id, in.reference.frames, in.reference.joints);
        for (int f = 0; f < ref.frames; ++f)
            for (int j = 0; j < ref.joints; ++j) {
                ref.pixel(f, j, 0) = static_cast<float>(proj.u(f, j));
                ref.pixel(f, j, 1) = static_cast<float>(proj.v(f, j));
            }
        in.clean_reference_obs.push_back(std::move(ref));
    }
    return in;
}

/// sample: draw hypotheses conditioned on the observations and evaluate them
/// against the reference sequence.
inline void cmd_sample(const json& cfg, OutputTracker& out, std::uint64_t seed,
                       const std::vector<int>& camera_subset) {
    SampleInputs in = load_sample_inputs(cfg, camera_subset);
    SamplerConfig scfg = sampler_from_json(cfg, seed);
    if (scfg.energy.confidence_mode == ConfidenceMode::Oracle) scfg.energy.oracle_reference = in.clean_reference_obs;

    echo_config(out, cfg, seed);
    SampleStats stats;
    const HypothesisSet hset = sample(in.ckpt, in.observations, to_root_matrix<double>(in.reference), scfg,
                                      in.reference.root_index, &stats, "cli");

    json manifest;
    manifest["hypotheses"] = json::array();
    for (int i = 0; i < hset.size(); ++i) {
        const std::string rel = index_name("hyp", i, ".mseq");
        write_motion(hset.hypotheses[static_cast<std::size_t>(i)], out.reserve(rel));
        manifest["hypotheses"].push_back(rel);
    }
    manifest["denoiser_evals"] = stats.denoiser_evals;
    write_text(out.reserve("sample_manifest.json"), manifest.dump(2) + "\n");

    const MetricsReport rep = evaluate(hset, in.reference);
    write_text(out.reserve("report.json"), report_to_json(rep).dump(2) + "\n");
}

/// eval: score stored hypotheses against a ground-truth sequence.
inline void cmd_eval(const json& cfg, OutputTracker& out, const fs::path& hypotheses_dir, const fs::path& gt_path) {
    const MotionSequence gt = read_motion(gt_path);
    HypothesisSet hset;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(hypotheses_dir))
        if (entry.path().extension() == ".mseq") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    check(!files.empty(), ErrorCode::EmptyDataset, "no .mseq hypotheses in " + hypotheses_dir.string());
    for (const auto& f : files) hset.hypotheses.push_back(read_motion(f));

    ProcrustesOptions opt;
    if (cfg.contains("eval")) {
        opt.with_scale = get_or(cfg.at("eval"), "pa_with_scale", true);
        opt.per_sequence = get_or(cfg.at("eval"), "pa_per_sequence", false);
    }
    const MetricsReport rep = evaluate(hset, gt, opt);
    write_text(out.reserve("report.json"), report_to_json(rep).dump(2) + "\n");
}

/// toy: GP posterior CSV plus the two-strategy comparison table.
inline void cmd_toy(const json& cfg, OutputTracker& out, std::uint64_t seed) {
    toy::ToyConfig tcfg;
    if (cfg.contains("toy")) {
        const json& j = cfg.at("toy");
        tcfg.n_obs = get_or(j, "n_obs", tcfg.n_obs);
        tcfg.noise_std = get_or(j, "noise_std", tcfg.noise_std);
        tcfg.kernel_period = get_or(j, "kernel_period", tcfg.kernel_period);
        tcfg.kernel_length = get_or(j, "kernel_length", tcfg.kernel_length);
        tcfg.kernel_amplitude = get_or(j, "kernel_amplitude", tcfg.kernel_amplitude);
        tcfg.grid_points = get_or(j, "grid_points", tcfg.grid_points);
        tcfg.grid_lo = get_or(j, "grid_lo", tcfg.grid_lo);
        tcfg.grid_hi = get_or(j, "grid_hi", tcfg.grid_hi);
        tcfg.sample_count = get_or(j, "samples", tcfg.sample_count);
    }
    const int seeds = cfg.contains("toy") ? get_or(cfg.at("toy"), "seeds", 1) : 1;
    check(seeds >= 1, ErrorCode::InvalidConfig, "toy needs seeds >= 1");

    echo_config(out, cfg, seed);

    // posterior and samples for the first seed drive the plot CSV
    tcfg.seed = seed;
    const auto post = toy::gp_posterior(tcfg);
    Rng sample_rng = derive_stream(seed, 1);
    const auto draws = toy::sample_sequences(post, tcfg.sample_count, false, sample_rng);

    std::ostringstream gp_csv;
    gp_csv << "x,mean,std";
    for (int m = 0; m < tcfg.sample_count; ++m) gp_csv << ",sample" << m;
    gp_csv << "\n";
    for (Eigen::Index i = 0; i < post.grid.size(); ++i) {
        gp_csv << format_number(post.grid(i)) << "," << format_number(post.mean(i)) << ","
               << format_number(std::sqrt(std::max(0.0, post.cov(i, i))));
        for (int m = 0; m < tcfg.sample_count; ++m) gp_csv << "," << format_number(draws(m, i));
        gp_csv << "\n";
    }
    write_text(out.reserve("gp.csv"), gp_csv.str());

    // strategy table, averaged over seeds
    double s1_consistent = 0.0, s2_consistent = 0.0, s1_shuffled = 0.0, s2_shuffled = 0.0;
    for (int s = 0; s < seeds; ++s) {
        toy::ToyConfig c = tcfg;
        c.seed = seed + static_cast<std::uint64_t>(s);
        const auto p = toy::gp_posterior(c);
        Eigen::VectorXd gt(p.grid.size());
        for (Eigen::Index i = 0; i < p.grid.size(); ++i) gt(i) = std::sin(p.grid(i));
        Rng r1 = derive_stream(c.seed, 2);
        Rng r2 = derive_stream(c.seed, 3);
        const auto consistent = toy::sample_sequences(p, c.sample_count, false, r1);
        const auto shuffled = toy::sample_sequences(p, c.sample_count, true, r2);
        const auto [a1, a2] = toy::evaluate_strategies(consistent, gt);
        const auto [b1, b2] = toy::evaluate_strategies(shuffled, gt);
        s1_consistent += a1;
        s2_consistent += a2;
        s1_shuffled += b1;
        s2_shuffled += b2;
    }
    std::ostringstream table;
    table << "variant,strategy1,strategy2\n";
    table << "consistent," << format_number(s1_consistent / seeds) << "," << format_number(s2_consistent / seeds)
          << "\n";
    table << "shuffled," << format_number(s1_shuffled / seeds) << "," << format_number(s2_shuffled / seeds) << "\n";
    write_text(out.reserve("strategies.csv"), table.str());
}

/// ablate: sweep inference steps, hypothesis counts or confidence modes on a
/// fresh synthetic instance and emit a CSV per sweep.
inline void cmd_ablate(const std::string& kind, const json& cfg, OutputTracker& out, std::uint64_t seed) {
    check(kind == "steps" || kind == "hypotheses" || kind == "confidence", ErrorCode::InvalidConfig,
          "ablate kind must be steps, hypotheses or confidence");
    check(cfg.contains("checkpoint"), ErrorCode::InvalidConfig, "ablate needs a 'checkpoint' path");
    const Checkpoint ckpt = load_checkpoint(fs::path(cfg.at("checkpoint").get<std::string>()));

    synth::GeneratorConfig gen = generator_from_json(cfg);
    const RigSpec rig_spec = rig_from_json(cfg);
    const auto rig = synth::default_camera_rig(rig_spec.n_cameras, rig_spec.radius, rig_spec.height,
                                               rig_spec.focal, rig_spec.principal);
    SamplerConfig base = sampler_from_json(cfg, seed);

    int seeds = 3;
    std::vector<int> steps_list{2, 4, 8};
    std::vector<int> hypotheses_list{1, 10, 50};
    if (cfg.contains("ablate")) {
        const json& j = cfg.at("ablate");
        seeds = get_or(j, "seeds", seeds);
        steps_list = get_or(j, "steps_list", steps_list);
        hypotheses_list = get_or(j, "hypotheses_list", hypotheses_list);
    }

    echo_config(out, cfg, seed);

    auto make_instance = [&](std::uint64_t instance_seed) {
        synth::GeneratorConfig g = gen;
        g.seed = instance_seed;
        MotionSequence gt = synth::generate_motion(g, 0);
        Rng render_rng = derive_stream(instance_seed, 0xab1a7eULL);
        auto obs = synth::render_observations(gt, rig, g.noise_std_2d, render_rng);
        std::vector<std::pair<Observation2D, CameraParams>> paired;
        for (std::size_t c = 0; c < rig.size(); ++c) paired.emplace_back(obs[c], rig[c]);
        return std::make_pair(gt, paired);
    };

    std::ostringstream csv;
    if (kind == "steps") {
        csv << "steps,seconds,min_mpjpe\n";
        std::vector<double> secs(steps_list.size(), 0.0), errs(steps_list.size(), 0.0);
        for (int s = 0; s < seeds; ++s) {
            auto [gt, obs] = make_instance(seed + static_cast<std::uint64_t>(s));
            SamplerConfig c = base;
            c.seed = seed + static_cast<std::uint64_t>(s);
            const auto rows = sample_timing(ckpt, obs, gt, c, steps_list);
            for (std::size_t i = 0; i < rows.size(); ++i) {
                secs[i] += rows[i].seconds;
                errs[i] += rows[i].min_mpjpe;
            }
        }
        for (std::size_t i = 0; i < steps_list.size(); ++i)
            csv << steps_list[i] << "," << format_number(secs[i] / seeds) << "," << format_number(errs[i] / seeds)
                << "\n";
    } else if (kind == "hypotheses") {
        csv << "hypotheses,min_mpjpe\n";
        const int n_max = *std::max_element(hypotheses_list.begin(), hypotheses_list.end());
        std::vector<double> errs(hypotheses_list.size(), 0.0);
        for (int s = 0; s < seeds; ++s) {
            auto [gt, obs] = make_instance(seed + static_cast<std::uint64_t>(s));
            SamplerConfig c = base;
            c.seed = seed + static_cast<std::uint64_t>(s);
            c.N = n_max;
            const HypothesisSet full = sample(ckpt, obs, to_root_matrix<double>(gt), c, gt.root_index);
            for (std::size_t i = 0; i < hypotheses_list.size(); ++i) {
                HypothesisSet prefix;
                prefix.hypotheses.assign(full.hypotheses.begin(),
                                         full.hypotheses.begin() + hypotheses_list[i]);
                errs[i] += min_mpjpe(prefix, gt).first;
            }
        }
        for (std::size_t i = 0; i < hypotheses_list.size(); ++i)
            csv << hypotheses_list[i] << "," << format_number(errs[i] / seeds) << "\n";
    } else {
        csv << "seed,confidence,min_mpjpe,ece\n";
        for (int s = 0; s < seeds; ++s) {
            auto [gt, obs] = make_instance(seed + static_cast<std::uint64_t>(s));
            for (const bool with_confidence : {false, true}) {
                SamplerConfig c = base;
                c.seed = seed + static_cast<std::uint64_t>(s);
                if (with_confidence) {
                    c.energy.confidence_mode = ConfidenceMode::Oracle;
                    c.energy.oracle_reference.clear();
                    Rng noiseless(0);
                    for (const auto& [o, cam] : obs)
                        c.energy.oracle_reference.push_back(
                            synth::render_observations(gt, {cam}, 0.0, noiseless).front());
                } else {
                    c.energy.confidence_mode = ConfidenceMode::Ones;
                }
                const HypothesisSet h = sample(ckpt, obs, to_root_matrix<double>(gt), c, gt.root_index);
                const auto [err, idx] = min_mpjpe(h, gt);
                double e = -1.0;
                if (h.size() >= 8) e = ece(h, gt).first;
                csv << s << "," << (with_confidence ? "on" : "off") << "," << format_number(err) << ","
                    << format_number(e) << "\n";
            }
        }
    }
    write_text(out.reserve("ablate_" + kind + ".csv"), csv.str());
}

}  // namespace platypose::cli
