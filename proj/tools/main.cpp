// Command-line front end: synth -> train -> sample -> eval, plus the
// ablation sweeps and the GP toy experiment. Every randomized command
// requires an explicit seed, either in the config file or via --seed.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "platypose/cli.hpp"

namespace {

using platypose::ErrorCode;
using platypose::cli::json;

std::uint64_t require_seed(const json& cfg, const std::optional<std::uint64_t>& flag_seed) {
    if (flag_seed) return *flag_seed;
    if (cfg.contains("seed")) return cfg.at("seed").get<std::uint64_t>();
    platypose::raise(ErrorCode::InvalidConfig, "a seed is required (config key 'seed' or --seed)");
}

json load_config_or_empty(const std::string& path) {
    if (path.empty()) return json::object();
    return platypose::cli::load_config(path);
}

std::vector<int> parse_camera_list(const std::string& csv) {
    std::vector<int> out;
    if (csv.empty()) return out;
    std::size_t start = 0;
    while (start <= csv.size()) {
        const auto comma = csv.find(',', start);
        const std::string tok = csv.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!tok.empty()) out.push_back(std::stoi(tok));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"diffusion-prior motion lifting pipeline"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed_flag;

    auto add_common = [&](CLI::App* cmd, bool out_required = true) {
        cmd->add_option("--config", config_path, "JSON config file");
        auto* out_opt = cmd->add_option("--out", out_dir, "output directory");
        if (out_required) out_opt->required();
        cmd->add_option("--seed", seed_flag, "seed override");
    };

    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    add_common(synth);

    auto* train = app.add_subcommand("train", "train the diffusion prior");
    add_common(train);
    bool resume = false;
    train->add_flag("--resume", resume, "continue from the config's checkpoint");

    auto* sample = app.add_subcommand("sample", "draw guided hypotheses");
    add_common(sample);
    std::optional<int> n_hyp, steps, skip, stride, k_updates;
    std::optional<double> lambda;
    std::string camera_csv, confidence_mode;
    sample->add_option("--hypotheses", n_hyp, "number of hypotheses");
    sample->add_option("--steps", steps, "sampler timesteps T");
    sample->add_option("--skip", skip, "skip timesteps S");
    sample->add_option("--stride", stride, "respaced step size n");
    sample->add_option("--lambda", lambda, "energy scale");
    sample->add_option("--k", k_updates, "guided updates per step");
    sample->add_option("--cameras", camera_csv, "comma-separated camera indices");
    sample->add_option("--confidence-mode", confidence_mode, "ones|oracle|file");

    auto* eval = app.add_subcommand("eval", "score stored hypotheses against ground truth");
    add_common(eval);
    std::string hyp_dir, gt_path;
    eval->add_option("--hypotheses", hyp_dir, "directory of .mseq hypotheses")->required();
    eval->add_option("--gt", gt_path, "ground-truth .mseq")->required();

    auto* ablate = app.add_subcommand("ablate", "run an ablation sweep");
    add_common(ablate);
    std::string kind;
    ablate->add_option("kind", kind, "steps|hypotheses|confidence")->required();

    auto* toy = app.add_subcommand("toy", "GP sequence-estimation toy experiment");
    add_common(toy);

    CLI11_PARSE(app, argc, argv);

    std::optional<platypose::cli::OutputTracker> tracker;
    try {
        json cfg = load_config_or_empty(config_path);
        tracker.emplace(out_dir);

        if (synth->parsed()) {
            platypose::cli::cmd_synth(cfg, *tracker, require_seed(cfg, seed_flag));
        } else if (train->parsed()) {
            platypose::cli::cmd_train(cfg, *tracker, require_seed(cfg, seed_flag), resume);
        } else if (sample->parsed()) {
            if (n_hyp) {
                platypose::check(*n_hyp >= 1, ErrorCode::InvalidConfig, "--hypotheses must be >= 1");
                cfg["sampler"]["hypotheses"] = *n_hyp;
            }
            if (steps) cfg["sampler"]["T"] = *steps;
            if (skip) cfg["sampler"]["skip"] = *skip;
            if (stride) cfg["sampler"]["stride"] = *stride;
            if (lambda) cfg["sampler"]["lambda"] = *lambda;
            if (k_updates) cfg["sampler"]["k"] = *k_updates;
            if (!confidence_mode.empty()) cfg["sampler"]["confidence_mode"] = confidence_mode;
            platypose::cli::cmd_sample(cfg, *tracker, require_seed(cfg, seed_flag), parse_camera_list(camera_csv));
        } else if (eval->parsed()) {
            platypose::cli::cmd_eval(cfg, *tracker, hyp_dir, gt_path);
        } else if (ablate->parsed()) {
            platypose::cli::cmd_ablate(kind, cfg, *tracker, require_seed(cfg, seed_flag));
        } else if (toy->parsed()) {
            platypose::cli::cmd_toy(cfg, *tracker, require_seed(cfg, seed_flag));
        }
    } catch (const std::exception& e) {
        if (tracker) tracker->cleanup();
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
