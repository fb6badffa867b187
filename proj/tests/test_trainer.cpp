#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <vector>

#include "platypose/checkpoint.hpp"
#include "platypose/rng.hpp"
#include "platypose/stats.hpp"
#include "platypose/trainer.hpp"

using namespace platypose;
namespace fs = std::filesystem;

namespace {

// smooth low-frequency sequences, enough structure for the loss to drop
std::vector<MotionSequence> wave_dataset(int n, int frames, int joints, std::uint64_t seed) {
    std::vector<MotionSequence> out;
    for (int i = 0; i < n; ++i) {
        Rng rng = derive_stream(seed, static_cast<std::uint64_t>(i));
        MotionSequence seq = make_motion(frames, joints, 0);
        for (int j = 1; j < joints; ++j) {
            const double a = 0.3 + 0.4 * rng.uniform();
            const double w = 0.2 + 0.5 * rng.uniform();
            const double p = rng.uniform() * 6.28;
            for (int f = 0; f < frames; ++f) {
                seq.at(f, j, 0) = static_cast<float>(a * std::sin(w * f + p));
                seq.at(f, j, 1) = static_cast<float>(a * std::cos(w * f + p) * 0.5);
                seq.at(f, j, 2) = static_cast<float>(0.2 * a * std::sin(0.5 * w * f));
            }
        }
        out.push_back(std::move(seq));
    }
    return out;
}

DenoiserConfig small_model(int joints, int max_frames) {
    DenoiserConfig m;
    m.model_dim = 16;
    m.layers = 1;
    m.heads = 2;
    m.ff_dim = 32;
    m.max_frames = max_frames;
    m.joints = joints;
    m.max_timestep = 50;
    m.dropout = 0.0;
    return m;
}

TrainConfig small_train(std::int64_t steps, std::uint64_t seed) {
    TrainConfig t;
    t.steps = steps;
    t.batch_size = 4;
    t.learning_rate = 1e-3;
    t.weight_decay = 0.0;
    t.seed = seed;
    t.T = 50;
    t.F_max = 8;
    return t;
}

bool weights_equal(const DenoiserWeights<float>& a, const DenoiserWeights<float>& b) {
    TensorTable ta, tb;
    weights_to_table<float>(const_cast<DenoiserWeights<float>&>(a), ta);
    weights_to_table<float>(const_cast<DenoiserWeights<float>&>(b), tb);
    if (ta.size() != tb.size()) return false;
    for (const auto& [name, tensor] : ta) {
        const auto it = tb.find(name);
        if (it == tb.end() || it->second.data != tensor.data) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("loss decreases over a short run", "[trainer]") {
    const auto dataset = wave_dataset(10, 8, 3, 0);
    const auto result = train(dataset, small_train(200, 1), small_model(3, 8));
    REQUIRE(result.loss_history.size() == 200);
    const double head = std::accumulate(result.loss_history.begin(), result.loss_history.begin() + 20, 0.0) / 20.0;
    const double tail = std::accumulate(result.loss_history.end() - 20, result.loss_history.end(), 0.0) / 20.0;
    REQUIRE(tail < head);
}

TEST_CASE("training is deterministic per seed", "[trainer]") {
    const auto dataset = wave_dataset(5, 6, 3, 3);
    const auto a = train(dataset, small_train(80, 7), small_model(3, 8));
    const auto b = train(dataset, small_train(80, 7), small_model(3, 8));
    REQUIRE(a.loss_history == b.loss_history);
    REQUIRE(weights_equal(a.checkpoint.weights, b.checkpoint.weights));
    const auto c = train(dataset, small_train(80, 8), small_model(3, 8));
    REQUIRE(a.loss_history != c.loss_history);
}

TEST_CASE("single-frame cap degenerates to a static-pose prior that still converges", "[trainer]") {
    const auto dataset = wave_dataset(6, 4, 3, 5);
    TrainConfig t = small_train(200, 2);
    t.F_max = 1;
    const auto result = train(dataset, t, small_model(3, 8));
    const double head = std::accumulate(result.loss_history.begin(), result.loss_history.begin() + 20, 0.0) / 20.0;
    const double tail = std::accumulate(result.loss_history.end() - 20, result.loss_history.end(), 0.0) / 20.0;
    REQUIRE(tail < head);
    // every crop had length 1
    REQUIRE(result.crop_histogram[0] == 200u * 4u);
}

TEST_CASE("dataset validation", "[trainer]") {
    REQUIRE_THROWS_AS(train({}, small_train(10, 0), small_model(3, 8)), Error);
    auto dataset = wave_dataset(2, 6, 3, 1);
    auto odd = wave_dataset(1, 6, 4, 2);
    dataset.push_back(odd.front());
    try {
        (void)train(dataset, small_train(10, 0), small_model(3, 8));
        FAIL("expected InconsistentJoints");
    } catch (const Error& e) {
        REQUIRE(e.code() == ErrorCode::InconsistentJoints);
    }
}

TEST_CASE("checkpoint round-trip restores every tensor bit-exactly", "[trainer]") {
    const auto dataset = wave_dataset(4, 6, 3, 9);
    const auto result = train(dataset, small_train(30, 11), small_model(3, 8));
    const auto path = fs::temp_directory_path() / "platypose_test_ckpt.plty";
    save_checkpoint(result.checkpoint, path);
    const Checkpoint back = load_checkpoint(path);
    REQUIRE(weights_equal(back.weights, result.checkpoint.weights));
    REQUIRE(weights_equal(back.opt_m, result.checkpoint.opt_m));
    REQUIRE(weights_equal(back.opt_v, result.checkpoint.opt_v));
    REQUIRE(back.step == result.checkpoint.step);
    REQUIRE(back.rng_state == result.checkpoint.rng_state);
    REQUIRE(back.train.T == result.checkpoint.train.T);
    fs::remove(path);
}

TEST_CASE("resumed training matches an uninterrupted run", "[trainer]") {
    const auto dataset = wave_dataset(4, 6, 3, 13);
    const auto full = train(dataset, small_train(70, 21), small_model(3, 8));

    const auto part = train(dataset, small_train(60, 21), small_model(3, 8));
    const auto path = fs::temp_directory_path() / "platypose_test_resume.plty";
    save_checkpoint(part.checkpoint, path);
    Checkpoint reloaded = load_checkpoint(path);
    const auto resumed = resume_training(std::move(reloaded), dataset, 70);

    REQUIRE(resumed.checkpoint.step == 70);
    REQUIRE(weights_equal(full.checkpoint.weights, resumed.checkpoint.weights));
    REQUIRE(weights_equal(full.checkpoint.opt_m, resumed.checkpoint.opt_m));
    REQUIRE(full.checkpoint.rng_state == resumed.checkpoint.rng_state);
    fs::remove(path);
}

TEST_CASE("wrong magic reports a container mismatch", "[trainer]") {
    const auto path = fs::temp_directory_path() / "platypose_test_badmagic.plty";
    std::ofstream os(path, std::ios::binary);
    os << "XXXX0000 filler bytes beyond the header";
    os.close();
    try {
        (void)load_checkpoint(path);
        FAIL("expected VersionMismatch");
    } catch (const Error& e) {
        REQUIRE(e.code() == ErrorCode::VersionMismatch);
    }
    fs::remove(path);
}

TEST_CASE("crop lengths are uniform over 1..F", "[trainer][oracle]") {
    Rng rng(31);
    const int F = 8;
    std::vector<std::size_t> counts(F, 0);
    for (int i = 0; i < 10000; ++i) counts[static_cast<std::size_t>(draw_crop_length(rng, F) - 1)]++;
    REQUIRE(stats::chi2_uniform_p(counts) > 0.01);
}

TEST_CASE("optimizer with zero gradient and zero decay is a fixed point", "[trainer]") {
    const DenoiserConfig mcfg = small_model(3, 8);
    Rng rng(3);
    auto w = init_denoiser<float>(mcfg, rng);
    const auto before = w;
    auto g = make_zero_weights<float>(mcfg);
    auto m = make_zero_weights<float>(mcfg);
    auto v = make_zero_weights<float>(mcfg);
    TrainConfig cfg = small_train(1, 0);
    cfg.weight_decay = 0.0;
    adamw_step(w, g, m, v, 1, cfg);
    REQUIRE(weights_equal(w, before));
}

TEST_CASE("a one-sequence dataset is memorized to the noise floor", "[trainer][slow]") {
    const auto dataset = wave_dataset(1, 4, 2, 17);
    TrainConfig t;
    t.steps = 2000;
    t.batch_size = 8;
    t.learning_rate = 3e-3;
    t.weight_decay = 0.0;
    t.seed = 5;
    t.T = 50;
    t.F_max = 4;
    DenoiserConfig m;
    m.model_dim = 32;
    m.layers = 2;
    m.heads = 4;
    m.ff_dim = 64;
    m.max_frames = 4;
    m.joints = 2;
    m.dropout = 0.0;
    const auto result = train(dataset, t, m);
    const double tail = std::accumulate(result.loss_history.end() - 50, result.loss_history.end(), 0.0) / 50.0;
    REQUIRE(tail < 1e-2);
}
