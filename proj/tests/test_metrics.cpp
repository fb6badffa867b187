#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Geometry>
#include <cmath>
#include <numbers>
#include <vector>

#include "platypose/metrics.hpp"
#include "platypose/rng.hpp"

using namespace platypose;

namespace {

MotionSequence raw_sequence(int frames, int joints) { return make_motion(frames, joints, 0); }

// hypotheses and ground truth drawn from per-cell Gaussians; root cells stay
// pinned and are skipped by the calibration statistic
struct GaussianCells {
    HypothesisSet hyps;
    MotionSequence gt;
};

GaussianCells gaussian_cells(int frames, int joints, int n_hyp, double var_scale, Rng& rng) {
    GaussianCells out;
    out.gt = raw_sequence(frames, joints);
    for (int i = 0; i < n_hyp; ++i) out.hyps.hypotheses.push_back(raw_sequence(frames, joints));
    for (int f = 0; f < frames; ++f)
        for (int j = 1; j < joints; ++j) {
            Eigen::Vector3d mu(0.1 * rng.normal(), 0.1 * rng.normal(), 0.1 * rng.normal());
            Eigen::Matrix3d a;
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) a(r, c) = rng.normal();
            Eigen::Matrix3d cov = 0.001 * (a * a.transpose()) + 1e-6 * Eigen::Matrix3d::Identity();
            const Eigen::LLT<Eigen::Matrix3d> llt(cov);
            const Eigen::Matrix3d chol = llt.matrixL();
            auto draw = [&](MotionSequence& seq, double scale) {
                const Eigen::Vector3d z(rng.normal(), rng.normal(), rng.normal());
                const Eigen::Vector3d x = mu + scale * (chol * z);
                for (int k = 0; k < 3; ++k) seq.at(f, j, k) = static_cast<float>(x(k));
            };
            for (auto& h : out.hyps.hypotheses) draw(h, var_scale);
            draw(out.gt, 1.0);
        }
    return out;
}

}  // namespace

TEST_CASE("min_mpjpe basics and enumeration oracle", "[metrics]") {
    SECTION("exact hypothesis scores zero") {
        MotionSequence gt = raw_sequence(3, 4);
        Rng rng(1);
        for (auto& v : gt.positions) v = static_cast<float>(rng.normal());
        HypothesisSet h;
        h.hypotheses.push_back(gt);
        const auto [err, idx] = min_mpjpe(h, gt);
        REQUIRE(err == 0.0);
        REQUIRE(idx == 0);
    }
    SECTION("constant 10 mm offset on every joint scores 10") {
        MotionSequence gt = raw_sequence(2, 3);
        MotionSequence pred = gt;
        for (int f = 0; f < pred.frames; ++f)
            for (int j = 0; j < pred.joints; ++j) pred.at(f, j, 0) += 0.01f;
        HypothesisSet h;
        h.hypotheses.push_back(pred);
        REQUIRE(min_mpjpe(h, gt).first == Catch::Approx(10.0).epsilon(1e-5));
    }
    SECTION("three hand-built hypotheses match direct enumeration") {
        Rng rng(2);
        MotionSequence gt = raw_sequence(4, 3);
        for (auto& v : gt.positions) v = static_cast<float>(0.2 * rng.normal());
        HypothesisSet h;
        std::vector<double> direct;
        for (int i = 0; i < 3; ++i) {
            MotionSequence p = gt;
            for (auto& v : p.positions) v += static_cast<float>(0.05 * rng.normal());
            double sum = 0.0;
            for (int f = 0; f < gt.frames; ++f)
                for (int j = 0; j < gt.joints; ++j) {
                    double d2 = 0.0;
                    for (int k = 0; k < 3; ++k) {
                        const double d = p.at(f, j, k) - gt.at(f, j, k);
                        d2 += d * d;
                    }
                    sum += std::sqrt(d2);
                }
            direct.push_back(sum / (gt.frames * gt.joints) * 1000.0);
            h.hypotheses.push_back(std::move(p));
        }
        const auto [err, idx] = min_mpjpe(h, gt);
        const auto best = std::min_element(direct.begin(), direct.end());
        REQUIRE(err == Catch::Approx(*best).epsilon(1e-9));
        REQUIRE(idx == static_cast<int>(best - direct.begin()));
    }
}

TEST_CASE("Procrustes alignment zeroes out similarity transforms", "[metrics]") {
    Rng rng(3);
    MotionSequence gt = raw_sequence(3, 5);
    for (auto& v : gt.positions) v = static_cast<float>(0.3 * rng.normal());

    const Eigen::Matrix3d R =
        Eigen::AngleAxisd(1.1, Eigen::Vector3d(0.2, 1.0, -0.4).normalized()).toRotationMatrix();
    MotionSequence moved = gt;
    for (int f = 0; f < gt.frames; ++f)
        for (int j = 0; j < gt.joints; ++j) {
            Eigen::Vector3d p(gt.at(f, j, 0), gt.at(f, j, 1), gt.at(f, j, 2));
            const Eigen::Vector3d q = 2.0 * (R * p) + Eigen::Vector3d(0.3, -0.8, 1.2);
            for (int k = 0; k < 3; ++k) moved.at(f, j, k) = static_cast<float>(q(k));
        }
    HypothesisSet h;
    h.hypotheses.push_back(moved);
    REQUIRE(pa_mpjpe(h, gt) < 1e-3);  // mm
    // without scale, the doubled cloud cannot be zeroed
    REQUIRE(pa_mpjpe(h, gt, {.with_scale = false}) > 10.0);
    // per-sequence mode also zeroes a global similarity transform
    REQUIRE(pa_mpjpe(h, gt, {.with_scale = true, .per_sequence = true}) < 1e-3);
}

TEST_CASE("alignment never increases the error", "[metrics]") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        MotionSequence gt = raw_sequence(3, 6);
        for (auto& v : gt.positions) v = static_cast<float>(0.3 * rng.normal());
        HypothesisSet h;
        for (int i = 0; i < 4; ++i) {
            MotionSequence p = gt;
            for (auto& v : p.positions) v += static_cast<float>(0.08 * rng.normal());
            h.hypotheses.push_back(std::move(p));
        }
        REQUIRE(pa_mpjpe(h, gt) <= min_mpjpe(h, gt).first + 1e-9);
    }
}

namespace {

// independent alignment oracle: refined grid search over Euler angles with
// the closed-form scale/translation for each candidate rotation
double grid_search_alignment_error(const Eigen::MatrixXd& src, const Eigen::MatrixXd& dst) {
    const Eigen::RowVector3d mu_s = src.colwise().mean();
    const Eigen::RowVector3d mu_d = dst.colwise().mean();
    const Eigen::MatrixXd sc = src.rowwise() - mu_s;
    const Eigen::MatrixXd dc = dst.rowwise() - mu_d;
    const double var_s = sc.squaredNorm();

    auto error_for = [&](const Eigen::Matrix3d& rot) {
        const double scale = (dc.cwiseProduct((rot * sc.transpose()).transpose())).sum() / var_s;
        const Eigen::MatrixXd aligned = scale * (rot * sc.transpose()).transpose();
        return (aligned - dc).rowwise().norm().mean();
    };

    double cx = 0.0, cy = 0.0, cz = 0.0, span = std::numbers::pi;
    double best = std::numeric_limits<double>::infinity();
    for (int level = 0; level < 6; ++level) {
        double bx = cx, by = cy, bz = cz;
        const int npts = level == 0 ? 17 : 9;
        for (int ix = 0; ix < npts; ++ix)
            for (int iy = 0; iy < npts; ++iy)
                for (int iz = 0; iz < npts; ++iz) {
                    const double ax = cx + span * (2.0 * ix / (npts - 1) - 1.0);
                    const double ay = cy + span * (2.0 * iy / (npts - 1) - 1.0);
                    const double az = cz + span * (2.0 * iz / (npts - 1) - 1.0);
                    const Eigen::Matrix3d rot(Eigen::AngleAxisd(ax, Eigen::Vector3d::UnitX()) *
                                              Eigen::AngleAxisd(ay, Eigen::Vector3d::UnitY()) *
                                              Eigen::AngleAxisd(az, Eigen::Vector3d::UnitZ()));
                    const double e = error_for(rot);
                    if (e < best) {
                        best = e;
                        bx = ax;
                        by = ay;
                        bz = az;
                    }
                }
        cx = bx;
        cy = by;
        cz = bz;
        span /= 4.0;
    }
    return best;
}

}  // namespace

TEST_CASE("per-frame Procrustes matches a rotation-grid search", "[metrics][oracle]") {
    Rng rng(7);
    Eigen::MatrixXd gt_pts(8, 3), pred_pts(8, 3);
    for (int i = 0; i < 8; ++i)
        for (int k = 0; k < 3; ++k) {
            gt_pts(i, k) = 0.4 * rng.normal();
            pred_pts(i, k) = gt_pts(i, k) + 0.1 * rng.normal();
        }
    MotionSequence gt = raw_sequence(1, 8), pred = gt;
    for (int j = 0; j < 8; ++j)
        for (int k = 0; k < 3; ++k) {
            gt.at(0, j, k) = static_cast<float>(gt_pts(j, k));
            pred.at(0, j, k) = static_cast<float>(pred_pts(j, k));
        }
    HypothesisSet h;
    h.hypotheses.push_back(pred);
    const double closed_form = pa_mpjpe(h, gt) / 1000.0;
    // compare on the float-quantized points the metric actually sees
    Eigen::MatrixXd gt_q(8, 3), pred_q(8, 3);
    for (int j = 0; j < 8; ++j)
        for (int k = 0; k < 3; ++k) {
            gt_q(j, k) = gt.at(0, j, k);
            pred_q(j, k) = pred.at(0, j, k);
        }
    const double searched = grid_search_alignment_error(pred_q, gt_q);
    REQUIRE(closed_form == Catch::Approx(searched).epsilon(0.02));
}

TEST_CASE("degenerate frames are reported", "[metrics]") {
    MotionSequence gt = raw_sequence(1, 4);
    for (int j = 0; j < 4; ++j) gt.at(0, j, 0) = static_cast<float>(j);
    HypothesisSet h;
    h.hypotheses.push_back(raw_sequence(1, 4));  // all points identical -> rank 0
    try {
        (void)pa_mpjpe(h, gt);
        FAIL("expected DegenerateFrame");
    } catch (const Error& e) {
        REQUIRE(e.code() == ErrorCode::DegenerateFrame);
    }
}

TEST_CASE("velocity error basics", "[metrics]") {
    SECTION("constant offsets cancel") {
        Rng rng(4);
        MotionSequence gt = raw_sequence(5, 3);
        for (auto& v : gt.positions) v = static_cast<float>(0.2 * rng.normal());
        MotionSequence pred = gt;
        for (auto& v : pred.positions) v += 0.25f;
        HypothesisSet h;
        h.hypotheses.push_back(pred);
        REQUIRE(mpjve(h, gt, 0) == Catch::Approx(0.0).margin(1e-4));
    }
    SECTION("a single perturbed frame contributes two velocity terms") {
        MotionSequence gt = raw_sequence(3, 2);
        MotionSequence pred = gt;
        pred.at(1, 1, 0) = 0.003f;  // 3 mm at frame 1, joint 1
        HypothesisSet h;
        h.hypotheses.push_back(pred);
        // terms: (F-1)*J = 4, two of them |d|, so mean = d/2
        REQUIRE(mpjve(h, gt, 0) == Catch::Approx(1.5).epsilon(1e-4));
    }
    SECTION("iid noise inflates the velocity error monotonically") {
        MotionSequence gt = raw_sequence(40, 3);
        double prev = 0.0;
        for (const double sigma : {0.001, 0.01, 0.05}) {
            Rng rng(9);
            MotionSequence pred = gt;
            for (int f = 0; f < gt.frames; ++f)
                for (int j = 1; j < gt.joints; ++j)
                    for (int k = 0; k < 3; ++k) pred.at(f, j, k) = static_cast<float>(sigma * rng.normal());
            HypothesisSet h;
            h.hypotheses.push_back(pred);
            const double e = mpjve(h, gt, 0);
            REQUIRE(e > prev);
            prev = e;
        }
    }
    SECTION("too few frames") {
        MotionSequence gt = raw_sequence(1, 2);
        HypothesisSet h;
        h.hypotheses.push_back(gt);
        REQUIRE_THROWS_AS(mpjve(h, gt, 0), Error);
    }
}

TEST_CASE("calibration statistic is uniform for a correctly specified sampler", "[metrics][oracle]") {
    Rng rng(11);
    std::vector<double> us;
    for (int inst = 0; inst < 100; ++inst) {
        const auto cells = gaussian_cells(25, 5, 200, 1.0, rng);  // 100 cells per instance
        const auto u = ece_uvalues(cells.hyps, cells.gt);
        us.insert(us.end(), u.begin(), u.end());
    }
    REQUIRE(us.size() == 10000);
    const auto table = coverage_table(us, default_quantile_grid());
    REQUIRE(ece_from_table(table) < 0.02);
}

TEST_CASE("overconfident samplers read as badly calibrated", "[metrics]") {
    Rng rng(13);
    std::vector<double> us;
    for (int inst = 0; inst < 20; ++inst) {
        const auto cells = gaussian_cells(10, 5, 64, 0.1, rng);  // variance 100x too small
        const auto u = ece_uvalues(cells.hyps, cells.gt);
        us.insert(us.end(), u.begin(), u.end());
    }
    const auto table = coverage_table(us, default_quantile_grid());
    REQUIRE(ece_from_table(table) > 0.3);
}

TEST_CASE("a single median quantile on calibrated data scores near zero", "[metrics]") {
    Rng rng(17);
    const auto cells = gaussian_cells(40, 6, 200, 1.0, rng);
    const auto [e, table] = ece(cells.hyps, cells.gt, {0.5});
    REQUIRE(table.size() == 1);
    REQUIRE(e < 0.05);
}

TEST_CASE("calibration requires enough hypotheses", "[metrics]") {
    Rng rng(19);
    const auto cells = gaussian_cells(2, 3, 7, 1.0, rng);
    try {
        (void)ece(cells.hyps, cells.gt);
        FAIL("expected TooFewHypotheses");
    } catch (const Error& e) {
        REQUIRE(e.code() == ErrorCode::TooFewHypotheses);
    }
}

TEST_CASE("metrics are invariant to hypothesis order and monotone in N", "[metrics]") {
    Rng rng(23);
    const auto cells = gaussian_cells(6, 4, 16, 1.0, rng);
    const auto rep = evaluate(cells.hyps, cells.gt);

    HypothesisSet reversed;
    reversed.hypotheses.assign(cells.hyps.hypotheses.rbegin(), cells.hyps.hypotheses.rend());
    const auto rep2 = evaluate(reversed, cells.gt);
    REQUIRE(rep.min_mpjpe == rep2.min_mpjpe);
    REQUIRE(rep.pa_mpjpe == rep2.pa_mpjpe);
    REQUIRE(rep.ece == Catch::Approx(rep2.ece).margin(1e-12));

    // appending hypotheses can only improve the minimum
    double prev = std::numeric_limits<double>::infinity();
    for (int n = 1; n <= cells.hyps.size(); ++n) {
        HypothesisSet prefix;
        prefix.hypotheses.assign(cells.hyps.hypotheses.begin(), cells.hyps.hypotheses.begin() + n);
        const double e = min_mpjpe(prefix, cells.gt).first;
        REQUIRE(e <= prev + 1e-12);
        prev = e;
    }
}

TEST_CASE("report JSON carries the full schema", "[metrics]") {
    Rng rng(29);
    const auto cells = gaussian_cells(4, 4, 12, 1.0, rng);
    const auto rep = evaluate(cells.hyps, cells.gt);
    const auto j = report_to_json(rep);
    for (const char* key : {"min_mpjpe", "pa_mpjpe", "mpjve", "ece", "quantiles", "best_index", "n_hypotheses"})
        REQUIRE(j.contains(key));
    REQUIRE(j.at("quantiles").size() == 19);
    REQUIRE(j.at("quantiles")[0].contains("q"));
    REQUIRE(j.at("quantiles")[0].contains("omega"));
    REQUIRE(rep.pa_mpjpe <= rep.min_mpjpe + 1e-9);
    REQUIRE(rep.ece >= 0.0);
    REQUIRE(rep.ece <= 1.0);
}
