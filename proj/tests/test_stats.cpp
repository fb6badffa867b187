#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "platypose/rng.hpp"
#include "platypose/stats.hpp"

using namespace platypose;

TEST_CASE("chi-squared CDF closed form agrees with the incomplete gamma", "[stats]") {
    for (double x : {0.1, 0.5, 1.0, 2.366, 5.0, 11.34}) {
        REQUIRE(stats::chi2_cdf_3dof(x) == Catch::Approx(stats::chi2_cdf(x, 3.0)).epsilon(1e-9));
    }
    REQUIRE(stats::chi2_cdf_3dof(0.0) == 0.0);
    REQUIRE(stats::chi2_cdf_3dof(100.0) == Catch::Approx(1.0).margin(1e-12));
    // median of chi2_3 is about 2.3660
    REQUIRE(stats::chi2_cdf_3dof(2.3660) == Catch::Approx(0.5).margin(1e-3));
}

TEST_CASE("Student t tail probabilities at tabulated points", "[stats]") {
    // t = 1.701, dof = 28 -> one-sided p = 0.05
    REQUIRE(stats::t_test_p_one_sided(1.701, 28.0) == Catch::Approx(0.05).margin(2e-3));
    // t = 2.756, dof = 29 -> 0.005
    REQUIRE(stats::t_test_p_one_sided(2.756, 29.0) == Catch::Approx(0.005).margin(5e-4));
    REQUIRE(stats::t_test_p_one_sided(0.0, 10.0) == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("paired t-test separates shifted samples", "[stats]") {
    Rng rng(5);
    std::vector<double> a(60), b(60);
    for (std::size_t i = 0; i < a.size(); ++i) {
        b[i] = rng.normal();
        a[i] = b[i] + 0.5 + 0.1 * rng.normal();
    }
    REQUIRE(stats::paired_t_test_p(a, b) < 1e-6);
    REQUIRE(stats::paired_t_test_p(b, a) > 0.9);
}

TEST_CASE("chi-squared uniformity test accepts uniform draws and rejects skewed ones", "[stats]") {
    Rng rng(17);
    std::vector<std::size_t> counts(10, 0);
    for (int i = 0; i < 10000; ++i) counts[static_cast<std::size_t>(rng.uniform_int(0, 9))]++;
    REQUIRE(stats::chi2_uniform_p(counts) > 0.01);

    std::vector<std::size_t> skewed(10, 500);
    skewed[0] = 5500;
    REQUIRE(stats::chi2_uniform_p(skewed) < 1e-10);
}

TEST_CASE("lag-1 autocorrelation reference values", "[stats]") {
    std::vector<double> ramp(100);
    for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = static_cast<double>(i);
    REQUIRE(stats::lag1_autocorrelation(ramp) > 0.9);

    Rng rng(1);
    std::vector<double> noise(20000);
    for (auto& v : noise) v = rng.normal();
    REQUIRE(std::abs(stats::lag1_autocorrelation(noise)) < 0.05);
}
