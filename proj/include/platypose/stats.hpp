#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

namespace platypose::stats {

inline double mean(std::span<const double> xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

inline double variance(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return s / static_cast<double>(xs.size() - 1);
}

// lag-1 autocorrelation of a single series
inline double lag1_autocorrelation(std::span<const double> xs) {
    if (xs.size() < 3) return 0.0;
    const double m = mean(xs);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i)
        num += (xs[i] - m) * (xs[i + 1] - m);
    for (double x : xs) den += (x - m) * (x - m);
    return den > 0.0 ? num / den : 0.0;
}

// --- special functions ---------------------------------------------------
// Series / continued-fraction evaluations follow the classical recurrences;
// accuracy ~1e-12, far below any test tolerance used here.

inline double gamma_p(double a, double x);  // regularized lower incomplete gamma

namespace detail {

inline double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_q_contfrac(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

inline double beta_contfrac(double a, double b, double x) {
    const double tiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 500; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    return h;
}

}  // namespace detail

inline double gamma_p(double a, double x) {
    if (x <= 0.0) return 0.0;
    if (x < a + 1.0) return detail::gamma_p_series(a, x);
    return 1.0 - detail::gamma_q_contfrac(a, x);
}

// regularized incomplete beta I_x(a, b)
inline double beta_inc(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double lbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    const double front = std::exp(a * std::log(x) + b * std::log(1.0 - x) - lbeta);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * detail::beta_contfrac(a, b, x) / a;
    return 1.0 - front * detail::beta_contfrac(b, a, 1.0 - x) / b;
}

inline double chi2_cdf(double x, double dof) {
    return gamma_p(dof / 2.0, x / 2.0);
}

// chi-squared CDF with 3 degrees of freedom, closed form
inline double chi2_cdf_3dof(double x) {
    if (x <= 0.0) return 0.0;
    return std::erf(std::sqrt(x / 2.0)) - std::sqrt(2.0 * x / std::numbers::pi) * std::exp(-x / 2.0);
}

// one-sided p-value for Student's t with `dof` degrees of freedom, H1: mean > 0
inline double t_test_p_one_sided(double t, double dof) {
    const double x = dof / (dof + t * t);
    const double tail = 0.5 * beta_inc(dof / 2.0, 0.5, x);
    return t >= 0.0 ? tail : 1.0 - tail;
}

// paired one-sided test that mean(a - b) > 0; returns p-value
inline double paired_t_test_p(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
    const double m = mean(d);
    const double v = variance(d);
    if (v <= 0.0) return m > 0.0 ? 0.0 : 1.0;
    const double t = m / std::sqrt(v / static_cast<double>(n));
    return t_test_p_one_sided(t, static_cast<double>(n - 1));
}

// chi-squared goodness-of-fit p-value for counts against a uniform law
inline double chi2_uniform_p(std::span<const std::size_t> counts) {
    const std::size_t k = counts.size();
    if (k < 2) return 1.0;
    double total = 0.0;
    for (auto c : counts) total += static_cast<double>(c);
    const double expected = total / static_cast<double>(k);
    double x2 = 0.0;
    for (auto c : counts) {
        const double d = static_cast<double>(c) - expected;
        x2 += d * d / expected;
    }
    return 1.0 - chi2_cdf(x2, static_cast<double>(k - 1));
}

}  // namespace platypose::stats
