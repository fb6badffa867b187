#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "platypose/errors.hpp"
#include "platypose/rng.hpp"
#include "platypose/types.hpp"

namespace platypose {

enum class ScheduleKind { Linear, Cosine };

inline const char* schedule_kind_name(ScheduleKind k) {
    return k == ScheduleKind::Linear ? "linear" : "cosine";
}

inline ScheduleKind schedule_kind_from_name(const std::string& name) {
    if (name == "linear") return ScheduleKind::Linear;
    if (name == "cosine") return ScheduleKind::Cosine;
    raise(ErrorCode::InvalidConfig, "unknown schedule kind '" + name + "'");
}

/// Per-timestep noise levels sigma(i) and cumulative products
/// alpha_bar(t) = prod_{i=0..t} (1 - sigma(i)), indices 0..T.
struct NoiseSchedule {
    int T = 0;
    ScheduleKind kind = ScheduleKind::Linear;
    std::vector<double> sigma;      // length T + 1
    std::vector<double> alpha_bar;  // length T + 1, strictly decreasing
};

inline NoiseSchedule make_schedule(int T, ScheduleKind kind = ScheduleKind::Linear) {
    check(T >= 2, ErrorCode::InvalidT, "schedule needs T >= 2, got " + std::to_string(T));
    NoiseSchedule s;
    s.T = T;
    s.kind = kind;
    s.sigma.resize(T + 1);
    if (kind == ScheduleKind::Linear) {
        const double lo = 1e-4, hi = 0.2;
        for (int i = 0; i <= T; ++i)
            s.sigma[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(T);
    } else {
        // squared-cosine profile with offset, noise level from consecutive ratios
        const double off = 0.008;
        auto profile = [&](double u) {
            const double v = std::cos((u / (T + 1) + off) / (1.0 + off) * std::numbers::pi / 2.0);
            return v * v;
        };
        for (int i = 0; i <= T; ++i) {
            const double ratio = profile(static_cast<double>(i + 1)) / profile(static_cast<double>(i));
            s.sigma[i] = std::clamp(1.0 - ratio, 1e-6, 0.999);
        }
    }
    s.alpha_bar.resize(T + 1);
    double prod = 1.0;
    for (int i = 0; i <= T; ++i) {
        prod *= 1.0 - s.sigma[i];
        s.alpha_bar[i] = prod;
    }
    return s;
}

/// Noising operator: sqrt(ab_t) * x0 + sqrt(1 - ab_t) * eps, eps ~ N(0, I).
template <class S>
MatX<S> forward_diffuse(const MatX<S>& x0, int t, const NoiseSchedule& sched, Rng& rng) {
    check(t >= 0 && t <= sched.T, ErrorCode::TimestepOutOfRange,
          "timestep " + std::to_string(t) + " outside [0, " + std::to_string(sched.T) + "]");
    const S a = static_cast<S>(std::sqrt(sched.alpha_bar[t]));
    const S b = static_cast<S>(std::sqrt(1.0 - sched.alpha_bar[t]));
    MatX<S> out(x0.rows(), x0.cols());
    for (Eigen::Index r = 0; r < x0.rows(); ++r)
        for (Eigen::Index c = 0; c < x0.cols(); ++c)
            out(r, c) = a * x0(r, c) + b * static_cast<S>(rng.normal());
    return out;
}

/// Descending timestep ladder [T-S, T-S-n, ..., n] used by the sampler.
struct SamplingGrid {
    int T_start = 0;  // = T - S
    int S = 0;
    int n = 1;
    std::vector<int> steps;
};

inline SamplingGrid make_grid(int T, int S, int n) {
    check(S >= 0 && S < T, ErrorCode::InvalidGrid,
          "need 0 <= S < T, got S=" + std::to_string(S) + " T=" + std::to_string(T));
    check(n >= 1, ErrorCode::InvalidGrid, "stride must be >= 1");
    check((T - S) % n == 0, ErrorCode::InvalidGrid,
          "T - S = " + std::to_string(T - S) + " not divisible by stride " + std::to_string(n));
    SamplingGrid g;
    g.T_start = T - S;
    g.S = S;
    g.n = n;
    for (int t = g.T_start; t >= n; t -= n) g.steps.push_back(t);
    return g;
}

// Maps a timestep of a reduced ladder with T_reduced steps onto the trained
// schedule: round(linspace). Identity when the ladders coincide.
inline int respace_index(int t_reduced, int T_reduced, int T_trained) {
    if (T_reduced == T_trained) return t_reduced;
    const double u = static_cast<double>(t_reduced) * static_cast<double>(T_trained) / static_cast<double>(T_reduced);
    return static_cast<int>(std::lround(u));
}

}  // namespace platypose
