#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

namespace platypose {

// Deterministic random stream. All sampling goes through explicit
// transformations of mt19937_64 output words, so two runs with the same
// seed produce identical draws regardless of the standard library in use
// (std::normal_distribution et al. are implementation-defined).
class Rng {
public:
    Rng() : engine_(0) {}
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t bits() { return engine_(); }

    // uniform on [0, 1)
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // uniform integer on [lo, hi] inclusive
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        auto v = static_cast<std::int64_t>(uniform() * static_cast<double>(span));
        if (v >= static_cast<std::int64_t>(span)) v = static_cast<std::int64_t>(span) - 1;
        return lo + v;
    }

    // standard normal via Box-Muller; stateless between calls
    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::string serialize() const {
        std::ostringstream os;
        os << engine_;
        return os.str();
    }

    void deserialize(const std::string& state) {
        std::istringstream is(state);
        is >> engine_;
    }

private:
    std::mt19937_64 engine_;
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace detail

// Independent child stream for (seed, index), e.g. one per hypothesis or
// per generated sequence. Mixing keeps nearby indices decorrelated.
inline Rng derive_stream(std::uint64_t seed, std::uint64_t index) {
    return Rng(detail::splitmix64(seed ^ detail::splitmix64(index + 0x517cc1b727220a95ULL)));
}

}  // namespace platypose
