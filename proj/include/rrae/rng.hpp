// Deterministic random number generation.
//
// std::mt19937 is portable but the std distributions are not: their output is
// implementation-defined, which would break byte-identical checkpoints across
// compilers. This is a xoshiro256** generator with hand-rolled uniform and
// gaussian draws so that a seed pins the exact stream everywhere.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace rrae {

inline std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Derive an independent stream id from (seed, salt) pairs.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t x = seed ^ (0x9e3779b97f4a7c15ull + (salt << 6) + (salt >> 2));
    splitmix64(x);
    return x;
}

class Rng {
public:
    using state_type = std::array<std::uint64_t, 4>;

    explicit Rng(std::uint64_t seed = 0) {
        std::uint64_t x = seed;
        for (auto& w : state_) w = splitmix64(x);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    // Box-Muller without a cached spare, so the state alone replays the stream.
    double gaussian() {
        const double u1 = 1.0 - next_double(); // (0, 1]
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    // Modulo bias is irrelevant at the scales used here; determinism is not.
    std::uint64_t next_below(std::uint64_t n) {
        return next_u64() % n;
    }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        if (items.size() < 2) return;
        for (std::size_t i = items.size() - 1; i > 0; --i) {
            const std::size_t j = static_cast<std::size_t>(next_below(i + 1));
            std::swap(items[i], items[j]);
        }
    }

    const state_type& state() const { return state_; }
    void set_state(const state_type& s) { state_ = s; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    state_type state_{};
};

} // namespace rrae
