// ADAM with per-iteration learning-rate decay and classic (coupled) L2.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rrae/errors.hpp"

namespace rrae {

template <typename T>
struct AdamConfig {
    T lr0 = T(1e-3);
    T decay_per_iteration = T(1);  // in (0, 1]
    T l2 = T(0);
    T p1 = T(0.9);
    T p2 = T(0.999);
    T epsilon = T(1e-8);

    // lr(t) = lr0 * decay^t, monotonically non-increasing.
    double lr(std::uint64_t t) const {
        return static_cast<double>(lr0) * std::pow(static_cast<double>(decay_per_iteration),
                                                   static_cast<double>(t));
    }

    void validate() const {
        // lr0 == 0 is a degenerate but legal freeze (no parameter ever moves).
        if (lr0 < T(0)) throw ValidationError("adam: lr0 must be non-negative");
        if (!(decay_per_iteration > T(0)) || decay_per_iteration > T(1)) {
            throw ValidationError("adam: decay_per_iteration must be in (0, 1]");
        }
        if (l2 < T(0)) throw ValidationError("adam: l2 must be non-negative");
        if (p1 < T(0) || p1 >= T(1)) throw ValidationError("adam: p1 must be in [0, 1)");
        if (p2 < T(0) || p2 >= T(1)) throw ValidationError("adam: p2 must be in [0, 1)");
        if (!(epsilon > T(0))) throw ValidationError("adam: epsilon must be positive");
    }
};

template <typename T>
struct AdamState {
    std::vector<T> first_moment;
    std::vector<T> second_moment;
    std::uint64_t iteration = 0;

    AdamState() = default;
    explicit AdamState(std::size_t n) : first_moment(n, T(0)), second_moment(n, T(0)) {}

    std::size_t size() const { return first_moment.size(); }
};

// Bias-corrected update of one contiguous block at step t (0-based). L2 is
// applied as grad + l2*param before the moment update. The caller owns the
// iteration counter so a model made of several blocks advances it once per
// global step.
template <typename T>
void adam_update_block(std::span<T> params, std::span<const T> grads, std::span<T> m,
                       std::span<T> v, std::uint64_t t, const AdamConfig<T>& cfg,
                       const std::string& block_name = "params") {
    if (params.size() != grads.size() || params.size() != m.size() || params.size() != v.size()) {
        throw ShapeError("adam: params/grads/moments length mismatch in block " + block_name);
    }
    const double lr_t = cfg.lr(t);
    const double p1 = static_cast<double>(cfg.p1);
    const double p2 = static_cast<double>(cfg.p2);
    const double c1 = 1.0 - std::pow(p1, static_cast<double>(t + 1));
    const double c2 = 1.0 - std::pow(p2, static_cast<double>(t + 1));
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!std::isfinite(static_cast<double>(grads[i]))) {
            throw TrainError("adam: non-finite gradient in block " + block_name +
                             " at element " + std::to_string(i));
        }
        const double g = static_cast<double>(grads[i]) +
                         static_cast<double>(cfg.l2) * static_cast<double>(params[i]);
        const double m_new = p1 * static_cast<double>(m[i]) + (1.0 - p1) * g;
        const double v_new = p2 * static_cast<double>(v[i]) + (1.0 - p2) * g * g;
        m[i] = static_cast<T>(m_new);
        v[i] = static_cast<T>(v_new);
        const double m_hat = m_new / c1;
        const double v_hat = v_new / c2;
        params[i] = static_cast<T>(static_cast<double>(params[i]) -
                                   lr_t * m_hat / (std::sqrt(v_hat) + static_cast<double>(cfg.epsilon)));
    }
}

// Single-block convenience form: updates and advances the iteration counter.
template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState<T>& state,
               const AdamConfig<T>& cfg, const std::string& block_name = "params") {
    adam_update_block<T>(params, grads, std::span<T>(state.first_moment),
                         std::span<T>(state.second_moment), state.iteration, cfg, block_name);
    state.iteration += 1;
}

// Everything needed to resume a training run deterministically.
template <typename T>
struct TrainState {
    AdamState<T> adam; // flat moments in model block order, plus the iteration counter
    std::array<std::uint64_t, 4> rng{};
    double lr = 0.0; // decayed learning rate used for the latest step
    double best_tune_matched = -1.0;
    std::uint32_t rounds_since_improvement = 0;
};

} // namespace rrae
