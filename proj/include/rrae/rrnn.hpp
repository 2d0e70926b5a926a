// Residual recurrent layer: identity-mapped pre-activation state plus a
// two-FC-layer residual branch per time step, with full backpropagation
// through time.
//
// One step, with p the pre-activation recurrent state:
//   h1     = tanh(fc1(concat(a_in, tanh(p_prev))))
//   r      = fc2(h1)
//   p_next = p_prev + r
//   a_out  = tanh(p_next)
// The first step uses the trainable bias vector p0 as p_prev. The encoder
// feeds its input sequence in reverse order and emits the last step's a_out;
// the decoder feeds the same vector at every step and emits every a_out.
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "rrae/dense.hpp"
#include "rrae/errors.hpp"
#include "rrae/matrix.hpp"
#include "rrae/rng.hpp"

namespace rrae {

template <typename T>
struct RrnnCellParams {
    DenseLayer<T> fc1; // (input_dim + hidden) -> hidden
    DenseLayer<T> fc2; // hidden -> hidden
    std::vector<T> p0; // hidden, recurrent input at the first time step

    RrnnCellParams() = default;
    RrnnCellParams(std::size_t input_dim, std::size_t hidden)
        : fc1(hidden, input_dim + hidden), fc2(hidden, hidden), p0(hidden, T(0)) {}

    std::size_t hidden() const { return fc2.out(); }
    std::size_t input_dim() const { return fc1.in() - hidden(); }
    std::size_t parameter_count() const {
        return fc1.parameter_count() + fc2.parameter_count() + p0.size();
    }
};

// Glorot weights; biases zero; p0 drawn like a weight with fan terms (1, hidden).
template <typename T>
RrnnCellParams<T> init_rrnn_cell(std::size_t input_dim, std::size_t hidden, Rng& rng) {
    RrnnCellParams<T> cell(input_dim, hidden);
    glorot_init(cell.fc1, rng);
    glorot_init(cell.fc2, rng);
    fan_uniform_init(cell.p0, 1, hidden, rng);
    return cell;
}

template <typename T>
RrnnCellParams<T> zeros_like(const RrnnCellParams<T>& cell) {
    return RrnnCellParams<T>(cell.input_dim(), cell.hidden());
}

// Per-step cache for BPTT. a_out doubles as tanh(p_next).
template <typename T>
struct RrnnStepTrace {
    std::vector<T> a_in;
    std::vector<T> tanh_p_prev;
    std::vector<T> h1;
    std::vector<T> a_out;
};

// Steps are stored in processing order: reversed input order for the
// encoder, output order for the decoder.
template <typename T>
struct RrnnTrace {
    std::vector<RrnnStepTrace<T>> steps;
    std::size_t length() const { return steps.size(); }
};

template <typename T>
struct RrnnStepResult {
    std::vector<T> p_next;
    std::vector<T> a_out;
    RrnnStepTrace<T> trace;
};

template <typename T>
RrnnStepResult<T> cell_step(const RrnnCellParams<T>& params, std::span<const T> a_in,
                            std::span<const T> p_prev) {
    const std::size_t hidden = params.hidden();
    if (a_in.size() != params.input_dim()) {
        throw ShapeError("cell_step: input length " + std::to_string(a_in.size()) +
                         " does not match cell input " + std::to_string(params.input_dim()));
    }
    if (p_prev.size() != hidden) {
        throw ShapeError("cell_step: recurrent state length " + std::to_string(p_prev.size()) +
                         " does not match hidden size " + std::to_string(hidden));
    }
    RrnnStepTrace<T> trace;
    trace.a_in.assign(a_in.begin(), a_in.end());
    trace.tanh_p_prev.resize(hidden);
    for (std::size_t i = 0; i < hidden; ++i) trace.tanh_p_prev[i] = std::tanh(p_prev[i]);

    std::vector<T> concat;
    concat.reserve(a_in.size() + hidden);
    concat.insert(concat.end(), a_in.begin(), a_in.end());
    concat.insert(concat.end(), trace.tanh_p_prev.begin(), trace.tanh_p_prev.end());

    trace.h1 = dense_forward(params.fc1, std::span<const T>(concat));
    tanh_inplace(trace.h1);
    std::vector<T> residual = dense_forward(params.fc2, std::span<const T>(trace.h1));

    RrnnStepResult<T> result;
    result.p_next.resize(hidden);
    result.a_out.resize(hidden);
    for (std::size_t i = 0; i < hidden; ++i) {
        result.p_next[i] = p_prev[i] + residual[i];
        result.a_out[i] = std::tanh(result.p_next[i]);
    }
    trace.a_out = result.a_out;
    result.trace = std::move(trace);
    return result;
}

template <typename T>
struct RrnnForwardResult {
    std::vector<T> a_final; // a_out at the last processed step
    RrnnTrace<T> trace;
};

// Runs the cell over the inputs in reverse order, starting from p0.
template <typename T>
RrnnForwardResult<T> encoder_forward(const RrnnCellParams<T>& params,
                                     const std::vector<std::vector<T>>& inputs) {
    if (inputs.empty()) throw UsageError("encoder_forward: empty input sequence");
    RrnnForwardResult<T> result;
    result.trace.steps.reserve(inputs.size());
    std::vector<T> p = params.p0;
    for (std::size_t t = inputs.size(); t-- > 0;) {
        auto step = cell_step(params, std::span<const T>(inputs[t]), std::span<const T>(p));
        p = std::move(step.p_next);
        result.a_final = std::move(step.a_out);
        result.trace.steps.push_back(std::move(step.trace));
    }
    return result;
}

template <typename T>
struct RrnnDecodeResult {
    std::vector<std::vector<T>> outputs; // a_out per step, forward order
    RrnnTrace<T> trace;
};

// Feeds the same vector at every step and emits a_out per step.
template <typename T>
RrnnDecodeResult<T> decoder_forward(const RrnnCellParams<T>& params, std::span<const T> sv,
                                    std::size_t steps) {
    if (steps == 0) throw UsageError("decoder_forward: steps must be >= 1");
    RrnnDecodeResult<T> result;
    result.outputs.reserve(steps);
    result.trace.steps.reserve(steps);
    std::vector<T> p = params.p0;
    for (std::size_t t = 0; t < steps; ++t) {
        auto step = cell_step(params, sv, std::span<const T>(p));
        p = std::move(step.p_next);
        result.outputs.push_back(step.a_out);
        result.trace.steps.push_back(std::move(step.trace));
    }
    return result;
}

template <typename T>
struct RrnnGrads {
    RrnnCellParams<T> params;               // same shapes, gradient values
    std::vector<std::vector<T>> grad_a_in;  // per processed step
    std::vector<T> grad_p0;
};

// Exact reverse-mode gradients through the residual recurrence. grads_a_out
// holds one gradient per processed step (empty vectors mean zero);
// grad_p_final optionally injects a gradient into the final pre-activation
// state. Step indices follow the trace's processing order.
template <typename T>
RrnnGrads<T> rrnn_backward(const RrnnCellParams<T>& params, const RrnnTrace<T>& trace,
                           const std::vector<std::vector<T>>& grads_a_out,
                           const std::vector<T>* grad_p_final = nullptr) {
    const std::size_t steps = trace.length();
    if (grads_a_out.size() != steps) {
        throw UsageError("rrnn_backward: got " + std::to_string(grads_a_out.size()) +
                         " output gradients for a trace of length " + std::to_string(steps));
    }
    const std::size_t hidden = params.hidden();
    const std::size_t input_dim = params.input_dim();

    RrnnGrads<T> grads;
    grads.params = zeros_like(params);
    grads.grad_a_in.assign(steps, std::vector<T>());
    grads.grad_p0.assign(hidden, T(0));

    std::vector<T> g_p(hidden, T(0)); // gradient w.r.t. p_next of the current step
    if (grad_p_final) {
        if (grad_p_final->size() != hidden) {
            throw ShapeError("rrnn_backward: grad_p_final length mismatch");
        }
        g_p = *grad_p_final;
    }

    std::vector<T> g_h1(hidden), g_z(hidden), g_concat(input_dim + hidden);
    for (std::size_t t = steps; t-- > 0;) {
        const auto& st = trace.steps[t];
        if (!grads_a_out[t].empty()) {
            if (grads_a_out[t].size() != hidden) {
                throw ShapeError("rrnn_backward: output gradient length mismatch at step " +
                                 std::to_string(t));
            }
            for (std::size_t i = 0; i < hidden; ++i) {
                const T a = st.a_out[i];
                g_p[i] += grads_a_out[t][i] * (T(1) - a * a);
            }
        }
        // Residual branch: g_p flows into fc2 and, via the skip, to p_prev.
        std::fill(g_h1.begin(), g_h1.end(), T(0));
        dense_backward_acc(params.fc2, std::span<const T>(st.h1), std::span<const T>(g_p),
                           grads.params.fc2.weights, grads.params.fc2.bias, &g_h1);
        for (std::size_t i = 0; i < hidden; ++i) {
            g_z[i] = g_h1[i] * (T(1) - st.h1[i] * st.h1[i]);
        }
        std::fill(g_concat.begin(), g_concat.end(), T(0));
        std::vector<T> concat;
        concat.reserve(input_dim + hidden);
        concat.insert(concat.end(), st.a_in.begin(), st.a_in.end());
        concat.insert(concat.end(), st.tanh_p_prev.begin(), st.tanh_p_prev.end());
        dense_backward_acc(params.fc1, std::span<const T>(concat), std::span<const T>(g_z),
                           grads.params.fc1.weights, grads.params.fc1.bias, &g_concat);

        grads.grad_a_in[t].assign(g_concat.begin(), g_concat.begin() + input_dim);
        // Skip path plus the branch's tanh(p_prev) contribution.
        for (std::size_t i = 0; i < hidden; ++i) {
            const T tp = st.tanh_p_prev[i];
            g_p[i] += g_concat[input_dim + i] * (T(1) - tp * tp);
        }
    }
    grads.grad_p0 = g_p;
    grads.params.p0 = std::move(g_p); // p0 is itself a trainable parameter
    return grads;
}

} // namespace rrae
