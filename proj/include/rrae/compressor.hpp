// Independent two-layer autoencoder that compresses sentence vectors:
// tanh compression layer, affine decompression head, trained with ADAM on
// squared reconstruction error.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "rrae/adam.hpp"
#include "rrae/dense.hpp"
#include "rrae/errors.hpp"
#include "rrae/rng.hpp"

namespace rrae {

template <typename T>
struct CompressorParams {
    DenseLayer<T> compress;   // hidden -> compressed_dim
    DenseLayer<T> decompress; // compressed_dim -> hidden

    CompressorParams() = default;
    CompressorParams(std::size_t hidden, std::size_t compressed_dim)
        : compress(compressed_dim, hidden), decompress(hidden, compressed_dim) {
        if (compressed_dim >= hidden) {
            throw ValidationError("compressor: compressed_dim must be smaller than hidden");
        }
    }

    std::size_t hidden() const { return compress.in(); }
    std::size_t compressed_dim() const { return compress.out(); }
    std::size_t parameter_count() const {
        return compress.parameter_count() + decompress.parameter_count();
    }
};

// Mirrors the paper-scale 3000/10000 ratio at any hidden size.
inline std::size_t compressed_dim_for(std::size_t hidden) {
    const std::size_t dim = static_cast<std::size_t>(std::llround(0.3 * static_cast<double>(hidden)));
    return dim < 1 ? 1 : dim;
}

template <typename T>
CompressorParams<T> init_compressor(std::size_t hidden, std::size_t compressed_dim,
                                    std::uint64_t seed) {
    CompressorParams<T> params(hidden, compressed_dim);
    Rng rng(seed);
    glorot_init(params.compress, rng);
    glorot_init(params.decompress, rng);
    return params;
}

template <typename T>
std::vector<T> compress(const CompressorParams<T>& params, std::span<const T> sv) {
    auto cv = dense_forward(params.compress, sv);
    tanh_inplace(cv);
    return cv;
}

template <typename T>
std::vector<T> decompress(const CompressorParams<T>& params, std::span<const T> cv) {
    return dense_forward(params.decompress, cv);
}

template <typename T>
struct CompressorTrace {
    std::vector<T> cv;    // tanh output of the compression layer
    std::vector<T> recon; // affine decompression output
};

template <typename T>
CompressorTrace<T> compressor_forward(const CompressorParams<T>& params, std::span<const T> sv) {
    CompressorTrace<T> trace;
    trace.cv = compress(params, sv);
    trace.recon = decompress(params, std::span<const T>(trace.cv));
    return trace;
}

// Accumulates parameter gradients for one sample given d loss / d recon.
template <typename T>
void compressor_backward_acc(const CompressorParams<T>& params, std::span<const T> sv,
                             const CompressorTrace<T>& trace, std::span<const T> grad_recon,
                             CompressorParams<T>& grads) {
    std::vector<T> g_cv(params.compressed_dim(), T(0));
    dense_backward_acc(params.decompress, std::span<const T>(trace.cv), grad_recon,
                       grads.decompress.weights, grads.decompress.bias, &g_cv);
    for (std::size_t i = 0; i < g_cv.size(); ++i) {
        g_cv[i] *= (T(1) - trace.cv[i] * trace.cv[i]);
    }
    dense_backward_acc<T>(params.compress, sv, std::span<const T>(g_cv), grads.compress.weights,
                          grads.compress.bias, nullptr);
}

template <typename T, typename Fn>
void for_each_compressor_block(CompressorParams<T>& params, Fn&& fn) {
    fn("comp.compress.w", params.compress.weights.data);
    fn("comp.compress.b", params.compress.bias);
    fn("comp.decompress.w", params.decompress.weights.data);
    fn("comp.decompress.b", params.decompress.bias);
}

template <typename T, typename Fn>
void for_each_compressor_block(const CompressorParams<T>& params, Fn&& fn) {
    fn("comp.compress.w", params.compress.weights.data);
    fn("comp.compress.b", params.compress.bias);
    fn("comp.decompress.w", params.decompress.weights.data);
    fn("comp.decompress.b", params.decompress.bias);
}

struct CompressorTrainOptions {
    std::size_t epochs = 200;
    std::size_t minibatch = 32;
    std::uint64_t seed = 0;
};

// Minimizes mean squared reconstruction error (summed over components,
// averaged over the batch). Returns the per-epoch mean sample loss.
template <typename T>
std::vector<double> train_compressor(CompressorParams<T>& params,
                                     const std::vector<std::vector<T>>& sv_dataset,
                                     const AdamConfig<T>& adam,
                                     const CompressorTrainOptions& opts) {
    if (sv_dataset.empty()) throw UsageError("train_compressor: empty dataset");
    adam.validate();
    for (const auto& sv : sv_dataset) {
        if (sv.size() != params.hidden()) {
            throw ShapeError("train_compressor: vector length " + std::to_string(sv.size()) +
                             " does not match hidden " + std::to_string(params.hidden()));
        }
    }
    AdamState<T> state_c(params.compress.parameter_count());
    AdamState<T> state_d(params.decompress.parameter_count());
    std::uint64_t step = 0;

    std::vector<std::size_t> order(sv_dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::vector<double> history;
    history.reserve(opts.epochs);
    for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
        Rng rng(mix_seed(opts.seed, epoch));
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += opts.minibatch) {
            const std::size_t end = std::min(order.size(), start + opts.minibatch);
            const T inv_batch = T(1) / static_cast<T>(end - start);
            CompressorParams<T> grads(params.hidden(), params.compressed_dim());
            for (std::size_t k = start; k < end; ++k) {
                const auto& sv = sv_dataset[order[k]];
                auto trace = compressor_forward(params, std::span<const T>(sv));
                std::vector<T> g_recon(params.hidden());
                double sample_loss = 0.0;
                for (std::size_t j = 0; j < params.hidden(); ++j) {
                    const T d = trace.recon[j] - sv[j];
                    sample_loss += static_cast<double>(d) * static_cast<double>(d);
                    g_recon[j] = T(2) * d * inv_batch;
                }
                epoch_loss += sample_loss;
                compressor_backward_acc(params, std::span<const T>(sv), trace,
                                        std::span<const T>(g_recon), grads);
            }
            adam_update_block<T>(std::span<T>(params.compress.weights.data),
                                 std::span<const T>(grads.compress.weights.data),
                                 std::span<T>(state_c.first_moment).subspan(0, params.compress.weights.size()),
                                 std::span<T>(state_c.second_moment).subspan(0, params.compress.weights.size()),
                                 step, adam, "comp.compress.w");
            adam_update_block<T>(std::span<T>(params.compress.bias),
                                 std::span<const T>(grads.compress.bias),
                                 std::span<T>(state_c.first_moment).subspan(params.compress.weights.size()),
                                 std::span<T>(state_c.second_moment).subspan(params.compress.weights.size()),
                                 step, adam, "comp.compress.b");
            adam_update_block<T>(std::span<T>(params.decompress.weights.data),
                                 std::span<const T>(grads.decompress.weights.data),
                                 std::span<T>(state_d.first_moment).subspan(0, params.decompress.weights.size()),
                                 std::span<T>(state_d.second_moment).subspan(0, params.decompress.weights.size()),
                                 step, adam, "comp.decompress.w");
            adam_update_block<T>(std::span<T>(params.decompress.bias),
                                 std::span<const T>(grads.decompress.bias),
                                 std::span<T>(state_d.first_moment).subspan(params.decompress.weights.size()),
                                 std::span<T>(state_d.second_moment).subspan(params.decompress.weights.size()),
                                 step, adam, "comp.decompress.b");
            ++step;
        }
        history.push_back(epoch_loss / static_cast<double>(sv_dataset.size()));
    }
    return history;
}

} // namespace rrae
