// The full autoencoder: encoder RRNN -> last-step output -> sentence-vector
// layer (tanh) -> decoder RRNN fed the sentence vector at every step -> affine
// regression output layer per step.
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rrae/embedding.hpp"
#include "rrae/errors.hpp"
#include "rrae/rrnn.hpp"

namespace rrae {

struct ModelConfig {
    std::size_t word_dim = 300;
    std::size_t hidden = 10000; // equals the sentence-vector size
    std::size_t max_len = 60;   // content words; sequences carry one extra EOS step

    void validate() const {
        if (word_dim < 1 || hidden < 1 || max_len < 1) {
            throw ValidationError("model config: word_dim, hidden and max_len must be >= 1");
        }
    }
};

template <typename T>
struct ModelParams {
    RrnnCellParams<T> enc; // input word_dim
    DenseLayer<T> sv;      // hidden -> hidden
    RrnnCellParams<T> dec; // input hidden
    DenseLayer<T> out;     // hidden -> word_dim, affine regression head

    ModelParams() = default;
    explicit ModelParams(const ModelConfig& cfg)
        : enc(cfg.word_dim, cfg.hidden),
          sv(cfg.hidden, cfg.hidden),
          dec(cfg.hidden, cfg.hidden),
          out(cfg.word_dim, cfg.hidden) {}

    std::size_t parameter_count() const {
        return enc.parameter_count() + sv.parameter_count() + dec.parameter_count() +
               out.parameter_count();
    }
};

template <typename T>
ModelParams<T> init_model(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    ModelParams<T> params;
    params.enc = init_rrnn_cell<T>(cfg.word_dim, cfg.hidden, rng);
    params.sv = DenseLayer<T>(cfg.hidden, cfg.hidden);
    glorot_init(params.sv, rng);
    params.dec = init_rrnn_cell<T>(cfg.hidden, cfg.hidden, rng);
    params.out = DenseLayer<T>(cfg.word_dim, cfg.hidden);
    glorot_init(params.out, rng);
    return params;
}

template <typename T>
ModelParams<T> zeros_like(const ModelParams<T>& params) {
    ModelParams<T> z;
    z.enc = zeros_like(params.enc);
    z.sv = DenseLayer<T>(params.sv.out(), params.sv.in());
    z.dec = zeros_like(params.dec);
    z.out = DenseLayer<T>(params.out.out(), params.out.in());
    return z;
}

// Element-wise acc += src over every block; shapes must already agree.
template <typename T>
void accumulate(ModelParams<T>& acc, const ModelParams<T>& src) {
    auto add = [](std::vector<T>& a, const std::vector<T>& b) {
        for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    };
    add(acc.enc.fc1.weights.data, src.enc.fc1.weights.data);
    add(acc.enc.fc1.bias, src.enc.fc1.bias);
    add(acc.enc.fc2.weights.data, src.enc.fc2.weights.data);
    add(acc.enc.fc2.bias, src.enc.fc2.bias);
    add(acc.enc.p0, src.enc.p0);
    add(acc.sv.weights.data, src.sv.weights.data);
    add(acc.sv.bias, src.sv.bias);
    add(acc.dec.fc1.weights.data, src.dec.fc1.weights.data);
    add(acc.dec.fc1.bias, src.dec.fc1.bias);
    add(acc.dec.fc2.weights.data, src.dec.fc2.weights.data);
    add(acc.dec.fc2.bias, src.dec.fc2.bias);
    add(acc.dec.p0, src.dec.p0);
    add(acc.out.weights.data, src.out.weights.data);
    add(acc.out.bias, src.out.bias);
}

inline std::uint64_t total_parameter_count(const ModelConfig& cfg) {
    cfg.validate();
    const std::uint64_t w = cfg.word_dim;
    const std::uint64_t h = cfg.hidden;
    const std::uint64_t encoder = (w + h) * h + 2 * h + h * h + h;
    const std::uint64_t sv = h * h + h;
    const std::uint64_t decoder = (2 * h) * h + 2 * h + h * h + h;
    const std::uint64_t output = h * w + w;
    return encoder + sv + decoder + output;
}

// Visits every trainable block in a fixed order; the flat parameter layout,
// optimizer state, and checkpoints all follow it.
template <typename T, typename Fn>
void for_each_block(ModelParams<T>& params, Fn&& fn) {
    fn("enc.fc1.w", params.enc.fc1.weights.data);
    fn("enc.fc1.b", params.enc.fc1.bias);
    fn("enc.fc2.w", params.enc.fc2.weights.data);
    fn("enc.fc2.b", params.enc.fc2.bias);
    fn("enc.p0", params.enc.p0);
    fn("sv.w", params.sv.weights.data);
    fn("sv.b", params.sv.bias);
    fn("dec.fc1.w", params.dec.fc1.weights.data);
    fn("dec.fc1.b", params.dec.fc1.bias);
    fn("dec.fc2.w", params.dec.fc2.weights.data);
    fn("dec.fc2.b", params.dec.fc2.bias);
    fn("dec.p0", params.dec.p0);
    fn("out.w", params.out.weights.data);
    fn("out.b", params.out.bias);
}

template <typename T, typename Fn>
void for_each_block(const ModelParams<T>& params, Fn&& fn) {
    fn("enc.fc1.w", params.enc.fc1.weights.data);
    fn("enc.fc1.b", params.enc.fc1.bias);
    fn("enc.fc2.w", params.enc.fc2.weights.data);
    fn("enc.fc2.b", params.enc.fc2.bias);
    fn("enc.p0", params.enc.p0);
    fn("sv.w", params.sv.weights.data);
    fn("sv.b", params.sv.bias);
    fn("dec.fc1.w", params.dec.fc1.weights.data);
    fn("dec.fc1.b", params.dec.fc1.bias);
    fn("dec.fc2.w", params.dec.fc2.weights.data);
    fn("dec.fc2.b", params.dec.fc2.bias);
    fn("dec.p0", params.dec.p0);
    fn("out.w", params.out.weights.data);
    fn("out.b", params.out.bias);
}

template <typename T>
struct EncodeResult {
    std::vector<T> sv; // tanh-bounded sentence vector
    RrnnTrace<T> enc_trace;
    std::vector<T> enc_a_final;
};

template <typename T>
EncodeResult<T> encode(const ModelParams<T>& params, const ModelConfig& cfg,
                       const std::vector<std::vector<T>>& word_vectors) {
    if (word_vectors.empty()) throw UsageError("encode: empty input sequence");
    if (word_vectors.size() > cfg.max_len + 1) {
        throw LengthError("encode: sequence length " + std::to_string(word_vectors.size()) +
                          " exceeds max_len+1 = " + std::to_string(cfg.max_len + 1));
    }
    auto enc = encoder_forward(params.enc, word_vectors);
    EncodeResult<T> result;
    result.sv = dense_forward(params.sv, std::span<const T>(enc.a_final));
    tanh_inplace(result.sv);
    result.enc_trace = std::move(enc.trace);
    result.enc_a_final = std::move(enc.a_final);
    return result;
}

template <typename T>
struct DecodeResult {
    std::vector<std::vector<T>> outputs; // word_dim vectors, forward order
    RrnnTrace<T> dec_trace;
};

template <typename T>
DecodeResult<T> decode(const ModelParams<T>& params, const ModelConfig& cfg,
                       std::span<const T> sv, std::size_t steps) {
    if (steps < 1 || steps > cfg.max_len + 1) {
        throw LengthError("decode: steps " + std::to_string(steps) + " outside [1, " +
                          std::to_string(cfg.max_len + 1) + "]");
    }
    auto dec = decoder_forward(params.dec, sv, steps);
    DecodeResult<T> result;
    result.outputs.reserve(steps);
    for (const auto& a : dec.outputs) {
        result.outputs.push_back(dense_forward(params.out, std::span<const T>(a)));
    }
    result.dec_trace = std::move(dec.trace);
    return result;
}

template <typename T>
struct ForwardTrace {
    RrnnTrace<T> enc_trace;
    std::vector<T> enc_a_final;
    std::vector<T> sv;
    RrnnTrace<T> dec_trace;
    std::vector<std::vector<T>> outputs;
};

template <typename T>
ForwardTrace<T> model_forward(const ModelParams<T>& params, const ModelConfig& cfg,
                              const std::vector<std::vector<T>>& word_vectors,
                              std::size_t decode_steps = 0) {
    auto enc = encode(params, cfg, word_vectors);
    const std::size_t steps = decode_steps == 0 ? word_vectors.size() : decode_steps;
    auto dec = decode(params, cfg, std::span<const T>(enc.sv), steps);
    ForwardTrace<T> trace;
    trace.enc_trace = std::move(enc.enc_trace);
    trace.enc_a_final = std::move(enc.enc_a_final);
    trace.sv = std::move(enc.sv);
    trace.dec_trace = std::move(dec.dec_trace);
    trace.outputs = std::move(dec.outputs);
    return trace;
}

// Exact reverse-mode gradients through the whole model given per-step output
// gradients. The decoder consumes the sentence vector at every step, so its
// gradient is the sum of the per-step input gradients.
template <typename T>
ModelParams<T> model_backward(const ModelParams<T>& params, const ModelConfig& cfg,
                              const ForwardTrace<T>& trace,
                              const std::vector<std::vector<T>>& output_grads) {
    (void)cfg;
    const std::size_t steps = trace.dec_trace.length();
    if (output_grads.size() != steps) {
        throw UsageError("model_backward: got " + std::to_string(output_grads.size()) +
                         " output gradients for " + std::to_string(steps) + " decode steps");
    }
    ModelParams<T> grads = zeros_like(params);

    // Output layer, per step; its input gradients feed the decoder BPTT.
    std::vector<std::vector<T>> dec_a_grads(steps);
    for (std::size_t t = 0; t < steps; ++t) {
        if (output_grads[t].empty()) continue;
        dec_a_grads[t].assign(params.out.in(), T(0));
        dense_backward_acc(params.out, std::span<const T>(trace.dec_trace.steps[t].a_out),
                           std::span<const T>(output_grads[t]), grads.out.weights, grads.out.bias,
                           &dec_a_grads[t]);
    }

    auto dec_grads = rrnn_backward(params.dec, trace.dec_trace, dec_a_grads);
    grads.dec = std::move(dec_grads.params);

    std::vector<T> g_sv(params.sv.out(), T(0));
    for (const auto& g : dec_grads.grad_a_in) {
        for (std::size_t i = 0; i < g_sv.size(); ++i) g_sv[i] += g[i];
    }
    for (std::size_t i = 0; i < g_sv.size(); ++i) {
        g_sv[i] *= (T(1) - trace.sv[i] * trace.sv[i]);
    }

    std::vector<T> g_enc_final(params.sv.in(), T(0));
    dense_backward_acc(params.sv, std::span<const T>(trace.enc_a_final), std::span<const T>(g_sv),
                       grads.sv.weights, grads.sv.bias, &g_enc_final);

    // Only the last processed encoder step feeds the sentence-vector layer.
    std::vector<std::vector<T>> enc_a_grads(trace.enc_trace.length());
    enc_a_grads.back() = std::move(g_enc_final);
    auto enc_grads = rrnn_backward(params.enc, trace.enc_trace, enc_a_grads);
    grads.enc = std::move(enc_grads.params);
    return grads;
}

template <typename T>
struct Reconstruction {
    std::vector<std::size_t> matched_ids;
    std::vector<MatchResult<T>> matches;
};

template <typename T>
std::vector<std::vector<T>> ids_to_vectors(const EmbeddingTable<T>& table,
                                           std::span<const std::uint32_t> ids) {
    std::vector<std::vector<T>> vecs;
    vecs.reserve(ids.size());
    for (auto id : ids) {
        if (id >= table.vocab()) {
            throw UsageError("token id " + std::to_string(id) + " outside vocabulary of " +
                             std::to_string(table.vocab()));
        }
        vecs.emplace_back(table.vec(id), table.vec(id) + table.dim());
    }
    return vecs;
}

// Encode then decode at the input length, then match every output back to the
// dictionary. token_ids must end with EOS.
template <typename T>
Reconstruction<T> reconstruct(const ModelParams<T>& params, const ModelConfig& cfg,
                              const EmbeddingTable<T>& table,
                              std::span<const std::uint32_t> token_ids) {
    if (token_ids.empty()) throw UsageError("reconstruct: empty token sequence");
    if (token_ids.back() != table.eos_id()) {
        throw UsageError("reconstruct: token sequence does not end with EOS");
    }
    auto trace = model_forward(params, cfg, ids_to_vectors(table, token_ids));
    Matrix<T> outputs(trace.outputs.size(), cfg.word_dim);
    for (std::size_t t = 0; t < trace.outputs.size(); ++t) {
        std::copy(trace.outputs[t].begin(), trace.outputs[t].end(), outputs.row(t));
    }
    Reconstruction<T> rec;
    rec.matches = match_batch(outputs, table);
    rec.matched_ids.reserve(rec.matches.size());
    for (const auto& m : rec.matches) rec.matched_ids.push_back(m.word_id);
    return rec;
}

// Inference-time decoding: run until EOS is matched, capped at max_len+1 steps.
template <typename T>
std::vector<std::size_t> decode_until_eos(const ModelParams<T>& params, const ModelConfig& cfg,
                                          const EmbeddingTable<T>& table, std::span<const T> sv) {
    const std::size_t eos = table.eos_id();
    std::vector<std::size_t> ids;
    std::vector<T> p = params.dec.p0;
    for (std::size_t t = 0; t < cfg.max_len + 1; ++t) {
        auto step = cell_step(params.dec, sv, std::span<const T>(p));
        p = std::move(step.p_next);
        auto out = dense_forward(params.out, std::span<const T>(step.a_out));
        const auto match = match_one(std::span<const T>(out), table);
        ids.push_back(match.word_id);
        if (match.word_id == eos) break;
    }
    return ids;
}

} // namespace rrae
