// Match-drop regression loss: squared error on mismatched positions, exactly
// zero loss and zero gradient on positions whose nearest dictionary word
// already equals the target. Matching uses cosine while the trained distance
// is Euclidean; the asymmetry is intentional.
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "rrae/embedding.hpp"
#include "rrae/errors.hpp"

namespace rrae {

template <typename T>
struct PositionLoss {
    T loss = T(0);
    bool matched = false;
    MatchResult<T> match;
};

template <typename T>
struct LossReport {
    T total_loss = T(0);
    std::vector<PositionLoss<T>> per_position;
    std::size_t matched_count = 0;
    std::size_t position_count = 0;
};

namespace detail {

template <typename T>
std::vector<MatchResult<T>> match_outputs(const std::vector<std::vector<T>>& outputs,
                                          const EmbeddingTable<T>& table) {
    Matrix<T> m(outputs.size(), table.dim());
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        if (outputs[i].size() != table.dim()) {
            throw ShapeError("loss: output vector length " + std::to_string(outputs[i].size()) +
                             " does not match table dim " + std::to_string(table.dim()));
        }
        std::copy(outputs[i].begin(), outputs[i].end(), m.row(i));
    }
    return match_batch(m, table);
}

} // namespace detail

template <typename T>
LossReport<T> match_drop_loss(const std::vector<std::vector<T>>& outputs,
                              std::span<const std::uint32_t> target_ids,
                              const EmbeddingTable<T>& table) {
    if (outputs.size() != target_ids.size()) {
        throw UsageError("match_drop_loss: " + std::to_string(outputs.size()) + " outputs vs " +
                         std::to_string(target_ids.size()) + " targets");
    }
    const auto matches = detail::match_outputs(outputs, table);
    LossReport<T> report;
    report.per_position.resize(outputs.size());
    report.position_count = outputs.size();
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        auto& pos = report.per_position[i];
        pos.match = matches[i];
        pos.matched = matches[i].word_id == target_ids[i];
        if (pos.matched) {
            pos.loss = T(0);
            ++report.matched_count;
        } else {
            const T* target = table.vec(target_ids[i]);
            T acc = T(0);
            for (std::size_t j = 0; j < table.dim(); ++j) {
                const T d = outputs[i][j] - target[j];
                acc += d * d;
            }
            pos.loss = acc;
        }
        report.total_loss += pos.loss;
    }
    return report;
}

template <typename T>
std::vector<std::vector<T>> match_drop_grad_from_report(
    const std::vector<std::vector<T>>& outputs, std::span<const std::uint32_t> target_ids,
    const EmbeddingTable<T>& table, const LossReport<T>& report) {
    std::vector<std::vector<T>> grads(outputs.size());
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        if (report.per_position[i].matched) {
            grads[i].assign(table.dim(), T(0));
            continue;
        }
        const T* target = table.vec(target_ids[i]);
        grads[i].resize(table.dim());
        for (std::size_t j = 0; j < table.dim(); ++j) {
            grads[i][j] = T(2) * (outputs[i][j] - target[j]);
        }
    }
    return grads;
}

// Matched positions get an exact zero vector; mismatched get 2*(output - target).
template <typename T>
std::vector<std::vector<T>> match_drop_grad(const std::vector<std::vector<T>>& outputs,
                                            std::span<const std::uint32_t> target_ids,
                                            const EmbeddingTable<T>& table) {
    const auto report = match_drop_loss(outputs, target_ids, table);
    return match_drop_grad_from_report(outputs, target_ids, table, report);
}

// Ablation loss: 1 - cosine(output, target vector) with the same match-drop
// masking. Kept to reproduce the squared-error-vs-cosine comparison.
template <typename T>
LossReport<T> cosine_loss(const std::vector<std::vector<T>>& outputs,
                          std::span<const std::uint32_t> target_ids,
                          const EmbeddingTable<T>& table) {
    if (outputs.size() != target_ids.size()) {
        throw UsageError("cosine_loss: " + std::to_string(outputs.size()) + " outputs vs " +
                         std::to_string(target_ids.size()) + " targets");
    }
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        double acc = 0.0;
        for (const T x : outputs[i]) acc += static_cast<double>(x) * static_cast<double>(x);
        if (!(acc > 0.0)) {
            throw LossError("cosine_loss: zero output vector at position " + std::to_string(i));
        }
    }
    const auto matches = detail::match_outputs(outputs, table);
    LossReport<T> report;
    report.per_position.resize(outputs.size());
    report.position_count = outputs.size();
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        auto& pos = report.per_position[i];
        pos.match = matches[i];
        pos.matched = matches[i].word_id == target_ids[i];
        if (pos.matched) {
            pos.loss = T(0);
            ++report.matched_count;
        } else {
            double dot = 0.0, onorm = 0.0;
            const T* target = table.vec(target_ids[i]);
            for (std::size_t j = 0; j < table.dim(); ++j) {
                dot += static_cast<double>(outputs[i][j]) * static_cast<double>(target[j]);
                onorm += static_cast<double>(outputs[i][j]) * static_cast<double>(outputs[i][j]);
            }
            onorm = std::sqrt(onorm);
            const double cosine = dot / (onorm * static_cast<double>(table.norm(target_ids[i])));
            pos.loss = static_cast<T>(1.0 - cosine);
        }
        report.total_loss += pos.loss;
    }
    return report;
}

template <typename T>
std::vector<std::vector<T>> cosine_grad(const std::vector<std::vector<T>>& outputs,
                                        std::span<const std::uint32_t> target_ids,
                                        const EmbeddingTable<T>& table) {
    const auto report = cosine_loss(outputs, target_ids, table);
    std::vector<std::vector<T>> grads(outputs.size());
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        grads[i].assign(table.dim(), T(0));
        if (report.per_position[i].matched) continue;
        const T* target = table.vec(target_ids[i]);
        double dot = 0.0, onorm2 = 0.0;
        for (std::size_t j = 0; j < table.dim(); ++j) {
            dot += static_cast<double>(outputs[i][j]) * static_cast<double>(target[j]);
            onorm2 += static_cast<double>(outputs[i][j]) * static_cast<double>(outputs[i][j]);
        }
        const double onorm = std::sqrt(onorm2);
        const double tnorm = static_cast<double>(table.norm(target_ids[i]));
        // d(1 - cos)/d out = cos * out / |out|^2 - target / (|out| |target|)
        const double cosine = dot / (onorm * tnorm);
        for (std::size_t j = 0; j < table.dim(); ++j) {
            grads[i][j] = static_cast<T>(cosine * static_cast<double>(outputs[i][j]) / onorm2 -
                                         static_cast<double>(target[j]) / (onorm * tnorm));
        }
    }
    return grads;
}

} // namespace rrae
