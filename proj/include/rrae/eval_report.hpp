// Reporting: matched-word and exact-sentence curves versus sentence length,
// and side-by-side input/output sentence tables with mismatches flagged.
#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "rrae/embedding.hpp"
#include "rrae/errors.hpp"
#include "rrae/model.hpp"
#include "rrae/rng.hpp"
#include "rrae/trainer.hpp"

namespace rrae {

struct LengthRecord {
    std::size_t length = 0; // pre-EOS content tokens
    double matched_word_rate = 0.0;
    double exact_sentence_rate = 0.0;
    std::uint64_t n_sentences = 0;
};

template <typename T>
std::vector<LengthRecord> length_curves(const ModelParams<T>& params, const ModelConfig& cfg,
                                        const std::vector<std::vector<std::uint32_t>>& dataset,
                                        const EmbeddingTable<T>& table) {
    const auto eval = evaluate(params, cfg, dataset, table);
    std::vector<LengthRecord> records;
    records.reserve(eval.by_length.size());
    for (const auto& [length, bucket] : eval.by_length) {
        LengthRecord r;
        r.length = length;
        r.matched_word_rate = bucket.matched_word_rate();
        r.exact_sentence_rate = bucket.exact_sentence_rate();
        r.n_sentences = bucket.sentences;
        records.push_back(r);
    }
    return records;
}

inline void write_length_curves_csv(const std::string& path,
                                    const std::vector<LengthRecord>& records) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "length,matched_word_rate,exact_sentence_rate,n\n";
    out.precision(17);
    for (const auto& r : records) {
        out << r.length << "," << r.matched_word_rate << "," << r.exact_sentence_rate << ","
            << r.n_sentences << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

struct SentenceRecord {
    std::vector<std::string> input_tokens;
    std::vector<std::string> output_tokens;
    std::vector<std::size_t> mismatch_positions;
};

// A seeded random sample of n sentences, reconstructed and compared
// position-wise.
template <typename T>
std::vector<SentenceRecord> sentence_table(const ModelParams<T>& params, const ModelConfig& cfg,
                                           const std::vector<std::vector<std::uint32_t>>& dataset,
                                           const EmbeddingTable<T>& table, std::size_t n,
                                           std::uint64_t seed) {
    if (n > dataset.size()) {
        throw UsageError("sentence_table: sample size " + std::to_string(n) +
                         " exceeds dataset size " + std::to_string(dataset.size()));
    }
    std::vector<std::size_t> indices(dataset.size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    Rng rng(seed);
    rng.shuffle(indices);
    indices.resize(n);

    std::vector<SentenceRecord> records;
    records.reserve(n);
    for (const auto idx : indices) {
        const auto& seq = dataset[idx];
        const auto rec = reconstruct(params, cfg, table, std::span<const std::uint32_t>(seq));
        SentenceRecord r;
        r.input_tokens.reserve(seq.size());
        r.output_tokens.reserve(seq.size());
        for (std::size_t i = 0; i < seq.size(); ++i) {
            r.input_tokens.push_back(table.word(seq[i]));
            r.output_tokens.push_back(table.word(rec.matched_ids[i]));
            if (rec.matched_ids[i] != seq[i]) r.mismatch_positions.push_back(i);
        }
        records.push_back(std::move(r));
    }
    return records;
}

// TSV with a semicolon-separated mismatch_positions column.
inline void write_sentence_table_tsv(const std::string& path,
                                     const std::vector<SentenceRecord>& records) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "input\toutput\tmismatch_positions\n";
    for (const auto& r : records) {
        for (std::size_t i = 0; i < r.input_tokens.size(); ++i) {
            if (i) out << " ";
            out << r.input_tokens[i];
        }
        out << "\t";
        for (std::size_t i = 0; i < r.output_tokens.size(); ++i) {
            if (i) out << " ";
            out << r.output_tokens[i];
        }
        out << "\t";
        for (std::size_t i = 0; i < r.mismatch_positions.size(); ++i) {
            if (i) out << ";";
            out << r.mismatch_positions[i];
        }
        out << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

} // namespace rrae
