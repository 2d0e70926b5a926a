// Word-vector dictionary: loading, special-vector generation, and batched
// nearest-word matching by cosine similarity via one matrix multiply.
#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "rrae/errors.hpp"
#include "rrae/matrix.hpp"
#include "rrae/rng.hpp"

namespace rrae {

inline constexpr const char* kEosToken = "EOS";
inline constexpr const char* kUnkToken = "UNK";
inline constexpr std::size_t knpos = static_cast<std::size_t>(-1);

template <typename T>
struct MatchResult {
    std::size_t word_id = 0;
    T similarity = T(0); // cosine, in [-1, 1]
};

template <typename T>
class EmbeddingTable {
public:
    EmbeddingTable() = default;

    // Takes ownership of words and their V x dim vectors; validates and
    // builds the matching structures.
    EmbeddingTable(std::vector<std::string> words, Matrix<T> vectors)
        : words_(std::move(words)), vectors_(std::move(vectors)) {
        rebuild();
    }

    std::size_t dim() const { return vectors_.cols; }
    std::size_t vocab() const { return words_.size(); }

    const std::vector<std::string>& words() const { return words_; }
    const std::string& word(std::size_t id) const { return words_[id]; }
    const Matrix<T>& vectors() const { return vectors_; }
    const T* vec(std::size_t id) const { return vectors_.row(id); }
    T norm(std::size_t id) const { return norms_[id]; }
    const std::vector<std::size_t>& special_ids() const { return special_ids_; }

    std::optional<std::size_t> lookup(const std::string& token) const {
        auto it = index_.find(token);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    bool has_specials() const { return eos_id_ != knpos && unk_id_ != knpos; }
    std::size_t eos_id() const {
        if (eos_id_ == knpos) throw UsageError("embedding table has no EOS token");
        return eos_id_;
    }
    std::size_t unk_id() const {
        if (unk_id_ == knpos) throw UsageError("embedding table has no UNK token");
        return unk_id_;
    }

    // Longest underscore-joined phrase in the vocabulary, in words.
    std::size_t max_phrase_words() const { return max_phrase_words_; }

    // Dictionary rows norm-scaled once and stored transposed (dim x V), so a
    // batch match is a single product against it.
    const Matrix<T>& unit_dictionary_t() const { return unit_t_; }

    // Appends new tokens whose vectors are drawn i.i.d. Gaussian with the
    // table's empirical per-component mean and standard deviation.
    void add_special_vectors(const std::vector<std::string>& tokens, std::uint64_t seed) {
        if (vocab() == 0) throw UsageError("cannot derive special-vector statistics from an empty table");
        for (const auto& tok : tokens) {
            if (index_.count(tok)) {
                throw ValidationError("special token already in table: " + tok);
            }
        }
        const std::size_t d = dim();
        std::vector<double> mean(d, 0.0), sd(d, 0.0);
        for (std::size_t i = 0; i < vocab(); ++i) {
            const T* row = vectors_.row(i);
            for (std::size_t j = 0; j < d; ++j) mean[j] += static_cast<double>(row[j]);
        }
        for (auto& m : mean) m /= static_cast<double>(vocab());
        for (std::size_t i = 0; i < vocab(); ++i) {
            const T* row = vectors_.row(i);
            for (std::size_t j = 0; j < d; ++j) {
                const double dv = static_cast<double>(row[j]) - mean[j];
                sd[j] += dv * dv;
            }
        }
        for (auto& s : sd) s = std::sqrt(s / static_cast<double>(vocab()));

        Rng rng(seed);
        Matrix<T> grown(vocab() + tokens.size(), d);
        std::copy(vectors_.data.begin(), vectors_.data.end(), grown.data.begin());
        for (std::size_t k = 0; k < tokens.size(); ++k) {
            T* row = grown.row(vocab() + k);
            for (std::size_t j = 0; j < d; ++j) {
                row[j] = static_cast<T>(mean[j] + sd[j] * rng.gaussian());
            }
        }
        const std::size_t old_v = vocab();
        for (const auto& tok : tokens) words_.push_back(tok);
        vectors_ = std::move(grown);
        rebuild();
        for (std::size_t k = 0; k < tokens.size(); ++k) {
            special_ids_.push_back(old_v + k);
        }
    }

    void save_text(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw IoError("cannot open for writing: " + path);
        out << vocab() << " " << dim() << "\n";
        out.precision(17);
        for (std::size_t i = 0; i < vocab(); ++i) {
            out << words_[i];
            const T* row = vectors_.row(i);
            for (std::size_t j = 0; j < dim(); ++j) out << " " << static_cast<double>(row[j]);
            out << "\n";
        }
        if (!out) throw IoError("write failed: " + path);
    }

    void save_binary(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot open for writing: " + path);
        out.write("RRAE-EMB1", 9);
        write_u32(out, static_cast<std::uint32_t>(vocab()));
        write_u32(out, static_cast<std::uint32_t>(dim()));
        for (const auto& w : words_) {
            write_u32(out, static_cast<std::uint32_t>(w.size()));
            out.write(w.data(), static_cast<std::streamsize>(w.size()));
        }
        for (std::size_t i = 0; i < vocab(); ++i) {
            const T* row = vectors_.row(i);
            for (std::size_t j = 0; j < dim(); ++j) {
                const float f = static_cast<float>(row[j]);
                out.write(reinterpret_cast<const char*>(&f), sizeof(float));
            }
        }
        if (!out) throw IoError("write failed: " + path);
    }

    // 64-bit FNV-1a over the token list; ties token-id files to the table
    // that produced them.
    std::string vocab_hash() const {
        std::uint64_t h = 0xcbf29ce484222325ull;
        auto eat = [&h](const char* p, std::size_t n) {
            for (std::size_t i = 0; i < n; ++i) {
                h ^= static_cast<unsigned char>(p[i]);
                h *= 0x100000001b3ull;
            }
        };
        for (const auto& w : words_) {
            eat(w.data(), w.size());
            eat("\n", 1);
        }
        char buf[17];
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
        return std::string(buf);
    }

private:
    void rebuild() {
        if (vectors_.rows != words_.size()) {
            throw ValidationError("embedding table: " + std::to_string(words_.size()) +
                                  " tokens but " + std::to_string(vectors_.rows) + " vector rows");
        }
        index_.clear();
        index_.reserve(words_.size());
        for (std::size_t i = 0; i < words_.size(); ++i) {
            if (!index_.emplace(words_[i], i).second) {
                throw ValidationError("duplicate token in embedding table: " + words_[i]);
            }
        }
        norms_.assign(vocab(), T(0));
        for (std::size_t i = 0; i < vocab(); ++i) {
            double acc = 0.0;
            const T* row = vectors_.row(i);
            for (std::size_t j = 0; j < dim(); ++j) {
                acc += static_cast<double>(row[j]) * static_cast<double>(row[j]);
            }
            norms_[i] = static_cast<T>(std::sqrt(acc));
            if (!(norms_[i] > T(0))) {
                throw ValidationError("zero-norm embedding vector for token: " + words_[i]);
            }
        }
        unit_t_ = Matrix<T>(dim(), vocab());
        for (std::size_t i = 0; i < vocab(); ++i) {
            const T* row = vectors_.row(i);
            for (std::size_t j = 0; j < dim(); ++j) {
                unit_t_(j, i) = row[j] / norms_[i];
            }
        }
        max_phrase_words_ = 1;
        for (const auto& w : words_) {
            const std::size_t parts =
                1 + static_cast<std::size_t>(std::count(w.begin(), w.end(), '_'));
            max_phrase_words_ = std::max(max_phrase_words_, parts);
        }
        auto eos = index_.find(kEosToken);
        auto unk = index_.find(kUnkToken);
        eos_id_ = eos == index_.end() ? knpos : eos->second;
        unk_id_ = unk == index_.end() ? knpos : unk->second;
        special_ids_.clear();
        for (std::size_t i = 0; i < words_.size(); ++i) {
            const auto& w = words_[i];
            const bool punct = w.size() == 1 && std::ispunct(static_cast<unsigned char>(w[0]));
            if (i == eos_id_ || i == unk_id_ || punct) special_ids_.push_back(i);
        }
    }

    static void write_u32(std::ostream& out, std::uint32_t v) {
        char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 24)};
        out.write(b, 4);
    }

    std::vector<std::string> words_;
    Matrix<T> vectors_;
    std::vector<T> norms_;
    Matrix<T> unit_t_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<std::size_t> special_ids_;
    std::size_t eos_id_ = knpos;
    std::size_t unk_id_ = knpos;
    std::size_t max_phrase_words_ = 1;
};

namespace detail {

inline std::uint32_t read_u32(std::istream& in, const char* what) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw ParseError(std::string("truncated ") + what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

} // namespace detail

// Text format: first line "V dim", then "token v1 ... vdim" per line.
template <typename T>
EmbeddingTable<T> load_embeddings_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open embeddings file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ":1: empty file");
    std::size_t v = 0, dim = 0;
    {
        std::istringstream hs(line);
        if (!(hs >> v >> dim) || v == 0 || dim == 0) {
            throw ParseError(path + ":1: expected header \"V dim\"");
        }
    }
    std::vector<std::string> words;
    words.reserve(v);
    Matrix<T> vectors(v, dim);
    std::size_t row = 0;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (row >= v) {
            throw ValidationError(path + ": more vector lines than the declared " + std::to_string(v));
        }
        std::istringstream ls(line);
        std::string token;
        if (!(ls >> token)) throw ParseError(path + ":" + std::to_string(lineno) + ": missing token");
        double value = 0.0;
        std::size_t col = 0;
        while (ls >> value) {
            if (col >= dim) break;
            vectors(row, col++) = static_cast<T>(value);
        }
        if (col != dim || !ls.eof()) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                             std::to_string(dim) + " values for token " + token);
        }
        words.push_back(std::move(token));
        ++row;
    }
    if (row != v) {
        throw ValidationError(path + ": declared " + std::to_string(v) + " tokens, found " +
                              std::to_string(row));
    }
    return EmbeddingTable<T>(std::move(words), std::move(vectors));
}

// Binary mirror: magic "RRAE-EMB1", LE u32 V, u32 dim, length-prefixed UTF-8
// tokens, then V x dim little-endian float32.
template <typename T>
EmbeddingTable<T> load_embeddings_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open embeddings file: " + path);
    char magic[9];
    if (!in.read(magic, 9) || std::memcmp(magic, "RRAE-EMB1", 9) != 0) {
        throw ParseError(path + ": bad magic, not an RRAE-EMB1 file");
    }
    const std::uint32_t v = detail::read_u32(in, "vocab count");
    const std::uint32_t dim = detail::read_u32(in, "dimension");
    if (v == 0 || dim == 0) throw ParseError(path + ": zero vocab or dimension");
    std::vector<std::string> words;
    words.reserve(v);
    for (std::uint32_t i = 0; i < v; ++i) {
        const std::uint32_t n = detail::read_u32(in, "token length");
        std::string tok(n, '\0');
        if (!in.read(tok.data(), n)) throw ParseError(path + ": truncated token list");
        words.push_back(std::move(tok));
    }
    Matrix<T> vectors(v, dim);
    for (std::size_t i = 0; i < static_cast<std::size_t>(v) * dim; ++i) {
        float f = 0.0f;
        if (!in.read(reinterpret_cast<char*>(&f), sizeof(float))) {
            throw ParseError(path + ": truncated vector data");
        }
        vectors.data[i] = static_cast<T>(f);
    }
    return EmbeddingTable<T>(std::move(words), std::move(vectors));
}

// Picks the format by magic.
template <typename T>
EmbeddingTable<T> load_embeddings(const std::string& path) {
    {
        std::ifstream probe(path, std::ios::binary);
        if (!probe) throw IoError("cannot open embeddings file: " + path);
        char magic[9] = {};
        probe.read(magic, 9);
        if (probe.gcount() == 9 && std::memcmp(magic, "RRAE-EMB1", 9) == 0) {
            return load_embeddings_binary<T>(path);
        }
    }
    return load_embeddings_text<T>(path);
}

// For each output row, the argmax of cosine similarity over the vocabulary,
// computed as one (N x dim) * (dim x V) product against the norm-scaled
// dictionary. Ties break toward the lowest word index.
template <typename T>
std::vector<MatchResult<T>> match_batch(const Matrix<T>& outputs, const EmbeddingTable<T>& table) {
    if (outputs.cols != table.dim()) {
        throw ShapeError("match_batch: output dim " + std::to_string(outputs.cols) +
                         " does not match table dim " + std::to_string(table.dim()));
    }
    std::vector<T> out_norms(outputs.rows, T(0));
    for (std::size_t i = 0; i < outputs.rows; ++i) {
        double acc = 0.0;
        const T* row = outputs.row(i);
        for (std::size_t j = 0; j < outputs.cols; ++j) {
            acc += static_cast<double>(row[j]) * static_cast<double>(row[j]);
        }
        out_norms[i] = static_cast<T>(std::sqrt(acc));
        if (!(out_norms[i] > T(0))) {
            throw MatchError("match_batch: zero-norm output row " + std::to_string(i));
        }
    }
    const Matrix<T> scores = matmul(outputs, table.unit_dictionary_t());
    std::vector<MatchResult<T>> results(outputs.rows);
    for (std::size_t i = 0; i < outputs.rows; ++i) {
        const T* srow = scores.row(i);
        std::size_t best = 0;
        T best_score = srow[0];
        for (std::size_t j = 1; j < table.vocab(); ++j) {
            if (srow[j] > best_score) {
                best_score = srow[j];
                best = j;
            }
        }
        T sim = best_score / out_norms[i];
        sim = std::clamp(sim, T(-1), T(1));
        results[i] = MatchResult<T>{best, sim};
    }
    return results;
}

template <typename T>
MatchResult<T> match_one(std::span<const T> output, const EmbeddingTable<T>& table) {
    Matrix<T> m(1, output.size());
    std::copy(output.begin(), output.end(), m.data.begin());
    return match_batch(m, table)[0];
}

template <typename T>
bool is_match(std::span<const T> output, std::size_t target_id, const EmbeddingTable<T>& table) {
    return match_one(output, table).word_id == target_id;
}

// Deterministic synthetic dictionary for tests and toy runs: unit-norm
// Gaussian directions, re-drawn until every pair keeps cosine <= max_cosine
// (minimum pairwise angle via rejection).
template <typename T>
EmbeddingTable<T> make_separated_table(std::size_t vocab, std::size_t dim, std::uint64_t seed,
                                       double max_cosine = 0.5, std::size_t max_tries = 100000) {
    Rng rng(seed);
    Matrix<T> vectors(vocab, dim);
    std::vector<std::vector<double>> accepted;
    accepted.reserve(vocab);
    std::size_t tries = 0;
    while (accepted.size() < vocab) {
        if (++tries > max_tries) {
            throw ValidationError("make_separated_table: rejection failed; lower max_cosine or vocab");
        }
        std::vector<double> cand(dim);
        double norm = 0.0;
        for (auto& x : cand) {
            x = rng.gaussian();
            norm += x * x;
        }
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;
        for (auto& x : cand) x /= norm;
        bool ok = true;
        for (const auto& prev : accepted) {
            double dot = 0.0;
            for (std::size_t j = 0; j < dim; ++j) dot += cand[j] * prev[j];
            if (dot > max_cosine) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        accepted.push_back(std::move(cand));
    }
    std::vector<std::string> words;
    words.reserve(vocab);
    for (std::size_t i = 0; i < vocab; ++i) {
        words.push_back("w" + std::to_string(i));
        for (std::size_t j = 0; j < dim; ++j) vectors(i, j) = static_cast<T>(accepted[i][j]);
    }
    return EmbeddingTable<T>(std::move(words), std::move(vectors));
}

} // namespace rrae
