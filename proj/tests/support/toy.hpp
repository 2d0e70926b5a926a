// Shared toy fixtures: separated embedding tables with specials, random
// sentence corpora, and flat parameter views for gradient checks.
#pragma once

#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "rrae/embedding.hpp"
#include "rrae/model.hpp"
#include "rrae/rng.hpp"

namespace testsupport {

// Separated word vectors plus EOS/UNK specials.
inline rrae::EmbeddingTable<double> toy_table(std::size_t vocab, std::size_t dim,
                                              std::uint64_t seed, double max_cosine = 0.5) {
    auto table = rrae::make_separated_table<double>(vocab, dim, seed, max_cosine);
    table.add_special_vectors({rrae::kEosToken, rrae::kUnkToken}, seed + 1);
    return table;
}

// Unique random sentences over the content vocabulary, EOS-terminated.
inline std::vector<std::vector<std::uint32_t>> toy_sentences(const rrae::EmbeddingTable<double>& table,
                                                             std::size_t count, std::size_t min_len,
                                                             std::size_t max_len,
                                                             std::uint64_t seed,
                                                             std::size_t content_vocab) {
    rrae::Rng rng(seed);
    std::set<std::vector<std::uint32_t>> unique;
    const auto eos = static_cast<std::uint32_t>(table.eos_id());
    std::size_t guard = 0;
    while (unique.size() < count) {
        if (++guard > count * 1000) {
            throw std::runtime_error("toy_sentences: cannot draw enough unique sentences");
        }
        const std::size_t len = min_len + rng.next_below(max_len - min_len + 1);
        std::vector<std::uint32_t> seq;
        seq.reserve(len + 1);
        for (std::size_t i = 0; i < len; ++i) {
            seq.push_back(static_cast<std::uint32_t>(rng.next_below(content_vocab)));
        }
        seq.push_back(eos);
        unique.insert(std::move(seq));
    }
    return {unique.begin(), unique.end()};
}

// Copies every model block into one flat vector; the inverse writes it back.
inline std::vector<double> flatten(const rrae::ModelParams<double>& params) {
    std::vector<double> flat;
    flat.reserve(params.parameter_count());
    rrae::for_each_block(params, [&flat](const char*, const std::vector<double>& block) {
        flat.insert(flat.end(), block.begin(), block.end());
    });
    return flat;
}

inline void unflatten(const std::vector<double>& flat, rrae::ModelParams<double>& params) {
    std::size_t offset = 0;
    rrae::for_each_block(params, [&](const char*, std::vector<double>& block) {
        for (std::size_t i = 0; i < block.size(); ++i) block[i] = flat[offset + i];
        offset += block.size();
    });
}

// Unique scratch directory under the system temp root, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        const auto base = std::filesystem::temp_directory_path();
        path_ = base / ("rrae_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                        std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

} // namespace testsupport
