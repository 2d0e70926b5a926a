// Versioned binary checkpoints: magic "RRAE-CKPT1", little-endian u32
// version, the model config, named float64 parameter blocks, an optional
// training-state section, and a trailing CRC32 of all preceding bytes.
// Compressor checkpoints reuse the container with "comp.*" block names.
#pragma once

#include <zlib.h>

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "rrae/adam.hpp"
#include "rrae/compressor.hpp"
#include "rrae/errors.hpp"
#include "rrae/model.hpp"

namespace rrae {

inline constexpr char kCheckpointMagic[] = "RRAE-CKPT1"; // 10 bytes on disk
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointBlock {
    std::string name;
    std::vector<double> data;
};

struct CheckpointTrainState {
    std::uint64_t iteration = 0;
    double lr = 0.0;
    std::array<std::uint64_t, 4> rng{};
    double best_tune_matched = -1.0;
    std::uint32_t rounds_since_improvement = 0;
    std::vector<CheckpointBlock> first_moments;
    std::vector<CheckpointBlock> second_moments;
};

struct CheckpointData {
    std::uint32_t version = kCheckpointVersion;
    ModelConfig config;
    std::vector<CheckpointBlock> blocks;
    bool has_train_state = false;
    CheckpointTrainState train_state;

    const CheckpointBlock* find(const std::string& name) const {
        for (const auto& b : blocks) {
            if (b.name == name) return &b;
        }
        return nullptr;
    }
};

namespace detail {

struct ByteWriter {
    std::string bytes;

    void raw(const void* p, std::size_t n) {
        bytes.append(static_cast<const char*>(p), n);
    }
    void u8(std::uint8_t v) { raw(&v, 1); }
    void u32(std::uint32_t v) {
        const char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8),
                           static_cast<char>(v >> 16), static_cast<char>(v >> 24)};
        raw(b, 4);
    }
    void u64(std::uint64_t v) {
        u32(static_cast<std::uint32_t>(v));
        u32(static_cast<std::uint32_t>(v >> 32));
    }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        raw(s.data(), s.size());
    }
    void block(const CheckpointBlock& b) {
        str(b.name);
        u64(b.data.size());
        for (double v : b.data) f64(v);
    }
};

struct ByteReader {
    const unsigned char* p;
    std::size_t left;

    void need(std::size_t n, const char* what) {
        if (left < n) throw CheckpointError(std::string("checkpoint truncated while reading ") + what);
    }
    void raw(void* dst, std::size_t n, const char* what) {
        need(n, what);
        std::memcpy(dst, p, n);
        p += n;
        left -= n;
    }
    std::uint8_t u8(const char* what) {
        std::uint8_t v;
        raw(&v, 1, what);
        return v;
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        const std::uint32_t v = static_cast<std::uint32_t>(p[0]) |
                                (static_cast<std::uint32_t>(p[1]) << 8) |
                                (static_cast<std::uint32_t>(p[2]) << 16) |
                                (static_cast<std::uint32_t>(p[3]) << 24);
        p += 4;
        left -= 4;
        return v;
    }
    std::uint64_t u64(const char* what) {
        const std::uint64_t lo = u32(what);
        const std::uint64_t hi = u32(what);
        return lo | (hi << 32);
    }
    double f64(const char* what) {
        const std::uint64_t bits = u64(what);
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::string str(const char* what) {
        const std::uint32_t n = u32(what);
        std::string s(n, '\0');
        raw(s.data(), n, what);
        return s;
    }
    CheckpointBlock block(const char* what) {
        CheckpointBlock b;
        b.name = str(what);
        const std::uint64_t count = u64(what);
        need(count * 8, what);
        b.data.resize(count);
        for (std::uint64_t i = 0; i < count; ++i) b.data[i] = f64(what);
        return b;
    }
};

} // namespace detail

inline void write_checkpoint_file(const std::string& path, const CheckpointData& data) {
    detail::ByteWriter w;
    w.raw(kCheckpointMagic, 10);
    w.u32(data.version);
    w.u32(static_cast<std::uint32_t>(data.config.word_dim));
    w.u32(static_cast<std::uint32_t>(data.config.hidden));
    w.u32(static_cast<std::uint32_t>(data.config.max_len));
    w.u32(static_cast<std::uint32_t>(data.blocks.size()));
    for (const auto& b : data.blocks) w.block(b);
    w.u8(data.has_train_state ? 1 : 0);
    if (data.has_train_state) {
        const auto& ts = data.train_state;
        w.u64(ts.iteration);
        w.f64(ts.lr);
        w.u64(4);
        for (auto word : ts.rng) w.u64(word);
        w.f64(ts.best_tune_matched);
        w.u32(ts.rounds_since_improvement);
        w.u32(static_cast<std::uint32_t>(ts.first_moments.size()));
        for (std::size_t i = 0; i < ts.first_moments.size(); ++i) {
            w.block(ts.first_moments[i]);
            w.block(ts.second_moments[i]);
        }
    }
    const std::uint32_t crc = static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(w.bytes.data()),
                static_cast<uInt>(w.bytes.size())));
    w.u32(crc);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path);
    out.write(w.bytes.data(), static_cast<std::streamsize>(w.bytes.size()));
    if (!out) throw IoError("checkpoint write failed: " + path);
}

inline CheckpointData read_checkpoint_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 14) throw CheckpointError("checkpoint truncated: " + path);

    const std::size_t body = bytes.size() - 4;
    const std::uint32_t expected = static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(body)));
    std::uint32_t stored = 0;
    for (int i = 0; i < 4; ++i) {
        stored |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[body + i])) << (8 * i);
    }
    if (stored != expected) {
        throw CheckpointError("checkpoint checksum mismatch: " + path);
    }

    detail::ByteReader r{reinterpret_cast<const unsigned char*>(bytes.data()), body};
    char magic[10];
    r.raw(magic, 10, "magic");
    if (std::memcmp(magic, kCheckpointMagic, 10) != 0) {
        throw CheckpointError("bad checkpoint magic: " + path);
    }
    CheckpointData data;
    data.version = r.u32("version");
    if (data.version != kCheckpointVersion) {
        throw CheckpointError("unsupported checkpoint version " + std::to_string(data.version) +
                              " in " + path);
    }
    data.config.word_dim = r.u32("word_dim");
    data.config.hidden = r.u32("hidden");
    data.config.max_len = r.u32("max_len");
    const std::uint32_t n_blocks = r.u32("block count");
    data.blocks.reserve(n_blocks);
    for (std::uint32_t i = 0; i < n_blocks; ++i) data.blocks.push_back(r.block("parameter block"));
    data.has_train_state = r.u8("train state flag") != 0;
    if (data.has_train_state) {
        auto& ts = data.train_state;
        ts.iteration = r.u64("iteration");
        ts.lr = r.f64("lr");
        const std::uint64_t rng_words = r.u64("rng length");
        if (rng_words != 4) throw CheckpointError("unexpected rng state length in " + path);
        for (auto& word : ts.rng) word = r.u64("rng state");
        ts.best_tune_matched = r.f64("best tune metric");
        ts.rounds_since_improvement = r.u32("stall counter");
        const std::uint32_t n_moments = r.u32("moment block count");
        for (std::uint32_t i = 0; i < n_moments; ++i) {
            ts.first_moments.push_back(r.block("first moment block"));
            ts.second_moments.push_back(r.block("second moment block"));
        }
    }
    if (r.left != 0) throw CheckpointError("trailing bytes in checkpoint: " + path);
    return data;
}

template <typename T>
void save_checkpoint(const std::string& path, const ModelParams<T>& params,
                     const ModelConfig& cfg, const TrainState<T>* train_state = nullptr) {
    CheckpointData data;
    data.config = cfg;
    for_each_block(params, [&data](const char* name, const std::vector<T>& block) {
        CheckpointBlock b;
        b.name = name;
        b.data.assign(block.begin(), block.end());
        data.blocks.push_back(std::move(b));
    });
    if (train_state) {
        data.has_train_state = true;
        auto& ts = data.train_state;
        ts.iteration = train_state->adam.iteration;
        ts.lr = train_state->lr;
        ts.rng = train_state->rng;
        ts.best_tune_matched = train_state->best_tune_matched;
        ts.rounds_since_improvement = train_state->rounds_since_improvement;
        std::size_t offset = 0;
        for_each_block(params, [&](const char* name, const std::vector<T>& block) {
            CheckpointBlock m, v;
            m.name = name;
            v.name = name;
            m.data.assign(train_state->adam.first_moment.begin() + offset,
                          train_state->adam.first_moment.begin() + offset + block.size());
            v.data.assign(train_state->adam.second_moment.begin() + offset,
                          train_state->adam.second_moment.begin() + offset + block.size());
            ts.first_moments.push_back(std::move(m));
            ts.second_moments.push_back(std::move(v));
            offset += block.size();
        });
    }
    write_checkpoint_file(path, data);
}

template <typename T>
struct LoadedCheckpoint {
    ModelConfig config;
    ModelParams<T> params;
    bool has_train_state = false;
    TrainState<T> train_state;
};

template <typename T>
LoadedCheckpoint<T> load_checkpoint(const std::string& path) {
    const CheckpointData data = read_checkpoint_file(path);
    data.config.validate();
    LoadedCheckpoint<T> loaded;
    loaded.config = data.config;
    loaded.params = ModelParams<T>(data.config);
    std::size_t total = 0;
    for_each_block(loaded.params, [&](const char* name, std::vector<T>& block) {
        const CheckpointBlock* b = data.find(name);
        if (!b) throw CheckpointError("checkpoint missing block " + std::string(name) + ": " + path);
        if (b->data.size() != block.size()) {
            throw CheckpointError("checkpoint block " + std::string(name) + " has " +
                                  std::to_string(b->data.size()) + " elements, expected " +
                                  std::to_string(block.size()));
        }
        for (std::size_t i = 0; i < block.size(); ++i) block[i] = static_cast<T>(b->data[i]);
        total += block.size();
    });
    if (data.has_train_state) {
        loaded.has_train_state = true;
        auto& ts = loaded.train_state;
        ts.adam = AdamState<T>(total);
        ts.adam.iteration = data.train_state.iteration;
        ts.lr = data.train_state.lr;
        ts.rng = data.train_state.rng;
        ts.best_tune_matched = data.train_state.best_tune_matched;
        ts.rounds_since_improvement = data.train_state.rounds_since_improvement;
        std::size_t offset = 0;
        std::size_t idx = 0;
        for_each_block(loaded.params, [&](const char* name, std::vector<T>& block) {
            if (idx >= data.train_state.first_moments.size()) {
                throw CheckpointError("checkpoint train state missing moments for " +
                                      std::string(name));
            }
            const auto& m = data.train_state.first_moments[idx];
            const auto& v = data.train_state.second_moments[idx];
            if (m.name != name || m.data.size() != block.size() || v.data.size() != block.size()) {
                throw CheckpointError("checkpoint moment block mismatch for " + std::string(name));
            }
            for (std::size_t i = 0; i < block.size(); ++i) {
                ts.adam.first_moment[offset + i] = static_cast<T>(m.data[i]);
                ts.adam.second_moment[offset + i] = static_cast<T>(v.data[i]);
            }
            offset += block.size();
            ++idx;
        });
    }
    return loaded;
}

// Compressor checkpoints: the config records the associated model (hidden is
// the sentence-vector size); the compressed size is recovered from the block
// shapes.
template <typename T>
void save_compressor_checkpoint(const std::string& path, const CompressorParams<T>& params,
                                const ModelConfig& cfg) {
    CheckpointData data;
    data.config = cfg;
    for_each_compressor_block(params, [&data](const char* name, const std::vector<T>& block) {
        CheckpointBlock b;
        b.name = name;
        b.data.assign(block.begin(), block.end());
        data.blocks.push_back(std::move(b));
    });
    write_checkpoint_file(path, data);
}

template <typename T>
struct LoadedCompressor {
    ModelConfig config;
    CompressorParams<T> params;
};

template <typename T>
LoadedCompressor<T> load_compressor_checkpoint(const std::string& path) {
    const CheckpointData data = read_checkpoint_file(path);
    data.config.validate();
    const CheckpointBlock* cb = data.find("comp.compress.b");
    if (!cb) throw CheckpointError("not a compressor checkpoint (comp.compress.b missing): " + path);
    const std::size_t compressed = cb->data.size();
    LoadedCompressor<T> loaded;
    loaded.config = data.config;
    loaded.params = CompressorParams<T>(data.config.hidden, compressed);
    for_each_compressor_block(loaded.params, [&](const char* name, std::vector<T>& block) {
        const CheckpointBlock* b = data.find(name);
        if (!b) throw CheckpointError("checkpoint missing block " + std::string(name) + ": " + path);
        if (b->data.size() != block.size()) {
            throw CheckpointError("checkpoint block " + std::string(name) + " has " +
                                  std::to_string(b->data.size()) + " elements, expected " +
                                  std::to_string(block.size()));
        }
        for (std::size_t i = 0; i < block.size(); ++i) block[i] = static_cast<T>(b->data[i]);
    });
    return loaded;
}

} // namespace rrae
