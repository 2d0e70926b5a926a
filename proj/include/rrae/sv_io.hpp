// Sentence-vector files. Text: header "RRAE-SV1 <dim>", one vector per line
// of space-separated decimals. Binary mirror: magic "RRAE-SVB1", LE u32 dim,
// u64 count, then count x dim float32.
#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rrae/errors.hpp"

namespace rrae {

template <typename T>
void write_sv_text(const std::string& path, const std::vector<std::vector<T>>& vectors,
                   std::size_t dim) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "RRAE-SV1 " << dim << "\n";
    out.precision(17);
    for (const auto& v : vectors) {
        if (v.size() != dim) throw ShapeError("write_sv_text: vector length mismatch");
        for (std::size_t j = 0; j < dim; ++j) {
            if (j) out << " ";
            out << static_cast<double>(v[j]);
        }
        out << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

template <typename T>
std::vector<std::vector<T>> read_sv_text(const std::string& path, std::size_t* dim_out = nullptr) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ":1: empty file");
    std::size_t dim = 0;
    {
        std::istringstream hs(line);
        std::string magic;
        if (!(hs >> magic >> dim) || magic != "RRAE-SV1" || dim == 0) {
            throw ParseError(path + ":1: expected header \"RRAE-SV1 <dim>\"");
        }
    }
    std::vector<std::vector<T>> vectors;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::vector<T> v;
        v.reserve(dim);
        double x;
        while (ls >> x) v.push_back(static_cast<T>(x));
        if (v.size() != dim) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                             std::to_string(dim) + " values, got " + std::to_string(v.size()));
        }
        vectors.push_back(std::move(v));
    }
    if (dim_out) *dim_out = dim;
    return vectors;
}

template <typename T>
void write_sv_binary(const std::string& path, const std::vector<std::vector<T>>& vectors,
                     std::size_t dim) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write("RRAE-SVB1", 9);
    auto u32 = [&out](std::uint32_t v) {
        const char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8),
                           static_cast<char>(v >> 16), static_cast<char>(v >> 24)};
        out.write(b, 4);
    };
    u32(static_cast<std::uint32_t>(dim));
    u32(static_cast<std::uint32_t>(vectors.size()));
    u32(0); // reserved; keeps count 8-byte aligned as a u64 low/high pair
    for (const auto& v : vectors) {
        if (v.size() != dim) throw ShapeError("write_sv_binary: vector length mismatch");
        for (const T x : v) {
            const float f = static_cast<float>(x);
            out.write(reinterpret_cast<const char*>(&f), sizeof(float));
        }
    }
    if (!out) throw IoError("write failed: " + path);
}

template <typename T>
std::vector<std::vector<T>> read_sv_binary(const std::string& path, std::size_t* dim_out = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    char magic[9];
    if (!in.read(magic, 9) || std::memcmp(magic, "RRAE-SVB1", 9) != 0) {
        throw ParseError(path + ": bad magic, not an RRAE-SVB1 file");
    }
    auto u32 = [&in, &path](const char* what) {
        unsigned char b[4];
        if (!in.read(reinterpret_cast<char*>(b), 4)) {
            throw ParseError(path + ": truncated " + what);
        }
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    };
    const std::uint32_t dim = u32("dimension");
    const std::uint32_t count = u32("count");
    u32("reserved word");
    if (dim == 0) throw ParseError(path + ": zero dimension");
    std::vector<std::vector<T>> vectors(count);
    for (auto& v : vectors) {
        v.resize(dim);
        for (auto& x : v) {
            float f;
            if (!in.read(reinterpret_cast<char*>(&f), sizeof(float))) {
                throw ParseError(path + ": truncated vector data");
            }
            x = static_cast<T>(f);
        }
    }
    if (dim_out) *dim_out = dim;
    return vectors;
}

// Picks the format by magic; falls back to text.
template <typename T>
std::vector<std::vector<T>> read_sv_file(const std::string& path, std::size_t* dim_out = nullptr) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("cannot open: " + path);
    char magic[9] = {};
    probe.read(magic, 9);
    if (probe.gcount() == 9 && std::memcmp(magic, "RRAE-SVB1", 9) == 0) {
        return read_sv_binary<T>(path, dim_out);
    }
    return read_sv_text<T>(path, dim_out);
}

} // namespace rrae
