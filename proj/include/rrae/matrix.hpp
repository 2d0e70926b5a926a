// Dense row-major matrix and the handful of operations the model needs.
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rrae/errors.hpp"

namespace rrae {

template <typename T>
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> data; // row-major, rows * cols entries

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, T fill = T(0)) : rows(r), cols(c), data(r * c, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
        return m;
    }

    T& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    T* row(std::size_t i) { return data.data() + i * cols; }
    const T* row(std::size_t i) const { return data.data() + i * cols; }

    std::size_t size() const { return data.size(); }

    std::string shape_str() const {
        return std::to_string(rows) + "x" + std::to_string(cols);
    }
};

// Standard product, i-k-j loop order: deterministic summation for a given
// build and cache-friendly on row-major storage.
template <typename T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b) {
    if (a.cols != b.rows) {
        throw ShapeError("matmul: incompatible shapes " + a.shape_str() + " and " + b.shape_str());
    }
    Matrix<T> c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const T* arow = a.row(i);
        T* crow = c.row(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const T aik = arow[k];
            const T* brow = b.row(k);
            for (std::size_t j = 0; j < b.cols; ++j) {
                crow[j] += aik * brow[j];
            }
        }
    }
    return c;
}

template <typename T>
Matrix<T> transpose(const Matrix<T>& a) {
    Matrix<T> t(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t j = 0; j < a.cols; ++j) {
            t(j, i) = a(i, j);
        }
    }
    return t;
}

} // namespace rrae
