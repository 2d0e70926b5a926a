// Fully-connected layer: affine forward, exact analytic backward, Glorot init.
#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rrae/errors.hpp"
#include "rrae/matrix.hpp"
#include "rrae/rng.hpp"

namespace rrae {

template <typename T>
struct DenseLayer {
    Matrix<T> weights;   // out x in
    std::vector<T> bias; // out

    DenseLayer() = default;
    DenseLayer(std::size_t out, std::size_t in) : weights(out, in), bias(out, T(0)) {}

    std::size_t in() const { return weights.cols; }
    std::size_t out() const { return weights.rows; }
    std::size_t parameter_count() const { return weights.size() + bias.size(); }
};

// Uniform(-s, s) with s = sqrt(6 / (in + out)); biases stay zero.
template <typename T>
void glorot_init(DenseLayer<T>& layer, Rng& rng) {
    const double s = std::sqrt(6.0 / static_cast<double>(layer.in() + layer.out()));
    for (auto& w : layer.weights.data) w = static_cast<T>(rng.uniform(-s, s));
}

// Same law with explicit fan terms, used for the recurrent initial-state bias.
template <typename T>
void fan_uniform_init(std::vector<T>& values, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& v : values) v = static_cast<T>(rng.uniform(-s, s));
}

// weights * x + bias. Activations are applied by callers.
template <typename T>
std::vector<T> dense_forward(const DenseLayer<T>& layer, std::span<const T> x) {
    if (x.size() != layer.in()) {
        throw ShapeError("dense_forward: input length " + std::to_string(x.size()) +
                         " does not match layer input " + std::to_string(layer.in()));
    }
    std::vector<T> y(layer.bias);
    for (std::size_t i = 0; i < layer.out(); ++i) {
        const T* wrow = layer.weights.row(i);
        T acc = y[i];
        for (std::size_t j = 0; j < layer.in(); ++j) acc += wrow[j] * x[j];
        y[i] = acc;
    }
    return y;
}

// Accumulating backward pass. grad_x may be empty when the input is a leaf.
template <typename T>
void dense_backward_acc(const DenseLayer<T>& layer, std::span<const T> x,
                        std::span<const T> grad_out, Matrix<T>& grad_weights,
                        std::vector<T>& grad_bias, std::vector<T>* grad_x) {
    if (x.size() != layer.in() || grad_out.size() != layer.out()) {
        throw ShapeError("dense_backward: got input length " + std::to_string(x.size()) +
                         ", grad length " + std::to_string(grad_out.size()) +
                         " for layer " + std::to_string(layer.out()) + "x" + std::to_string(layer.in()));
    }
    for (std::size_t i = 0; i < layer.out(); ++i) {
        const T g = grad_out[i];
        grad_bias[i] += g;
        T* gw = grad_weights.row(i);
        for (std::size_t j = 0; j < layer.in(); ++j) gw[j] += g * x[j];
    }
    if (grad_x) {
        for (std::size_t j = 0; j < layer.in(); ++j) {
            T acc = (*grad_x)[j];
            for (std::size_t i = 0; i < layer.out(); ++i) {
                acc += layer.weights(i, j) * grad_out[i];
            }
            (*grad_x)[j] = acc;
        }
    }
}

template <typename T>
struct DenseGrads {
    std::vector<T> grad_x;
    Matrix<T> grad_weights;
    std::vector<T> grad_bias;
};

template <typename T>
DenseGrads<T> dense_backward(const DenseLayer<T>& layer, std::span<const T> x,
                             std::span<const T> grad_out) {
    DenseGrads<T> g;
    g.grad_x.assign(layer.in(), T(0));
    g.grad_weights = Matrix<T>(layer.out(), layer.in());
    g.grad_bias.assign(layer.out(), T(0));
    dense_backward_acc(layer, x, grad_out, g.grad_weights, g.grad_bias, &g.grad_x);
    return g;
}

template <typename T>
void tanh_inplace(std::vector<T>& v) {
    for (auto& x : v) x = std::tanh(x);
}

template <typename T>
std::vector<T> tanh_of(const std::vector<T>& v) {
    std::vector<T> out(v);
    tanh_inplace(out);
    return out;
}

} // namespace rrae
