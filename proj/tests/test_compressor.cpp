#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <span>

#include "rrae/checkpoint.hpp"
#include "rrae/compressor.hpp"
#include "support/finite_diff.hpp"
#include "support/toy.hpp"

using rrae::CompressorParams;

TEST_CASE("compress output shape and tanh range") {
    auto params = rrae::init_compressor<double>(16, 5, 1);
    std::vector<double> sv(16);
    rrae::Rng rng(2);
    for (auto& x : sv) x = rng.uniform(-3, 3);
    auto cv = rrae::compress(params, std::span<const double>(sv));
    REQUIRE(cv.size() == 5);
    for (double x : cv) {
        REQUIRE(x > -1.0);
        REQUIRE(x < 1.0);
    }
}

TEST_CASE("compress composes the dense layer with tanh") {
    auto params = rrae::init_compressor<double>(8, 3, 3);
    std::vector<double> sv(8);
    rrae::Rng rng(4);
    for (auto& x : sv) x = rng.uniform(-1, 1);
    auto cv = rrae::compress(params, std::span<const double>(sv));
    auto manual = rrae::dense_forward(params.compress, std::span<const double>(sv));
    for (std::size_t i = 0; i < manual.size(); ++i) {
        REQUIRE(cv[i] == std::tanh(manual[i]));
    }
}

TEST_CASE("decompress is affine: zero weights return the bias") {
    auto params = rrae::init_compressor<double>(6, 2, 5);
    for (auto& w : params.decompress.weights.data) w = 0.0;
    params.decompress.bias = {1, 2, 3, 4, 5, 6};
    std::vector<double> cv = {0.5, -0.5};
    auto recon = rrae::decompress(params, std::span<const double>(cv));
    REQUIRE(recon == params.decompress.bias);
    REQUIRE(recon.size() == 6);
}

TEST_CASE("compressed size must be smaller than the input") {
    REQUIRE_THROWS_AS(CompressorParams<double>(8, 8), rrae::ValidationError);
    REQUIRE_THROWS_AS(CompressorParams<double>(8, 12), rrae::ValidationError);
}

TEST_CASE("compressed_dim_for mirrors the paper ratio") {
    REQUIRE(rrae::compressed_dim_for(10000) == 3000);
    REQUIRE(rrae::compressed_dim_for(64) == 19);
    REQUIRE(rrae::compressed_dim_for(3) == 1);
}

TEST_CASE("compressor gradients match finite differences") {
    auto params = rrae::init_compressor<double>(6, 2, 7);
    std::vector<double> sv(6);
    rrae::Rng rng(8);
    for (auto& x : sv) x = rng.uniform(-1, 1);
    std::vector<double> target(6);
    for (auto& x : target) x = rng.uniform(-1, 1);

    auto objective = [&]() {
        auto trace = rrae::compressor_forward(params, std::span<const double>(sv));
        double acc = 0.0;
        for (std::size_t j = 0; j < 6; ++j) {
            const double d = trace.recon[j] - target[j];
            acc += d * d;
        }
        return acc;
    };

    auto trace = rrae::compressor_forward(params, std::span<const double>(sv));
    std::vector<double> g_recon(6);
    for (std::size_t j = 0; j < 6; ++j) g_recon[j] = 2.0 * (trace.recon[j] - target[j]);
    CompressorParams<double> grads(6, 2);
    rrae::compressor_backward_acc(params, std::span<const double>(sv), trace,
                                  std::span<const double>(g_recon), grads);

    auto flatten = [](CompressorParams<double>& p) {
        std::vector<double> flat;
        flat.insert(flat.end(), p.compress.weights.data.begin(), p.compress.weights.data.end());
        flat.insert(flat.end(), p.compress.bias.begin(), p.compress.bias.end());
        flat.insert(flat.end(), p.decompress.weights.data.begin(), p.decompress.weights.data.end());
        flat.insert(flat.end(), p.decompress.bias.begin(), p.decompress.bias.end());
        return flat;
    };
    auto unflatten = [](const std::vector<double>& flat, CompressorParams<double>& p) {
        std::size_t o = 0;
        for (auto& x : p.compress.weights.data) x = flat[o++];
        for (auto& x : p.compress.bias) x = flat[o++];
        for (auto& x : p.decompress.weights.data) x = flat[o++];
        for (auto& x : p.decompress.bias) x = flat[o++];
    };

    auto flat = flatten(params);
    auto grads_flat = flatten(grads);
    auto fd = testsupport::central_differences(flat, [&]() {
        unflatten(flat, params);
        return objective();
    });
    unflatten(flat, params);
    for (std::size_t i = 0; i < flat.size(); ++i) {
        REQUIRE(testsupport::grads_close(grads_flat[i], fd[i], 1e-5));
    }
}

TEST_CASE("subspace recovery: capacity above the intrinsic dimension reconstructs") {
    // Vectors in a 4-dim subspace of R^16, compressed through 5 units.
    const std::size_t hidden = 16, comp = 5, intrinsic = 4, count = 128;
    rrae::Rng rng(9);
    std::vector<std::vector<double>> basis(intrinsic, std::vector<double>(hidden));
    for (auto& b : basis) {
        for (auto& x : b) x = rng.gaussian() / std::sqrt(static_cast<double>(hidden));
    }
    std::vector<std::vector<double>> data(count, std::vector<double>(hidden, 0.0));
    for (auto& v : data) {
        for (std::size_t k = 0; k < intrinsic; ++k) {
            const double coeff = rng.uniform(-1.5, 1.5);
            for (std::size_t j = 0; j < hidden; ++j) v[j] += coeff * basis[k][j];
        }
    }

    auto params = rrae::init_compressor<double>(hidden, comp, 10);
    rrae::AdamConfig<double> adam;
    adam.lr0 = 3e-3;
    rrae::CompressorTrainOptions opts;
    opts.epochs = 800;
    opts.minibatch = 32;
    opts.seed = 11;
    auto history = rrae::train_compressor(params, data, adam, opts);

    REQUIRE(history.front() > history.back()); // structured data trains
    double mse = 0.0;
    for (const auto& v : data) {
        auto trace = rrae::compressor_forward(params, std::span<const double>(v));
        for (std::size_t j = 0; j < hidden; ++j) {
            const double d = trace.recon[j] - v[j];
            mse += d * d;
        }
    }
    mse /= static_cast<double>(count * hidden);
    REQUIRE(mse < 1e-3); // per-component mean squared error
}

TEST_CASE("training is deterministic per seed") {
    rrae::Rng rng(12);
    std::vector<std::vector<double>> data(32, std::vector<double>(8));
    for (auto& v : data) {
        for (auto& x : v) x = rng.uniform(-1, 1);
    }
    rrae::AdamConfig<double> adam;
    adam.lr0 = 1e-3;
    rrae::CompressorTrainOptions opts;
    opts.epochs = 20;
    opts.seed = 13;

    auto a = rrae::init_compressor<double>(8, 2, 14);
    auto b = rrae::init_compressor<double>(8, 2, 14);
    auto ha = rrae::train_compressor(a, data, adam, opts);
    auto hb = rrae::train_compressor(b, data, adam, opts);
    REQUIRE(ha == hb);
    REQUIRE(a.compress.weights.data == b.compress.weights.data);
    REQUIRE(a.decompress.weights.data == b.decompress.weights.data);
}

TEST_CASE("empty dataset is rejected") {
    auto params = rrae::init_compressor<double>(4, 1, 15);
    rrae::AdamConfig<double> adam;
    rrae::CompressorTrainOptions opts;
    REQUIRE_THROWS_AS(rrae::train_compressor(params, {}, adam, opts), rrae::UsageError);
}

TEST_CASE("compressor checkpoint round trip preserves dimensions and bits") {
    testsupport::TempDir dir("comp_ckpt");
    auto params = rrae::init_compressor<double>(12, 4, 16);
    const rrae::ModelConfig cfg{6, 12, 20};
    const std::string path = dir.file("comp.ckpt");
    rrae::save_compressor_checkpoint(path, params, cfg);
    auto loaded = rrae::load_compressor_checkpoint<double>(path);
    REQUIRE(loaded.params.hidden() == 12);
    REQUIRE(loaded.params.compressed_dim() == 4);
    REQUIRE(loaded.params.compress.weights.data == params.compress.weights.data);
    REQUIRE(loaded.params.compress.bias == params.compress.bias);
    REQUIRE(loaded.params.decompress.weights.data == params.decompress.weights.data);
    REQUIRE(loaded.params.decompress.bias == params.decompress.bias);
    REQUIRE(loaded.config.hidden == 12);

    // A model checkpoint is not a compressor checkpoint.
    const rrae::ModelConfig mcfg{3, 4, 5};
    auto model = rrae::init_model<double>(mcfg, 17);
    const std::string model_path = dir.file("model.ckpt");
    rrae::save_checkpoint(model_path, model, mcfg);
    REQUIRE_THROWS_AS(rrae::load_compressor_checkpoint<double>(model_path), rrae::CheckpointError);
}
