#include <catch2/catch_amalgamated.hpp>

#include "rrae/matrix.hpp"
#include "rrae/rng.hpp"

using rrae::Matrix;
using rrae::matmul;

namespace {

// Independent oracle: the naive triple loop in i-j-k order.
Matrix<double> matmul_oracle(const Matrix<double>& a, const Matrix<double>& b) {
    Matrix<double> c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t j = 0; j < b.cols; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) acc += a(i, k) * b(k, j);
            c(i, j) = acc;
        }
    }
    return c;
}

Matrix<double> random_matrix(std::size_t r, std::size_t c, rrae::Rng& rng) {
    Matrix<double> m(r, c);
    for (auto& x : m.data) x = rng.uniform(-2.0, 2.0);
    return m;
}

} // namespace

TEST_CASE("matmul identity") {
    rrae::Rng rng(11);
    auto m = random_matrix(3, 5, rng);
    auto out = matmul(Matrix<double>::identity(3), m);
    REQUIRE(out.rows == 3);
    REQUIRE(out.cols == 5);
    for (std::size_t i = 0; i < m.size(); ++i) REQUIRE(out.data[i] == m.data[i]);
}

TEST_CASE("matmul hand case") {
    Matrix<double> a(2, 2);
    a(0, 0) = 1; a(0, 1) = 2;
    a(1, 0) = 3; a(1, 1) = 4;
    Matrix<double> b(2, 1);
    b(0, 0) = 5;
    b(1, 0) = 6;
    auto c = matmul(a, b);
    REQUIRE(c.rows == 2);
    REQUIRE(c.cols == 1);
    REQUIRE(c(0, 0) == 17.0);
    REQUIRE(c(1, 0) == 39.0);
}

TEST_CASE("matmul zero annihilates") {
    rrae::Rng rng(12);
    Matrix<double> zero(2, 3);
    auto m = random_matrix(3, 4, rng);
    auto c = matmul(zero, m);
    REQUIRE(c.rows == 2);
    REQUIRE(c.cols == 4);
    for (double x : c.data) REQUIRE(x == 0.0);
}

TEST_CASE("matmul shape error names both shapes") {
    Matrix<double> a(2, 3), b(4, 2);
    try {
        matmul(a, b);
        FAIL("expected ShapeError");
    } catch (const rrae::ShapeError& e) {
        const std::string msg = e.what();
        REQUIRE(msg.find("2x3") != std::string::npos);
        REQUIRE(msg.find("4x2") != std::string::npos);
    }
}

TEST_CASE("matmul agrees with the naive oracle") {
    rrae::Rng rng(13);
    for (int round = 0; round < 30; ++round) {
        const std::size_t n = 1 + rng.next_below(32);
        const std::size_t k = 1 + rng.next_below(32);
        const std::size_t m = 1 + rng.next_below(32);
        auto a = random_matrix(n, k, rng);
        auto b = random_matrix(k, m, rng);
        auto got = matmul(a, b);
        auto want = matmul_oracle(a, b);
        for (std::size_t i = 0; i < got.size(); ++i) {
            const double diff = std::abs(got.data[i] - want.data[i]);
            const double scale = std::max(1.0, std::abs(want.data[i]));
            REQUIRE(diff / scale <= 1e-12);
        }
    }
}

TEST_CASE("transpose") {
    rrae::Rng rng(14);
    auto m = random_matrix(4, 7, rng);
    auto t = rrae::transpose(m);
    REQUIRE(t.rows == 7);
    REQUIRE(t.cols == 4);
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) REQUIRE(t(j, i) == m(i, j));
    }
}
