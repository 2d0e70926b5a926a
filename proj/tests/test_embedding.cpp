#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <span>

#include "rrae/embedding.hpp"
#include "support/toy.hpp"

using rrae::EmbeddingTable;
using rrae::Matrix;

namespace {

// Independent oracle: per-word cosine loop over the raw (unnormalized) table.
std::pair<std::size_t, double> brute_force_match(std::span<const double> output,
                                                 const EmbeddingTable<double>& table) {
    double out_norm = 0.0;
    for (double x : output) out_norm += x * x;
    out_norm = std::sqrt(out_norm);
    std::size_t best = 0;
    double best_cos = -2.0;
    for (std::size_t w = 0; w < table.vocab(); ++w) {
        const double* row = table.vec(w);
        double dot = 0.0, norm = 0.0;
        for (std::size_t j = 0; j < table.dim(); ++j) {
            dot += output[j] * row[j];
            norm += row[j] * row[j];
        }
        const double cosine = dot / (out_norm * std::sqrt(norm));
        if (cosine > best_cos) {
            best_cos = cosine;
            best = w;
        }
    }
    return {best, best_cos};
}

std::string write_fixture_table(const testsupport::TempDir& dir) {
    const std::string path = dir.file("tiny.emb");
    std::ofstream out(path);
    out << "3 4\n";
    out << "alpha 1 0 0 0\n";
    out << "beta 0 1 0 0\n";
    out << "gamma 0 0 1 0.5\n";
    return path;
}

} // namespace

TEST_CASE("text fixture loads with the declared shape") {
    testsupport::TempDir dir("emb_fixture");
    auto table = rrae::load_embeddings_text<double>(write_fixture_table(dir));
    REQUIRE(table.vocab() == 3);
    REQUIRE(table.dim() == 4);
    REQUIRE(table.word(0) == "alpha");
    REQUIRE(table.vec(2)[3] == 0.5);
    REQUIRE(table.lookup("beta").value() == 1);
    REQUIRE_FALSE(table.lookup("delta").has_value());
}

TEST_CASE("duplicate token is rejected by name") {
    testsupport::TempDir dir("emb_dup");
    const std::string path = dir.file("dup.emb");
    {
        std::ofstream out(path);
        out << "2 2\n";
        out << "same 1 0\n";
        out << "same 0 1\n";
    }
    try {
        rrae::load_embeddings_text<double>(path);
        FAIL("expected ValidationError");
    } catch (const rrae::ValidationError& e) {
        REQUIRE(std::string(e.what()).find("same") != std::string::npos);
    }
}

TEST_CASE("malformed line reports its line number") {
    testsupport::TempDir dir("emb_bad");
    const std::string path = dir.file("bad.emb");
    {
        std::ofstream out(path);
        out << "2 3\n";
        out << "good 1 2 3\n";
        out << "short 1 2\n";
    }
    try {
        rrae::load_embeddings_text<double>(path);
        FAIL("expected ParseError");
    } catch (const rrae::ParseError& e) {
        REQUIRE(std::string(e.what()).find(":3") != std::string::npos);
    }
}

TEST_CASE("declared count must match the vector lines") {
    testsupport::TempDir dir("emb_count");
    const std::string path = dir.file("count.emb");
    {
        std::ofstream out(path);
        out << "3 2\n";
        out << "a 1 0\n";
        out << "b 0 1\n";
    }
    REQUIRE_THROWS_AS(rrae::load_embeddings_text<double>(path), rrae::ValidationError);
}

TEST_CASE("text save/load round trip is the identity") {
    testsupport::TempDir dir("emb_rt");
    auto table = rrae::make_separated_table<double>(12, 6, 21);
    const std::string path = dir.file("rt.emb");
    table.save_text(path);
    auto loaded = rrae::load_embeddings<double>(path);
    REQUIRE(loaded.words() == table.words());
    REQUIRE(loaded.vectors().data == table.vectors().data);
}

TEST_CASE("binary mirror round trips exactly at float32") {
    testsupport::TempDir dir("emb_bin");
    auto table = rrae::make_separated_table<float>(9, 5, 33);
    const std::string path = dir.file("rt.embb");
    table.save_binary(path);
    auto loaded = rrae::load_embeddings<float>(path);
    REQUIRE(loaded.words() == table.words());
    REQUIRE(loaded.vectors().data == table.vectors().data);
    REQUIRE(loaded.vocab_hash() == table.vocab_hash());
}

TEST_CASE("special vectors extend the table deterministically") {
    auto table = rrae::make_separated_table<double>(40, 16, 5);
    const std::size_t before = table.vocab();
    table.add_special_vectors({rrae::kEosToken}, 77);
    REQUIRE(table.vocab() == before + 1);
    REQUIRE(table.eos_id() == before);

    auto again = rrae::make_separated_table<double>(40, 16, 5);
    again.add_special_vectors({rrae::kEosToken}, 77);
    REQUIRE(again.vectors().data == table.vectors().data);

    auto other = rrae::make_separated_table<double>(40, 16, 5);
    other.add_special_vectors({rrae::kEosToken}, 78);
    REQUIRE(other.vec(before)[0] != table.vec(before)[0]);
}

TEST_CASE("special vector statistics track the table") {
    // dim >= 100 so the 3-standard-error bands are meaningful.
    auto table = rrae::make_separated_table<double>(60, 128, 9);
    double table_mean = 0.0;
    for (double x : table.vectors().data) table_mean += x;
    table_mean /= static_cast<double>(table.vectors().size());
    double table_var = 0.0;
    for (double x : table.vectors().data) table_var += (x - table_mean) * (x - table_mean);
    table_var /= static_cast<double>(table.vectors().size());
    const double table_sd = std::sqrt(table_var);

    table.add_special_vectors({"SPECIAL"}, 123);
    const double* sv = table.vec(table.vocab() - 1);
    double mean = 0.0;
    for (std::size_t j = 0; j < table.dim(); ++j) mean += sv[j];
    mean /= static_cast<double>(table.dim());
    double var = 0.0;
    for (std::size_t j = 0; j < table.dim(); ++j) var += (sv[j] - mean) * (sv[j] - mean);
    var /= static_cast<double>(table.dim());

    const double se_mean = table_sd / std::sqrt(static_cast<double>(table.dim()));
    REQUIRE(std::abs(mean - table_mean) <= 3.0 * se_mean);
    // Sample SD concentrates around the population SD at roughly sd/sqrt(2 dim).
    const double se_sd = table_sd / std::sqrt(2.0 * static_cast<double>(table.dim()));
    REQUIRE(std::abs(std::sqrt(var) - table_sd) <= 3.0 * se_sd);
}

TEST_CASE("special token collision is rejected") {
    auto table = rrae::make_separated_table<double>(5, 4, 2);
    REQUIRE_THROWS_AS(table.add_special_vectors({"w2"}, 1), rrae::ValidationError);
}

TEST_CASE("match_batch returns the exact word for its own vector") {
    auto table = rrae::make_separated_table<double>(20, 8, 3);
    Matrix<double> outputs(1, 8);
    for (std::size_t j = 0; j < 8; ++j) outputs(0, j) = table.vec(7)[j];
    auto results = rrae::match_batch(outputs, table);
    REQUIRE(results[0].word_id == 7);
    REQUIRE(results[0].similarity == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("negated vector in a single-word table has similarity -1") {
    Matrix<double> vec(1, 3);
    vec(0, 0) = 1; vec(0, 1) = 2; vec(0, 2) = -1;
    EmbeddingTable<double> table({"only"}, vec);
    Matrix<double> outputs(1, 3);
    outputs(0, 0) = -1; outputs(0, 1) = -2; outputs(0, 2) = 1;
    auto results = rrae::match_batch(outputs, table);
    REQUIRE(results[0].word_id == 0);
    REQUIRE(results[0].similarity == Catch::Approx(-1.0).margin(1e-12));
}

TEST_CASE("match_batch agrees with the brute-force oracle") {
    auto table = testsupport::toy_table(50, 8, 4);
    rrae::Rng rng(55);
    Matrix<double> outputs(64, 8);
    for (auto& x : outputs.data) x = rng.uniform(-1.5, 1.5);
    auto results = rrae::match_batch(outputs, table);
    for (std::size_t i = 0; i < outputs.rows; ++i) {
        auto [want_id, want_cos] = brute_force_match(
            std::span<const double>(outputs.row(i), outputs.cols), table);
        REQUIRE(results[i].word_id == want_id);
        REQUIRE(std::abs(results[i].similarity - want_cos) <= 1e-6);
    }
}

TEST_CASE("match_batch is scale invariant") {
    auto table = testsupport::toy_table(30, 6, 8);
    rrae::Rng rng(66);
    Matrix<double> outputs(16, 6);
    for (auto& x : outputs.data) x = rng.uniform(-1, 1);
    auto base = rrae::match_batch(outputs, table);
    for (double c : {0.01, 0.5, 3.0, 1000.0}) {
        Matrix<double> scaled = outputs;
        for (auto& x : scaled.data) x *= c;
        auto results = rrae::match_batch(scaled, table);
        for (std::size_t i = 0; i < results.size(); ++i) {
            REQUIRE(results[i].word_id == base[i].word_id);
        }
    }
}

TEST_CASE("every vocabulary vector matches itself") {
    auto table = testsupport::toy_table(40, 10, 12);
    Matrix<double> outputs(table.vocab(), table.dim());
    for (std::size_t w = 0; w < table.vocab(); ++w) {
        for (std::size_t j = 0; j < table.dim(); ++j) outputs(w, j) = table.vec(w)[j];
    }
    auto results = rrae::match_batch(outputs, table);
    for (std::size_t w = 0; w < table.vocab(); ++w) {
        REQUIRE(results[w].word_id == w);
        REQUIRE(results[w].similarity == Catch::Approx(1.0).margin(1e-6));
    }
}

TEST_CASE("zero output row raises a match error with the row index") {
    auto table = rrae::make_separated_table<double>(4, 4, 1);
    Matrix<double> outputs(2, 4);
    outputs(0, 0) = 1.0; // row 1 stays zero
    try {
        rrae::match_batch(outputs, table);
        FAIL("expected MatchError");
    } catch (const rrae::MatchError& e) {
        REQUIRE(std::string(e.what()).find("row 1") != std::string::npos);
    }
}

TEST_CASE("dimension mismatch raises a shape error") {
    auto table = rrae::make_separated_table<double>(4, 4, 1);
    Matrix<double> outputs(1, 3);
    outputs(0, 0) = 1.0;
    REQUIRE_THROWS_AS(rrae::match_batch(outputs, table), rrae::ShapeError);
}

TEST_CASE("is_match flips exactly once along the segment between two words") {
    // Two isolated words: the cosine cells split the segment at one point.
    Matrix<double> vecs(2, 4);
    vecs(0, 0) = 1.0; vecs(0, 1) = 0.2; vecs(0, 2) = 0.0; vecs(0, 3) = 0.0;
    vecs(1, 0) = 0.0; vecs(1, 1) = 0.3; vecs(1, 2) = 1.0; vecs(1, 3) = 0.1;
    EmbeddingTable<double> table({"first", "second"}, vecs);

    int flips = 0;
    bool prev = true;
    for (int k = 0; k <= 200; ++k) {
        const double t = static_cast<double>(k) / 200.0;
        std::vector<double> probe(4);
        for (std::size_t j = 0; j < 4; ++j) {
            probe[j] = (1.0 - t) * vecs(0, j) + t * vecs(1, j);
        }
        const bool matched = rrae::is_match(std::span<const double>(probe), 0, table);
        auto [bf_id, bf_cos] = brute_force_match(std::span<const double>(probe), table);
        REQUIRE(matched == (bf_id == 0));
        if (k > 0 && matched != prev) ++flips;
        prev = matched;
    }
    REQUIRE(flips == 1);
}

TEST_CASE("brute-force equivalence holds up to V = 1000") {
    rrae::Rng rng(91);
    for (int round = 0; round < 5; ++round) {
        const std::size_t v = 50 + rng.next_below(951);
        const std::size_t dim = 4 + rng.next_below(29);
        Matrix<double> vecs(v, dim);
        for (auto& x : vecs.data) x = rng.gaussian();
        std::vector<std::string> words;
        words.reserve(v);
        for (std::size_t i = 0; i < v; ++i) words.push_back("t" + std::to_string(i));
        EmbeddingTable<double> table(std::move(words), std::move(vecs));

        Matrix<double> outputs(20, dim);
        for (auto& x : outputs.data) x = rng.gaussian();
        auto results = rrae::match_batch(outputs, table);
        for (std::size_t i = 0; i < outputs.rows; ++i) {
            auto [want_id, want_cos] = brute_force_match(
                std::span<const double>(outputs.row(i), outputs.cols), table);
            REQUIRE(results[i].word_id == want_id);
            REQUIRE(std::abs(results[i].similarity - want_cos) <= 1e-6);
        }
    }
}

TEST_CASE("separated table honors the cosine bound") {
    auto table = rrae::make_separated_table<double>(50, 8, 99, 0.5);
    for (std::size_t a = 0; a < table.vocab(); ++a) {
        for (std::size_t b = a + 1; b < table.vocab(); ++b) {
            double dot = 0.0;
            for (std::size_t j = 0; j < table.dim(); ++j) dot += table.vec(a)[j] * table.vec(b)[j];
            REQUIRE(dot <= 0.5 + 1e-12);
        }
    }
}
