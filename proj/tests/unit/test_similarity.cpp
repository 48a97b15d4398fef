#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "lexemb/error.hpp"
#include "lexemb/random.hpp"
#include "lexemb/similarity.hpp"
#include "oracles.hpp"

using namespace lexemb;

namespace {

/// Counting ranks, then the correlation of the ranks from integer moments
/// accumulated over all pairs (i, j): sum (a_i - a_j)(b_i - b_j) / 2 equals
/// n * sum ab - sum a * sum b.
double reference_spearman(const std::vector<double>& x, const std::vector<double>& y) {
    const auto rx = oracle::fractional_ranks(x), ry = oracle::fractional_ranks(y);
    __int128 cxy = 0, cxx = 0, cyy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            const auto da = static_cast<__int128>(2 * rx[i]) - static_cast<__int128>(2 * rx[j]);
            const auto db = static_cast<__int128>(2 * ry[i]) - static_cast<__int128>(2 * ry[j]);
            cxy += da * db;
            cxx += da * da;
            cyy += db * db;
        }
    }
    const double r = static_cast<double>(cxy) / std::sqrt(static_cast<double>(cxx) * static_cast<double>(cyy));
    return std::clamp(r, -1.0, 1.0);
}

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

}  // namespace

TEST_CASE("cosine examples") {
    CHECK(cosine(vec({1, 2, 3}), vec({1, 2, 3})) == doctest::Approx(1.0));
    CHECK(cosine(vec({1, 0}), vec({0, 1})) == 0.0);
    CHECK(cosine(vec({1, 2, 3}), vec({-1, -2, -3})) == doctest::Approx(-1.0));
    CHECK(cosine(vec({0, 0}), vec({1, 1})) == 0.0);
    CHECK_THROWS_AS(cosine(vec({0, 0}), vec({0, 0})), Error);
}

TEST_CASE("spearman examples") {
    const std::vector<double> xs{1, 2, 3, 4};
    CHECK(spearman(xs, std::vector<double>{2, 4, 8, 16}) == doctest::Approx(1.0));
    CHECK(spearman(xs, std::vector<double>{4, 3, 2, 1}) == doctest::Approx(-1.0));
    CHECK(spearman(xs, std::vector<double>{1, 3, 2, 4}) == 0.8);
    CHECK_THROWS_AS(spearman(xs, std::vector<double>{5, 5, 5, 5}), Error);
    CHECK_THROWS_AS(spearman(std::vector<double>{1}, std::vector<double>{2}), Error);
}

TEST_CASE("fractional ranks average ties") {
    const std::vector<double> x{10, 20, 20, 5, 20};
    CHECK(fractional_ranks(x) == std::vector<double>{2, 4, 4, 1, 4});
}

TEST_CASE("spearman agrees with an independent rank-moment reference") {
    Rng rng(77);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng.below(60);
        std::vector<double> x(n), y(n);
        const bool ties = trial % 2 == 0;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = ties ? static_cast<double>(rng.below(5)) : rng.normal();
            y[i] = ties ? static_cast<double>(rng.below(4)) : rng.normal();
        }
        x[0] = 0.0, x[1] = 1.0, y[0] = 0.0, y[1] = 1.0;  // never constant
        CHECK(spearman(x, y) == reference_spearman(x, y));
        CHECK(fractional_ranks(x) == oracle::fractional_ranks(x));
    }
}

TEST_CASE("spearman properties") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(30), y(30), ey(30), ay(30);
        for (std::size_t i = 0; i < 30; ++i) {
            x[i] = rng.normal();
            y[i] = rng.normal();
            ey[i] = std::exp(y[i]);
            ay[i] = 3.0 * y[i] + 7.0;
        }
        const double rho = spearman(x, y);
        CHECK(spearman(x, ey) == doctest::Approx(rho).epsilon(1e-12));
        CHECK(spearman(x, ay) == doctest::Approx(rho).epsilon(1e-12));
        CHECK(spearman(y, x) == rho);
        CHECK(rho >= -1.0);
        CHECK(rho <= 1.0);
    }
}

TEST_CASE("spearman against permuted gold averages to zero") {
    Rng rng(2);
    const std::size_t n = 999;
    std::vector<double> gold(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) {
        gold[i] = std::round(rng.uniform(0, 10) * 10) / 10;  // ties as in real benchmarks
        pred[i] = gold[i] + rng.normal();
    }
    double mean = 0.0;
    for (int k = 0; k < 1000; ++k) {
        rng.shuffle(gold);
        mean += spearman(pred, gold);
    }
    CHECK(std::abs(mean / 1000) < 0.05);
}

TEST_CASE("evaluate_similarity: ranks, coverage, scale invariance") {
    EmbeddingMatrix e;
    for (auto w : {"Dog", "cat", "car", "truck", "zero"}) e.vocab.add(w);
    e.vectors.resize(5, 2);
    // angles chosen so cosine to "dog" decreases along the list
    e.vectors << 1, 0, 0.9, 0.1, 0.5, 0.5, -0.2, 1, 0, 0;
    PairDataset d{"toy",
                  {{"dog", "cat", 9}, {"dog", "car", 5}, {"dog", "truck", 1}, {"dog", "ghost", 3}, {"zero", "zero", 1}}};
    auto r = evaluate_similarity(e, d);
    CHECK(r.rho == doctest::Approx(1.0));
    CHECK(r.n_scored == 3);
    CHECK(r.coverage == doctest::Approx(0.6));

    EmbeddingMatrix scaled = e;
    scaled.vectors *= 17.5;
    auto r2 = evaluate_similarity(scaled, d);
    CHECK(r2.rho == doctest::Approx(r.rho).epsilon(1e-12));
    CHECK(r2.coverage == r.coverage);

    PairDataset tiny{"tiny", {{"dog", "cat", 1}, {"x", "y", 2}}};
    CHECK_THROWS_AS(evaluate_similarity(e, tiny), Error);
}

TEST_CASE("pair dataset reader") {
    std::ifstream in(LEXEMB_FIXTURES "/toy_pairs.tsv");
    REQUIRE(in);
    auto d = read_pair_dataset(in, "toy_pairs");
    CHECK(d.pairs.size() == 8);
    CHECK(d.pairs[0].gold == 8.5);

    std::istringstream dup("a\tb\t1\nB\tA\t2\n");
    try {
        read_pair_dataset(dup, "dup.tsv");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    std::istringstream bad("a\tb\tnan\n");
    CHECK_THROWS_AS(read_pair_dataset(bad, "bad"), ParseError);
    std::istringstream cols("a\tb\n");
    CHECK_THROWS_AS(read_pair_dataset(cols, "cols"), ParseError);
}
