#include <cmath>
#include <numeric>
#include <sstream>

#include "brain_fixtures.hpp"
#include "doctest.h"
#include "lexemb/error.hpp"
#include "oracles.hpp"

using namespace lexemb;

namespace {

FmriDataset tiny_dataset() {
    FmriDataset d;
    d.participant_id = "P1";
    d.voxel_count = 3;
    d.grid_dims = {3, 1, 1};
    d.voxel_size = "3x3x6 mm";
    d.words = {"apple", "hammer", "horse"};
    RowMatrix a(2, 3), b(2, 3), c(2, 3);
    a << 1, 2, 3, 3, 2, 1;
    b << 0, 0, 0, 2, 2, 2;
    c << 5, -1, 0.25, 5, -1, 0.75;
    d.presentations = {a, b, c};
    return d;
}

/// Direct transcription of the loss: elementwise Huber, explicit pair loop,
/// squared norms.
double reference_loss(const RowMatrix& pred, const RowMatrix& target, const DecoderModel& m, const DecoderParams& p) {
    const auto b = pred.rows(), v = pred.cols();
    double huber = 0.0;
    for (Eigen::Index i = 0; i < b; ++i)
        for (Eigen::Index k = 0; k < v; ++k) {
            const double r = pred(i, k) - target(i, k);
            huber += std::abs(r) <= p.huber_delta ? 0.5 * r * r : p.huber_delta * (std::abs(r) - 0.5 * p.huber_delta);
        }
    huber /= static_cast<double>(b * v);
    double pair = 0.0;
    int pairs = 0;
    for (Eigen::Index i = 0; i < b; ++i)
        for (Eigen::Index j = i + 1; j < b; ++j) {
            double s = 0.0;
            for (Eigen::Index k = 0; k < v; ++k) {
                const double diff = (pred(i, k) - pred(j, k)) - (target(i, k) - target(j, k));
                s += diff * diff;
            }
            pair += s / static_cast<double>(v);
            ++pairs;
        }
    if (pairs) pair /= pairs;
    double l2 = 0.0;
    for (Eigen::Index i = 0; i < m.weights.size(); ++i) l2 += m.weights.data()[i] * m.weights.data()[i];
    for (Eigen::Index i = 0; i < m.bias.size(); ++i) l2 += m.bias[i] * m.bias[i];
    return huber + pair + p.l2_weight * l2;
}

RowMatrix random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
    RowMatrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
    return m;
}

}  // namespace

TEST_CASE("representative images") {
    auto d = tiny_dataset();
    const RowMatrix reps = representative_images(d);
    REQUIRE(reps.rows() == 3);
    CHECK(reps.colwise().sum().cwiseAbs().maxCoeff() < 1e-10);
    // apple mean (2,2,2), hammer (1,1,1), horse (5,-1,0.5); grand mean (8/3, 2/3, 7/6)
    CHECK(reps(0, 0) == doctest::Approx(2.0 - 8.0 / 3.0));
    CHECK(reps(2, 2) == doctest::Approx(0.5 - 7.0 / 6.0));

    FmriDataset same = d;
    same.words = {"a", "b"};
    same.presentations = {RowMatrix::Constant(3, 3, 4.0), RowMatrix::Constant(2, 3, 4.0)};
    CHECK(representative_images(same).isZero(0.0));

    FmriDataset single = d;
    for (auto& p : single.presentations) p = p.topRows(1).eval();
    const RowMatrix r1 = representative_images(single);
    CHECK(r1(1, 0) == doctest::Approx(0.0 - (1.0 + 0.0 + 5.0) / 3.0));

    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        auto s = fixture::linear_fmri(7, 3, 11, 1 + rng.below(4), 0.5, rng.next());
        CHECK(representative_images(s.data).colwise().sum().cwiseAbs().maxCoeff() < 1e-10);
    }

    FmriDataset empty = d;
    empty.presentations[1] = RowMatrix(0, 3);
    CHECK_THROWS_AS(representative_images(empty), Error);
}

TEST_CASE("voxel stability") {
    // voxel 0 repeats the same profile, voxel 1 is noise, voxel 2 is constant
    Rng rng(11);
    FmriDataset d;
    d.voxel_count = 3;
    for (int w = 0; w < 20; ++w) {
        d.words.push_back("w" + std::to_string(w));
        RowMatrix block(4, 3);
        for (int r = 0; r < 4; ++r) {
            block(r, 0) = w * 0.5;
            block(r, 1) = rng.normal();
            block(r, 2) = 7.0;
        }
        d.presentations.push_back(block);
    }
    std::vector<std::size_t> train(20);
    std::iota(train.begin(), train.end(), std::size_t{0});
    const auto s = voxel_stability(d, train);
    CHECK(s[0] == doctest::Approx(1.0));
    CHECK(s[2] == 0.0);
    CHECK(stable_voxels(d, train, 1) == std::vector<std::size_t>{0});
    CHECK(stable_voxels(d, train, 3).size() == 3);
    CHECK_THROWS_AS(stable_voxels(d, train, 4), Error);

    FmriDataset one = tiny_dataset();
    for (auto& p : one.presentations) p = p.topRows(1).eval();
    CHECK_THROWS_AS(voxel_stability(one, {0, 1, 2}), Error);
    // with one presentation the selection falls back to variance
    const auto picked = select_voxels(one, representative_images(one), {0, 1, 2}, 1);
    CHECK(picked == std::vector<std::size_t>{0});
}

TEST_CASE("i.i.d. noise voxels have stability near zero") {
    Rng rng(5);
    FmriDataset d;
    d.voxel_count = 400;
    for (int w = 0; w < 30; ++w) {
        d.words.push_back("w" + std::to_string(w));
        d.presentations.push_back(random_matrix(rng, 6, 400));
    }
    std::vector<std::size_t> train(30);
    std::iota(train.begin(), train.end(), std::size_t{0});
    const auto s = voxel_stability(d, train);
    const double mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
    CHECK(std::abs(mean) < 0.1);
}

TEST_CASE("stability ties go to the lower index") {
    FmriDataset d;
    d.voxel_count = 4;
    for (int w = 0; w < 5; ++w) {
        d.words.push_back("w" + std::to_string(w));
        d.presentations.push_back(RowMatrix::Constant(3, 4, static_cast<double>(w)));
    }
    CHECK(stable_voxels(d, {0, 1, 2, 3, 4}, 2) == std::vector<std::size_t>{0, 1});
}

TEST_CASE("combined loss matches a direct transcription") {
    DecoderParams p;
    DecoderModel m{RowMatrix::Zero(2, 3), Vector::Zero(3)};
    const RowMatrix t = RowMatrix::Constant(4, 3, 1.5);
    CHECK(combined_loss(t, t, m, p) == 0.0);

    Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        const auto b = static_cast<Eigen::Index>(1 + rng.below(6));
        m.weights = random_matrix(rng, 2, 3);
        m.bias = random_matrix(rng, 3, 1);
        const RowMatrix pred = random_matrix(rng, b, 3, 2.0), target = random_matrix(rng, b, 3, 2.0);
        CHECK(combined_loss(pred, target, m, p) == doctest::Approx(reference_loss(pred, target, m, p)).epsilon(1e-12));
    }

    // single example: no pair term
    const RowMatrix one_pred{{0.5, 0.0, -3.0}}, one_target{{0.0, 0.0, 0.0}};
    m.weights.setZero();
    m.bias.setZero();
    CHECK(combined_loss(one_pred, one_target, m, p) == doctest::Approx((0.125 + 2.5) / 3.0));
}

TEST_CASE("decoder gradient matches central finite differences") {
    Rng rng(21);
    DecoderParams p;
    p.l2_weight = 0.05;
    p.huber_delta = 0.7;
    for (int point = 0; point < 20; ++point) {
        const RowMatrix x = random_matrix(rng, 5, 4);
        const RowMatrix y = random_matrix(rng, 5, 3, 2.0);
        DecoderModel m{random_matrix(rng, 4, 3, 0.5), random_matrix(rng, 3, 1, 0.5)};
        const auto g = decoder_loss_gradient(x, y, m, p);
        auto loss = [&] { return combined_loss(m.predict(x), y, m, p); };
        CHECK(g.loss == doctest::Approx(loss()).epsilon(1e-12));
        for (Eigen::Index i = 0; i < m.weights.size(); ++i) {
            CHECK(oracle::rel_error(g.weights.data()[i], oracle::central_difference(loss, m.weights.data() + i)) <
                  1e-5);
        }
        for (Eigen::Index i = 0; i < m.bias.size(); ++i) {
            CHECK(oracle::rel_error(g.bias[i], oracle::central_difference(loss, m.bias.data() + i)) < 1e-5);
        }
    }
}

TEST_CASE("decoder fits a noiseless linear map") {
    auto s = fixture::linear_fmri(40, 5, 30, 1, 0.0, 4);
    const RowMatrix targets = representative_images(s.data);
    DecoderParams p;
    p.lr = 2.0;
    p.epochs = 3000;
    p.batch_size = 10;
    p.l2_weight = 0.0;
    DecoderReport report;
    auto m = train_decoder(s.emb, s.data.words, targets, p, &report);
    const double rel = (m.predict(s.emb.vectors) - targets).norm() / targets.norm();
    MESSAGE("relative training error " << rel);
    CHECK(rel < 0.05);

    // slower schedule so the trajectory spans many windows before round-off
    p.lr = 0.2;
    p.epochs = 400;
    train_decoder(s.emb, s.data.words, targets, p, &report);
    int worst = 0;
    std::size_t windows = 0;
    for (std::size_t start = 1; start + 10 <= report.epoch_loss.size(); start += 10) {
        if (report.epoch_loss[start + 9] < 1e-12 * report.epoch_loss.front()) break;
        int violations = 0;
        for (std::size_t e = start; e < start + 10; ++e)
            if (report.epoch_loss[e] > report.epoch_loss[e - 1]) ++violations;
        worst = std::max(worst, violations);
        ++windows;
    }
    MESSAGE(windows << " windows, most violations in one " << worst);
    CHECK(windows >= 10);
    CHECK(worst <= 1);
}

TEST_CASE("full-batch descent under the default learning rate never increases the loss") {
    auto s = fixture::linear_fmri(30, 8, 50, 1, 0.0, 6);
    DecoderParams p;
    p.epochs = 200;
    p.batch_size = 30;
    DecoderReport report;
    train_decoder(s.emb, s.data.words, representative_images(s.data), p, &report);
    for (std::size_t e = 1; e < report.epoch_loss.size(); ++e) CHECK(report.epoch_loss[e] <= report.epoch_loss[e - 1]);
}

TEST_CASE("decoder: zero epochs, determinism, missing words") {
    auto s = fixture::linear_fmri(10, 3, 8, 1, 0.0, 2);
    const RowMatrix targets = representative_images(s.data);
    DecoderParams p;
    p.epochs = 0;
    auto m0 = train_decoder(s.emb, s.data.words, targets, p);
    CHECK(m0.weights.isZero(0.0));
    CHECK(m0.bias.isZero(0.0));

    p.epochs = 20;
    p.batch_size = 3;
    auto m1 = train_decoder(s.emb, s.data.words, targets, p);
    auto m2 = train_decoder(s.emb, s.data.words, targets, p);
    CHECK(m1.weights == m2.weights);
    CHECK(m1.bias == m2.bias);

    auto words = s.data.words;
    words[2] = "zebra";
    words[5] = "yak";
    try {
        train_decoder(s.emb, words, targets, p);
        FAIL("expected Error");
    } catch (const Error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("zebra") != std::string::npos);
        CHECK(msg.find("yak") != std::string::npos);
    }
}

TEST_CASE("2v2 decision rule") {
    const Vector o1 = Vector::Unit(3, 0), o2 = Vector::Unit(3, 1);
    CHECK(two_vs_two_correct(o1, o2, o1, o2));
    CHECK_FALSE(two_vs_two_correct(o2, o1, o1, o2));
    CHECK_FALSE(two_vs_two_correct(o1, o1, o1, o1));  // ties are not correct

    Rng rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        Vector p1(4), p2(4), a(4), b(4);
        for (auto* v : {&p1, &p2, &a, &b})
            for (auto& x : *v) x = rng.normal();
        const double s = rng.uniform(0.01, 100.0);
        CHECK(two_vs_two_correct(p1, p2, a, b) == two_vs_two_correct(s * p1, s * p2, a, b));
    }
}

TEST_CASE("2v2 with oracle predictions is perfect") {
    auto s = fixture::linear_fmri(8, 3, 20, 3, 0.3, 9);
    DecoderParams p;
    p.n_stable_voxels = 5;
    FoldPredictor oracle_predict = [](const Fold& f) { return f.test_targets; };
    auto r = two_vs_two(s.data, oracle_predict, p);
    CHECK(r.folds == 28);
    CHECK(r.accuracy == 1.0);

    FoldPredictor wrong_shape = [](const Fold& f) { return RowMatrix(f.test_targets.rows(), 1); };
    CHECK_THROWS_AS(two_vs_two(s.data, wrong_shape, p), Error);

    FmriDataset two = s.data;
    two.words.resize(2);
    two.presentations.resize(2);
    CHECK_THROWS_AS(two_vs_two(two, oracle_predict, p), Error);
}

TEST_CASE("2v2 folds: sampling and worker independence") {
    CHECK(two_vs_two_folds(6, std::nullopt, 1).size() == 15);
    const auto a = two_vs_two_folds(20, 40, 3);
    CHECK(a.size() == 40);
    CHECK(a == two_vs_two_folds(20, 40, 3));
    CHECK(a != two_vs_two_folds(20, 40, 4));
    CHECK(two_vs_two_folds(5, 100, 1).size() == 10);
    CHECK_THROWS_AS(two_vs_two_folds(5, 0, 1), Error);

    auto s = fixture::linear_fmri(9, 3, 12, 2, 1.0, 12);
    DecoderParams p;
    p.epochs = 30;
    p.batch_size = 4;
    p.lr = 0.05;
    const auto r1 = two_vs_two(s.emb, s.data, p, std::nullopt, 1);
    const auto r4 = two_vs_two(s.emb, s.data, p, std::nullopt, 4);
    CHECK(r1.correct == r4.correct);
    CHECK(r1.accuracy >= 0.0);
    CHECK(r1.accuracy <= 1.0);
}

TEST_CASE("k-fold MSE") {
    auto s = fixture::linear_fmri(12, 3, 10, 2, 0.2, 13);
    DecoderParams p;
    p.n_stable_voxels = 10;
    FoldPredictor oracle_predict = [](const Fold& f) { return f.test_targets; };
    CHECK(mse_eval(s.data, oracle_predict, p, 4).mse == 0.0);

    FoldPredictor zero = [](const Fold& f) { return RowMatrix::Zero(f.test_targets.rows(), f.test_targets.cols()).eval(); };
    const RowMatrix reps = representative_images(s.data);
    CHECK(mse_eval(s.data, zero, p, 3).mse == doctest::Approx(reps.squaredNorm() / static_cast<double>(reps.size())));
    CHECK_THROWS_AS(mse_eval(s.data, zero, p, 1), Error);

    auto clean = fixture::linear_fmri(40, 4, 10, 1, 0.0, 14);
    DecoderParams fit;
    fit.lr = 2.0;
    fit.epochs = 3000;
    fit.batch_size = 10;
    fit.l2_weight = 0.0;
    fit.n_stable_voxels = 10;
    const RowMatrix clean_reps = representative_images(clean.data);
    const double variance = clean_reps.squaredNorm() / static_cast<double>(clean_reps.size());
    const double mse = mse_eval(clean.emb, clean.data, fit, 4).mse;
    MESSAGE("noiseless MSE / variance = " << mse / variance);
    CHECK(mse < 1e-3 * variance);
}

TEST_CASE("fMRI binary and TSV files round-trip") {
    auto s = fixture::linear_fmri(4, 2, 5, 3, 0.5, 15);
    s.data.words[1] = "ice cream";

    std::stringstream bin;
    write_fmri_binary(s.data, bin);
    auto back = read_fmri_binary(bin);
    CHECK(back.words == s.data.words);
    CHECK(back.participant_id == s.data.participant_id);
    CHECK(back.grid_dims == s.data.grid_dims);
    CHECK(back.voxel_size == "3x3x6 mm");
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK((back.presentations[i] - s.data.presentations[i].cast<float>().cast<double>()).isZero(0.0));
    }

    std::stringstream tsv;
    write_fmri_tsv(s.data, tsv);
    auto back2 = read_fmri_tsv(tsv);
    CHECK(back2.words == s.data.words);
    for (std::size_t i = 0; i < 4; ++i) CHECK(back2.presentations[i] == s.data.presentations[i]);
    CHECK(back2.grid_dims == s.data.grid_dims);
}

TEST_CASE("fMRI readers reject malformed input") {
    auto s = fixture::linear_fmri(3, 2, 4, 2, 0.0, 16);
    std::stringstream bin;
    write_fmri_binary(s.data, bin);
    std::string bytes = bin.str();
    std::istringstream truncated(bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(read_fmri_binary(truncated), Error);

    std::istringstream wrong_width("a\t0\t1\t2\nb\t0\t1\n");
    try {
        read_fmri_tsv(wrong_width, "f.tsv");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    std::istringstream dup("a\t0\t1\na\t0\t2\n");
    CHECK_THROWS_AS(read_fmri_tsv(dup), ParseError);
    std::istringstream garbage("LXFMRI 1\nvoxel_count\t3\n");
    CHECK_THROWS_AS(read_fmri_binary(garbage), ParseError);
}
