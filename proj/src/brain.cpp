#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <memory>
#include <numeric>
#include <thread>

#include "lexemb/brain.hpp"
#include "lexemb/error.hpp"
#include "lexemb/random.hpp"

namespace lexemb {

// --- preprocessing ---------------------------------------------------------

RowMatrix representative_images(const FmriDataset& d) {
    d.validate();
    const auto n = static_cast<Eigen::Index>(d.n_words());
    RowMatrix reps(n, static_cast<Eigen::Index>(d.voxel_count));
    for (Eigen::Index i = 0; i < n; ++i) reps.row(i) = d.presentations[static_cast<std::size_t>(i)].colwise().mean();
    reps.rowwise() -= reps.colwise().mean();
    return reps;
}

namespace {

void check_training_words(const FmriDataset& d, const std::vector<std::size_t>& training_words) {
    if (training_words.empty()) throw Error("voxel selection needs at least one training word");
    for (auto w : training_words) {
        if (w >= d.n_words()) throw Error("training word index out of range");
    }
}

std::vector<std::size_t> top_n(const std::vector<double>& score, std::size_t n) {
    if (n > score.size()) {
        throw Error("cannot select " + std::to_string(n) + " voxels out of " + std::to_string(score.size()));
    }
    std::vector<std::size_t> idx(score.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    idx.resize(n);
    return idx;
}

}  // namespace

std::vector<double> voxel_stability(const FmriDataset& d, const std::vector<std::size_t>& training_words) {
    d.validate();
    check_training_words(d, training_words);
    std::size_t reps = d.presentations[training_words.front()].rows();
    for (auto w : training_words) reps = std::min<std::size_t>(reps, d.presentations[w].rows());
    if (reps < 2) throw Error("stability needs at least 2 presentations per training word");

    const auto t = static_cast<Eigen::Index>(training_words.size());
    const auto v = static_cast<Eigen::Index>(d.voxel_count);
    // z[a]: presentation a over training words, columns centered and scaled to unit norm
    std::vector<RowMatrix> z(reps, RowMatrix(t, v));
    for (std::size_t a = 0; a < reps; ++a) {
        for (Eigen::Index w = 0; w < t; ++w) {
            z[a].row(w) = d.presentations[training_words[static_cast<std::size_t>(w)]].row(static_cast<Eigen::Index>(a));
        }
        z[a].rowwise() -= z[a].colwise().mean();
        for (Eigen::Index c = 0; c < v; ++c) {
            const double norm = z[a].col(c).norm();
            if (norm > 0.0) z[a].col(c) /= norm;
            else z[a].col(c).setZero();
        }
    }
    Eigen::RowVectorXd total = Eigen::RowVectorXd::Zero(v);
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < reps; ++a) {
        for (std::size_t b = a + 1; b < reps; ++b) {
            total += z[a].cwiseProduct(z[b]).colwise().sum();
            ++pairs;
        }
    }
    total /= static_cast<double>(pairs);
    return {total.data(), total.data() + total.size()};
}

std::vector<std::size_t> stable_voxels(const FmriDataset& d, const std::vector<std::size_t>& training_words,
                                       std::size_t n) {
    return top_n(voxel_stability(d, training_words), n);
}

std::vector<std::size_t> top_variance_voxels(const RowMatrix& representatives,
                                             const std::vector<std::size_t>& training_words, std::size_t n) {
    if (training_words.empty()) throw Error("voxel selection needs at least one training word");
    RowMatrix rows(static_cast<Eigen::Index>(training_words.size()), representatives.cols());
    for (std::size_t i = 0; i < training_words.size(); ++i) {
        rows.row(static_cast<Eigen::Index>(i)) = representatives.row(static_cast<Eigen::Index>(training_words[i]));
    }
    rows.rowwise() -= rows.colwise().mean();
    const Eigen::RowVectorXd var = rows.colwise().squaredNorm();
    return top_n({var.data(), var.data() + var.size()}, n);
}

std::vector<std::size_t> select_voxels(const FmriDataset& d, const RowMatrix& representatives,
                                       const std::vector<std::size_t>& training_words, std::size_t n) {
    std::size_t reps = d.presentations.empty() ? 0 : d.presentations[training_words.at(0)].rows();
    for (auto w : training_words) reps = std::min<std::size_t>(reps, d.presentations.at(w).rows());
    if (reps >= 2) return stable_voxels(d, training_words, n);
    return top_variance_voxels(representatives, training_words, n);
}

// --- decoder ---------------------------------------------------------------

void DecoderParams::validate() const {
    if (epochs > 0 && batch_size < 1) throw Error("decoder batch size must be positive");
    if (!(lr > 0.0)) throw Error("decoder learning rate must be positive");
    if (!(huber_delta > 0.0)) throw Error("huber delta must be positive");
    if (!(l2_weight >= 0.0)) throw Error("l2 weight must be nonnegative");
    if (n_stable_voxels < 1) throw Error("n_stable_voxels must be positive");
}

RowMatrix DecoderModel::predict(const Eigen::Ref<const RowMatrix>& x) const {
    RowMatrix out = x * weights;
    out.rowwise() += bias.transpose();
    return out;
}

namespace {

double huber(double r, double delta) {
    const double a = std::abs(r);
    return a <= delta ? 0.5 * r * r : delta * (a - 0.5 * delta);
}

/// Loss of residuals r = pred - target, and optionally its derivative in r.
double residual_loss(const RowMatrix& r, const DecoderModel& m, const DecoderParams& p, RowMatrix* grad) {
    const auto b = static_cast<double>(r.rows());
    const auto v = static_cast<double>(r.cols());
    double loss = 0.0;
    for (Eigen::Index k = 0; k < r.size(); ++k) loss += huber(r.data()[k], p.huber_delta);
    loss /= b * v;
    if (grad) *grad = r.unaryExpr([&](double x) { return std::clamp(x, -p.huber_delta, p.huber_delta); }) / (b * v);

    if (r.rows() >= 2) {
        const double pairs = b * (b - 1.0) / 2.0;
        const Eigen::RowVectorXd sum = r.colwise().sum();
        // sum_{i<j} |r_i - r_j|^2 = B sum_i |r_i|^2 - |sum_i r_i|^2
        loss += (b * r.squaredNorm() - sum.squaredNorm()) / (pairs * v);
        if (grad) {
            RowMatrix g = b * r;
            g.rowwise() -= sum;
            *grad += (2.0 / (pairs * v)) * g;
        }
    }
    loss += p.l2_weight * (m.weights.squaredNorm() + m.bias.squaredNorm());
    return loss;
}

}  // namespace

double combined_loss(const RowMatrix& pred, const RowMatrix& target, const DecoderModel& m, const DecoderParams& p) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols()) throw Error("combined_loss: shape mismatch");
    return residual_loss(pred - target, m, p, nullptr);
}

DecoderGradient decoder_loss_gradient(const RowMatrix& x, const RowMatrix& target, const DecoderModel& m,
                                      const DecoderParams& p) {
    if (x.rows() != target.rows() || x.cols() != m.weights.rows() || target.cols() != m.weights.cols()) {
        throw Error("decoder gradient: shape mismatch");
    }
    DecoderGradient g;
    RowMatrix d_pred;
    g.loss = residual_loss(m.predict(x) - target, m, p, &d_pred);
    g.weights = x.transpose() * d_pred + 2.0 * p.l2_weight * m.weights;
    g.bias = d_pred.colwise().sum().transpose() + 2.0 * p.l2_weight * m.bias;
    return g;
}

DecoderModel train_decoder(const RowMatrix& x, const RowMatrix& targets, const DecoderParams& p,
                           DecoderReport* report) {
    p.validate();
    if (x.rows() != targets.rows()) throw Error("decoder: embedding and target row counts differ");
    if (x.rows() == 0) throw Error("decoder: no training examples");
    DecoderModel m;
    m.weights = RowMatrix::Zero(x.cols(), targets.cols());
    m.bias = Vector::Zero(targets.cols());
    if (report) *report = {};

    Rng rng(p.seed);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(x.rows()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    RowMatrix bx, by;
    for (std::size_t epoch = 0; epoch < p.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += p.batch_size) {
            const std::size_t end = std::min(order.size(), start + p.batch_size);
            const auto rows = static_cast<Eigen::Index>(end - start);
            bx.resize(rows, x.cols());
            by.resize(rows, targets.cols());
            for (Eigen::Index k = 0; k < rows; ++k) {
                bx.row(k) = x.row(order[start + static_cast<std::size_t>(k)]);
                by.row(k) = targets.row(order[start + static_cast<std::size_t>(k)]);
            }
            const auto g = decoder_loss_gradient(bx, by, m, p);
            if (!std::isfinite(g.loss)) throw Error("decoder training diverged (non-finite loss)");
            m.weights -= p.lr * g.weights;
            m.bias -= p.lr * g.bias;
            epoch_loss += g.loss * static_cast<double>(rows);
        }
        if (report) report->epoch_loss.push_back(epoch_loss / static_cast<double>(order.size()));
    }
    return m;
}

RowMatrix embedding_rows(const EmbeddingMatrix& e, const std::vector<std::string>& words) {
    RowMatrix x(static_cast<Eigen::Index>(words.size()), e.vectors.cols());
    std::string missing;
    std::size_t n_missing = 0;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (auto r = e.row_of(words[i])) {
            x.row(static_cast<Eigen::Index>(i)) = e.vectors.row(*r);
        } else {
            missing += (n_missing++ ? ", " : "") + words[i];
        }
    }
    if (n_missing) throw Error(std::to_string(n_missing) + " word(s) missing from the embeddings: " + missing);
    return x;
}

DecoderModel train_decoder(const EmbeddingMatrix& e, const std::vector<std::string>& words,
                           const RowMatrix& targets, const DecoderParams& p, DecoderReport* report) {
    return train_decoder(embedding_rows(e, words), targets, p, report);
}

// --- evaluation ------------------------------------------------------------

namespace {

double safe_cosine(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
    const double na = a.norm(), nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return a.dot(b) / (na * nb);
}

/// Runs body(i) for i in [0, n) on up to `workers` threads; rethrows the
/// first failure by index.
template <class Body>
void parallel_for(std::size_t n, std::size_t workers, Body body) {
    std::vector<std::exception_ptr> errors(n);
    auto guarded = [&](std::size_t i) {
        try {
            body(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) guarded(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) guarded(i);
            });
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

Fold make_fold(const FmriDataset& d, const RowMatrix& reps, std::vector<std::size_t> test, std::size_t n_voxels,
               std::uint64_t seed) {
    Fold f;
    f.test = std::move(test);
    for (std::size_t w = 0; w < d.n_words(); ++w) {
        if (std::find(f.test.begin(), f.test.end(), w) == f.test.end()) f.train.push_back(w);
    }
    f.voxels = select_voxels(d, reps, f.train, n_voxels);
    auto gather = [&](const std::vector<std::size_t>& words) {
        RowMatrix out(static_cast<Eigen::Index>(words.size()), static_cast<Eigen::Index>(f.voxels.size()));
        for (std::size_t i = 0; i < words.size(); ++i) {
            for (std::size_t v = 0; v < f.voxels.size(); ++v) {
                out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(v)) =
                    reps(static_cast<Eigen::Index>(words[i]), static_cast<Eigen::Index>(f.voxels[v]));
            }
        }
        return out;
    };
    f.train_targets = gather(f.train);
    f.test_targets = gather(f.test);
    f.seed = seed;
    return f;
}

RowMatrix checked_predict(const FoldPredictor& predict, const Fold& f) {
    RowMatrix pred = predict(f);
    if (pred.rows() != f.test_targets.rows() || pred.cols() != f.test_targets.cols()) {
        throw Error("fold predictor returned a " + std::to_string(pred.rows()) + "x" + std::to_string(pred.cols()) +
                    " matrix, expected " + std::to_string(f.test_targets.rows()) + "x" +
                    std::to_string(f.test_targets.cols()));
    }
    return pred;
}

}  // namespace

FoldPredictor decoder_predictor(const EmbeddingMatrix& e, const FmriDataset& d, const DecoderParams& p) {
    auto x = std::make_shared<const RowMatrix>(embedding_rows(e, d.words));
    return [x, p](const Fold& f) {
        auto rows = [&](const std::vector<std::size_t>& idx) {
            RowMatrix out(static_cast<Eigen::Index>(idx.size()), x->cols());
            for (std::size_t i = 0; i < idx.size(); ++i) {
                out.row(static_cast<Eigen::Index>(i)) = x->row(static_cast<Eigen::Index>(idx[i]));
            }
            return out;
        };
        DecoderParams fold_params = p;
        fold_params.seed = f.seed;
        return train_decoder(rows(f.train), f.train_targets, fold_params).predict(rows(f.test));
    };
}

bool two_vs_two_correct(const Eigen::Ref<const Vector>& p1, const Eigen::Ref<const Vector>& p2,
                        const Eigen::Ref<const Vector>& o1, const Eigen::Ref<const Vector>& o2) {
    return safe_cosine(p1, o1) + safe_cosine(p2, o2) > safe_cosine(p1, o2) + safe_cosine(p2, o1);
}

std::vector<std::pair<std::size_t, std::size_t>> two_vs_two_folds(std::size_t n_words,
                                                                  std::optional<std::size_t> fold_limit,
                                                                  std::uint64_t seed) {
    std::vector<std::pair<std::size_t, std::size_t>> folds;
    for (std::size_t i = 0; i < n_words; ++i) {
        for (std::size_t j = i + 1; j < n_words; ++j) folds.emplace_back(i, j);
    }
    if (fold_limit) {
        if (*fold_limit == 0) throw Error("fold limit must be positive");
        if (*fold_limit < folds.size()) {
            Rng rng(derive_seed(seed, 0x2f2f));
            rng.shuffle(folds);
            folds.resize(*fold_limit);
            std::sort(folds.begin(), folds.end());
        }
    }
    return folds;
}

TwoVsTwoResult two_vs_two(const FmriDataset& d, const FoldPredictor& predict, const DecoderParams& p,
                          std::optional<std::size_t> fold_limit, std::size_t workers) {
    p.validate();
    if (d.n_words() < 3) throw Error("2v2 evaluation needs at least 3 words");
    const RowMatrix reps = representative_images(d);
    const std::size_t n_voxels = std::min(p.n_stable_voxels, d.voxel_count);
    const auto folds = two_vs_two_folds(d.n_words(), fold_limit, p.seed);

    std::vector<char> correct(folds.size(), 0);
    parallel_for(folds.size(), workers, [&](std::size_t k) {
        const auto [i, j] = folds[k];
        const Fold f = make_fold(d, reps, {i, j}, n_voxels, derive_seed(p.seed, i * d.n_words() + j));
        const RowMatrix pred = checked_predict(predict, f);
        correct[k] = two_vs_two_correct(pred.row(0).transpose(), pred.row(1).transpose(),
                                        f.test_targets.row(0).transpose(), f.test_targets.row(1).transpose());
    });
    TwoVsTwoResult r;
    r.folds = folds.size();
    r.correct = static_cast<std::size_t>(std::count(correct.begin(), correct.end(), 1));
    r.accuracy = static_cast<double>(r.correct) / static_cast<double>(r.folds);
    return r;
}

TwoVsTwoResult two_vs_two(const EmbeddingMatrix& e, const FmriDataset& d, const DecoderParams& p,
                          std::optional<std::size_t> fold_limit, std::size_t workers) {
    return two_vs_two(d, decoder_predictor(e, d, p), p, fold_limit, workers);
}

MseResult mse_eval(const FmriDataset& d, const FoldPredictor& predict, const DecoderParams& p, std::size_t k,
                   std::size_t workers) {
    p.validate();
    if (k < 2 || k > d.n_words()) throw Error("k-fold MSE needs 2 <= k <= number of words");
    const RowMatrix reps = representative_images(d);
    const std::size_t n_voxels = std::min(p.n_stable_voxels, d.voxel_count);
    std::vector<std::size_t> order(d.n_words());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(p.seed, 0x3e3e));
    rng.shuffle(order);

    std::vector<double> sse(k, 0.0);
    std::vector<std::size_t> count(k, 0);
    parallel_for(k, workers, [&](std::size_t fold) {
        const std::size_t begin = fold * order.size() / k, end = (fold + 1) * order.size() / k;
        std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                      order.begin() + static_cast<std::ptrdiff_t>(end));
        std::sort(test.begin(), test.end());
        const Fold f = make_fold(d, reps, std::move(test), n_voxels, derive_seed(p.seed, fold));
        const RowMatrix pred = checked_predict(predict, f);
        sse[fold] = (pred - f.test_targets).squaredNorm();
        count[fold] = static_cast<std::size_t>(pred.size());
    });
    MseResult r;
    r.folds = k;
    r.mse = std::accumulate(sse.begin(), sse.end(), 0.0) /
            static_cast<double>(std::accumulate(count.begin(), count.end(), std::size_t{0}));
    return r;
}

MseResult mse_eval(const EmbeddingMatrix& e, const FmriDataset& d, const DecoderParams& p, std::size_t k,
                   std::size_t workers) {
    return mse_eval(d, decoder_predictor(e, d, p), p, k, workers);
}

}  // namespace lexemb
