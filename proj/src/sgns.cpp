#include <algorithm>
#include <cmath>

#include "lexemb/error.hpp"
#include "lexemb/random.hpp"
#include "lexemb/walk.hpp"

namespace lexemb {

void SgnsParams::validate() const {
    if (dim < 1) throw Error("skip-gram dim must be positive");
    if (window < 1) throw Error("skip-gram window must be >= 1");
    if (epochs < 1) throw Error("skip-gram epochs must be >= 1");
    if (!(final_lr > 0.0)) throw Error("final learning rate must be positive");
    if (!(initial_lr > final_lr)) throw Error("initial learning rate must exceed the final one");
    if (subsample_t < 0.0) throw Error("subsampling threshold must be nonnegative");
}

namespace {

double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

/// -log sigmoid(x), stable for large |x|.
double neg_log_sigmoid(double x) { return x >= 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x)); }

}  // namespace

SgnsGradient sgns_loss_gradient(const Vector& input, const Vector& positive, std::span<const Vector> negatives) {
    SgnsGradient g;
    const double pos_score = input.dot(positive);
    g.loss = neg_log_sigmoid(pos_score);
    const double pos_coef = sigmoid(pos_score) - 1.0;
    g.input = pos_coef * positive;
    g.positive = pos_coef * input;
    for (const auto& neg : negatives) {
        const double s = input.dot(neg);
        g.loss += neg_log_sigmoid(-s);
        const double coef = sigmoid(s);
        g.input += coef * neg;
        g.negatives.push_back(coef * input);
    }
    return g;
}

namespace {

/// Draws from unigram^0.75 over the kept vocabulary.
class NoiseSampler {
public:
    explicit NoiseSampler(const std::vector<std::uint64_t>& counts) {
        cumulative_.reserve(counts.size());
        double run = 0.0;
        for (auto c : counts) {
            run += std::pow(static_cast<double>(c), 0.75);
            cumulative_.push_back(run);
        }
    }
    std::size_t sample(Rng& rng) const {
        const double x = rng.uniform() * cumulative_.back();
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), x);
        if (it == cumulative_.end()) --it;
        return static_cast<std::size_t>(it - cumulative_.begin());
    }

private:
    std::vector<double> cumulative_;
};

}  // namespace

EmbeddingMatrix train_skipgram(const WalkCorpus& c, const SgnsParams& p, SgnsReport* report) {
    p.validate();
    if (c.walks.empty()) throw Error("skip-gram corpus is empty");

    std::vector<std::uint64_t> freq(c.vocab.size(), 0);
    for (const auto& walk : c.walks) {
        for (auto id : walk) {
            if (id >= freq.size()) throw Error("corpus token id outside vocabulary");
            ++freq[id];
        }
    }
    constexpr std::size_t kDropped = static_cast<std::size_t>(-1);
    std::vector<std::size_t> compact(c.vocab.size(), kDropped);
    std::vector<std::uint64_t> counts;
    EmbeddingMatrix out;
    for (WordId w = 0; w < freq.size(); ++w) {
        if (freq[w] >= std::max<std::size_t>(p.min_count, 1)) {
            compact[w] = counts.size();
            counts.push_back(freq[w]);
            out.vocab.add(c.vocab.word(w));
        }
    }
    if (counts.empty()) throw Error("no word reaches min_count=" + std::to_string(p.min_count));

    std::vector<std::vector<std::size_t>> sentences;
    sentences.reserve(c.walks.size());
    std::uint64_t total = 0;
    for (const auto& walk : c.walks) {
        std::vector<std::size_t> s;
        for (auto id : walk) {
            if (compact[id] != kDropped) s.push_back(compact[id]);
        }
        total += s.size();
        if (!s.empty()) sentences.push_back(std::move(s));
    }

    const std::size_t vocab = counts.size();
    const auto dim = static_cast<Eigen::Index>(p.dim);
    Rng rng(p.seed);
    RowMatrix in(static_cast<Eigen::Index>(vocab), dim);
    for (Eigen::Index i = 0; i < in.size(); ++i) in.data()[i] = (rng.uniform() - 0.5) / static_cast<double>(p.dim);
    RowMatrix outv = RowMatrix::Zero(static_cast<Eigen::Index>(vocab), dim);

    std::vector<double> keep_prob(vocab, 1.0);
    if (p.subsample_t > 0.0) {
        const double threshold = p.subsample_t * static_cast<double>(total);
        for (std::size_t w = 0; w < vocab; ++w) {
            const double f = static_cast<double>(counts[w]);
            keep_prob[w] = std::min(1.0, (std::sqrt(f / threshold) + 1.0) * threshold / f);
        }
    }

    const NoiseSampler noise(counts);
    const double planned = static_cast<double>(p.epochs) * static_cast<double>(total) + 1.0;
    std::uint64_t processed = 0;
    Eigen::RowVectorXd grad_in(dim);
    std::vector<std::size_t> kept;
    if (report) *report = {};

    for (std::size_t epoch = 0; epoch < p.epochs; ++epoch) {
        double epoch_loss = 0.0;
        std::size_t epoch_examples = 0;
        for (const auto& sentence : sentences) {
            kept.clear();
            for (auto w : sentence) {
                if (keep_prob[w] >= 1.0 || rng.uniform() < keep_prob[w]) kept.push_back(w);
            }
            const double lr = std::max(p.final_lr, p.initial_lr - (p.initial_lr - p.final_lr) *
                                                                     static_cast<double>(processed) / planned);
            processed += sentence.size();
            const auto n = static_cast<std::ptrdiff_t>(kept.size());
            for (std::ptrdiff_t i = 0; i < n; ++i) {
                const auto reach = static_cast<std::ptrdiff_t>(p.window - rng.below(p.window));
                for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, i - reach); j <= std::min(n - 1, i + reach); ++j) {
                    if (j == i) continue;
                    const auto input = static_cast<Eigen::Index>(kept[static_cast<std::size_t>(j)]);
                    const auto target = kept[static_cast<std::size_t>(i)];
                    auto in_row = in.row(input);
                    grad_in.setZero();
                    double loss = 0.0;
                    for (std::size_t k = 0; k <= p.negatives; ++k) {
                        std::size_t out_word = target;
                        double label = 1.0;
                        if (k > 0) {
                            out_word = noise.sample(rng);
                            if (out_word == target) continue;
                            label = 0.0;
                        }
                        auto out_row = outv.row(static_cast<Eigen::Index>(out_word));
                        const double score = in_row.dot(out_row);
                        loss += label > 0 ? neg_log_sigmoid(score) : neg_log_sigmoid(-score);
                        const double coef = sigmoid(score) - label;  // d loss / d score
                        grad_in.noalias() += coef * out_row;
                        out_row.noalias() -= (lr * coef) * in_row;
                    }
                    in_row.noalias() -= lr * grad_in;
                    epoch_loss += loss;
                    ++epoch_examples;
                }
            }
        }
        if (!std::isfinite(epoch_loss)) throw Error("skip-gram training diverged (non-finite loss)");
        if (report) {
            report->epoch_loss.push_back(epoch_examples ? epoch_loss / static_cast<double>(epoch_examples) : 0.0);
            report->examples += epoch_examples;
        }
    }

    out.vectors = std::move(in);
    require_finite(out.vectors, "skip-gram embeddings");
    return out;
}

EmbeddingMatrix pipeline_walk(const LexicalGraph& g, const WalkParams& wp, const SgnsParams& sp) {
    return train_skipgram(generate_walk_corpus(g, wp), sp);
}

}  // namespace lexemb
