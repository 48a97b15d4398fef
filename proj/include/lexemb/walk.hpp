#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "lexemb/embedding.hpp"
#include "lexemb/graph.hpp"

namespace lexemb {

struct WalkParams {
    /// Probability of taking another step; the walk stops with 1 - alpha.
    double alpha = 0.85;
    std::uint64_t token_budget = 20'000'000;
    /// Hard cap on walk length; 0 means uncapped.
    std::size_t max_walk_len = 100;
    std::uint64_t seed = 1;
    /// Walks are generated in this many independently seeded shards and
    /// concatenated in shard order. Output depends on `shards`, never on
    /// `workers`.
    std::size_t shards = 1;
    std::size_t workers = 1;

    void validate() const;
};

struct WalkCorpus {
    std::vector<std::vector<WordId>> walks;
    Vocabulary vocab;

    std::size_t num_tokens() const;
};

/// Walks start at a uniformly random node and move to an out-neighbour
/// (chosen proportionally to edge weight) with probability alpha. Dead ends
/// and the length cap end a walk. Generation stops once the token budget is
/// reached.
WalkCorpus generate_walk_corpus(const LexicalGraph& g, const WalkParams& p);

/// One walk per line, tokens separated by single spaces. Spaces inside
/// multi-word tokens become underscores.
void write_walk_corpus(const WalkCorpus& c, std::ostream& out);

struct SgnsParams {
    std::size_t dim = 300;
    std::size_t window = 5;
    std::size_t negatives = 5;
    std::size_t epochs = 5;
    double initial_lr = 0.025;
    double final_lr = 1e-4;
    std::size_t min_count = 5;
    /// Frequent-word subsampling threshold; 0 disables subsampling.
    double subsample_t = 1e-3;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Loss of one (input, positive, negatives) skip-gram example:
///   -log s(in . pos) - sum_n log s(-in . neg_n)
/// and its gradient with respect to every vector involved.
struct SgnsGradient {
    double loss = 0.0;
    Vector input;
    Vector positive;
    std::vector<Vector> negatives;
};

SgnsGradient sgns_loss_gradient(const Vector& input, const Vector& positive,
                                std::span<const Vector> negatives);

/// Per-epoch mean example loss recorded while training.
struct SgnsReport {
    std::vector<double> epoch_loss;
    std::size_t examples = 0;
};

/// Skip-gram with negative sampling (noise = unigram^0.75), linear learning
/// rate decay from initial_lr to final_lr. Returns the input-side vectors of
/// every word occurring at least min_count times, in corpus vocabulary order.
EmbeddingMatrix train_skipgram(const WalkCorpus& c, const SgnsParams& p, SgnsReport* report = nullptr);

EmbeddingMatrix pipeline_walk(const LexicalGraph& g, const WalkParams& wp, const SgnsParams& sp);

}  // namespace lexemb
