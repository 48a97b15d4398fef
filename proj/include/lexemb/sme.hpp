#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lexemb/embedding.hpp"
#include "lexemb/graph.hpp"

namespace lexemb {

struct Triple {
    WordId lhs;
    RelationId rel;
    WordId rhs;

    auto operator<=>(const Triple&) const = default;
};

/// Deduplicated <lhs, rel, rhs> records over an entity vocabulary.
struct TripleSet {
    std::vector<Triple> triples;
    Vocabulary entity_vocab;
    std::vector<std::string> relation_vocab;

    std::size_t size() const noexcept { return triples.size(); }
};

// --- triple generation -----------------------------------------------------

struct SynsetEdge {
    std::string lhs;
    std::string rel;
    std::string rhs;
    std::size_t line = 0;
};

/// synset id -> member words, in file order.
using SynsetMembers = std::map<std::string, std::vector<std::string>>;

/// `synset_a<TAB>rel<TAB>synset_b`; `#` comments.
std::vector<SynsetEdge> read_synset_edges_tsv(std::istream& in, const std::string& source = "<synset-edges>");
/// `synset_id<TAB>word`; words are normalized.
SynsetMembers read_synset_members_tsv(std::istream& in, const std::string& source = "<synset-members>");

/// For every related synset pair, emits (w_lhs, rel, w_rhs) for each member
/// pair with both words in `vocab`.
TripleSet wordnet_triples(const std::vector<SynsetEdge>& edges, const SynsetMembers& members,
                          const Vocabulary& vocab);

/// One triple per graph edge; weights are dropped.
TripleSet graph_triples(const LexicalGraph& g);

/// graph_triples for a per-slot SWOW graph; rejects labels other than R1-R3.
TripleSet swow_triples(const LexicalGraph& g);

struct TripleSplit {
    TripleSet train;
    TripleSet valid;
    TripleSet test;
};

/// Seeded uniform partition; sizes are round(frac * n) for valid and test.
TripleSplit split_triples(const TripleSet& t, double valid_frac, double test_frac, std::uint64_t seed);

// --- model -----------------------------------------------------------------

/// Linear Semantic Matching Energy model:
///   score = <L(e_lhs, r), R(e_rhs, r)>
///   L(x, r) = left_entity x + left_relation r + left_bias
///   R(y, r) = right_entity y + right_relation r + right_bias
struct SmeModel {
    RowMatrix entities;   // |V| x d, unit rows
    RowMatrix relations;  // |R| x d
    RowMatrix left_entity, left_relation;
    Vector left_bias;
    RowMatrix right_entity, right_relation;
    Vector right_bias;

    std::size_t dim() const noexcept { return static_cast<std::size_t>(entities.cols()); }
    friend bool operator==(const SmeModel&, const SmeModel&);
};

/// Embeddings uniform in [-6/sqrt(d), 6/sqrt(d)] (entity rows then scaled to
/// unit norm), projection matrices Glorot-uniform, biases zero.
SmeModel init_sme(std::size_t n_entities, std::size_t n_relations, std::size_t dim, std::uint64_t seed);

double sme_score(const SmeModel& m, const Triple& t);

/// Gradient accumulator. Entity and relation rows are stored sparsely.
struct SmeGradient {
    RowMatrix left_entity, left_relation, right_entity, right_relation;
    Vector left_bias, right_bias;
    std::map<std::size_t, Vector> entities;
    std::map<std::size_t, Vector> relations;

    explicit SmeGradient(std::size_t dim);
    void clear();
};

/// max(0, margin - score(pos) + score(neg)); accumulates its gradient into
/// `grad` when the hinge is active.
double sme_margin_loss(const SmeModel& m, const Triple& pos, const Triple& neg, double margin,
                       SmeGradient* grad = nullptr);

/// One gradient step on the summed hinge loss of a mini-batch, followed by
/// renormalizing every updated entity row. Returns the batch loss.
double sme_sgd_step(SmeModel& m, std::span<const Triple> positives, std::span<const Triple> negatives,
                    double lr, double margin);

/// Raw mean rank of the true rhs among all entities, averaged with the same
/// quantity for lhs. Rank 1 is best.
double sme_mean_rank(const SmeModel& m, std::span<const Triple> triples);

struct SmeTrainParams {
    std::size_t dim = 300;
    std::size_t epochs = 500;
    std::size_t eval_every = 10;
    double lr = 0.01;
    std::size_t n_batches = 200;
    double margin = 1.0;
    double valid_frac = 0.05;
    double test_frac = 0.05;
    std::uint64_t seed = 1;

    /// Settings used for typed-relation graphs (WordNet-like).
    static SmeTrainParams inference_based();
    /// Settings used for association graphs (SWOW-like).
    static SmeTrainParams feature_based();

    void validate() const;
};

struct SmeCheckpoint {
    std::size_t epoch;
    double mean_rank;
};

struct SmeTrainResult {
    SmeModel model;
    EmbeddingMatrix embeddings;
    std::vector<SmeCheckpoint> history;
    std::size_t best_epoch = 0;
};

/// Margin-ranking training with one corrupted (lhs or rhs) negative per
/// positive. The validation mean rank is computed at epoch 0 and every
/// eval_every epochs; the best snapshot is returned.
SmeTrainResult train_sme(const TripleSet& train, const TripleSet& valid, const SmeTrainParams& p);

}  // namespace lexemb
