#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "lexemb/vocabulary.hpp"

namespace lexemb {

using RelationId = std::size_t;

struct Edge {
    WordId src;
    RelationId rel;
    WordId dst;
    double weight;

    friend bool operator==(const Edge&, const Edge&) = default;
};

/// Vocabulary plus typed, weighted, directed edges. (src, rel, dst) is unique
/// and every stored weight is positive. Immutable once built; use
/// GraphBuilder to construct one.
class LexicalGraph {
public:
    LexicalGraph() = default;

    const Vocabulary& vocab() const noexcept { return vocab_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const std::vector<std::string>& relation_labels() const noexcept { return relations_; }
    std::optional<RelationId> find_relation(std::string_view label) const;

    std::size_t num_nodes() const noexcept { return vocab_.size(); }
    std::size_t num_edges() const noexcept { return edges_.size(); }

    /// Number of distinct outgoing edges per node, across all relations.
    std::vector<std::size_t> out_degrees() const;

    friend bool operator==(const LexicalGraph&, const LexicalGraph&) = default;

private:
    friend class GraphBuilder;
    Vocabulary vocab_;
    std::vector<std::string> relations_;
    std::vector<Edge> edges_;
};

/// Accumulates edges. Re-adding an existing (src, rel, dst) either sums the
/// weights or keeps the edge at its first weight, depending on the call.
class GraphBuilder {
public:
    WordId add_word(const std::string& word) { return graph_.vocab_.add(word); }
    RelationId add_relation(const std::string& label);

    void add_edge(WordId src, RelationId rel, WordId dst, double weight, bool accumulate);

    const Vocabulary& vocab() const noexcept { return graph_.vocab_; }
    LexicalGraph build() &&;

private:
    struct Key {
        WordId src;
        RelationId rel;
        WordId dst;
        auto operator<=>(const Key&) const = default;
    };
    LexicalGraph graph_;
    std::map<Key, std::size_t> edge_index_;
};

// ---------------------------------------------------------------------------
// Ingest

enum class SwowSlot { R1, R2, R3 };
enum class SwowMode { combined, per_slot };

struct SwowRecord {
    std::string cue;
    std::string response;
    SwowSlot slot;
    std::int64_t count;
    std::size_t line = 0;  // source line, for diagnostics
};

/// Parses the strength TSV (`cue<TAB>response<TAB>slot<TAB>count`). The
/// header line is optional; blank lines are skipped.
std::vector<SwowRecord> read_swow_tsv(std::istream& in, const std::string& source = "<swow>");

struct SwowIngestOptions {
    SwowMode mode = SwowMode::combined;
    /// Keep words that only ever occur as responses.
    bool keep_response_only = true;
};

/// Combined mode yields a single relation "R123" whose weights sum over
/// slots; per-slot mode yields relations R1, R2, R3.
LexicalGraph ingest_swow(const std::vector<SwowRecord>& records, const SwowIngestOptions& options = {});

struct EdgeRecord {
    std::string lhs;
    std::string rel;
    std::string rhs;
    std::size_t line = 0;
};

/// Parses `lhs<TAB>rel<TAB>rhs` lines; `#` starts a comment line. An optional
/// fourth column is accepted (and ignored) so that exported graphs re-ingest.
std::vector<EdgeRecord> read_edge_list_tsv(std::istream& in, const std::string& source = "<edges>");

/// Binary edges: every distinct triple has weight 1, duplicates collapse.
/// Relation labels are kept verbatim, words are normalized.
LexicalGraph ingest_edge_list(const std::vector<EdgeRecord>& records);

// ---------------------------------------------------------------------------
// Graph export / load. The exported TSV is the edge-list format with a
// fourth weight column; `#!node` and `#!relation` directive lines (comments
// to plain edge-list readers) pin vocabulary and relation order.

void write_graph_tsv(const LexicalGraph& g, std::ostream& out);
LexicalGraph read_graph_tsv(std::istream& in, const std::string& source = "<graph>");

LexicalGraph load_graph(const std::string& path);
void save_graph(const LexicalGraph& g, const std::string& path);

// ---------------------------------------------------------------------------

/// Keeps the k words with the largest out-degree (ties: lexicographically
/// smaller word first) and the edges among them. Retained words keep their
/// original relative order.
LexicalGraph select_subgraph(const LexicalGraph& g, std::size_t k);

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Sparse nonnegative count matrix with row/column labels.
struct CountMatrix {
    SparseMatrix values;
    Vocabulary row_labels;
    Vocabulary col_labels;

    std::size_t n_rows() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t n_cols() const { return static_cast<std::size_t>(values.cols()); }
    double total() const { return values.sum(); }
};

/// Square matrix over g.vocab; entry (i, j) sums the weights of i->j edges
/// whose relation is in `relation_filter` (all relations when absent).
CountMatrix to_adjacency(const LexicalGraph& g,
                         const std::optional<std::set<std::string>>& relation_filter = std::nullopt);

}  // namespace lexemb
