#include "lexemb/graph.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <ostream>

#include "lexemb/error.hpp"
#include "text_util.hpp"

namespace lexemb {

std::optional<RelationId> LexicalGraph::find_relation(std::string_view label) const {
    for (RelationId r = 0; r < relations_.size(); ++r) {
        if (relations_[r] == label) return r;
    }
    return std::nullopt;
}

std::vector<std::size_t> LexicalGraph::out_degrees() const {
    std::vector<std::size_t> deg(vocab_.size(), 0);
    for (const auto& e : edges_) ++deg[e.src];
    return deg;
}

RelationId GraphBuilder::add_relation(const std::string& label) {
    if (auto r = graph_.find_relation(label)) return *r;
    graph_.relations_.push_back(label);
    return graph_.relations_.size() - 1;
}

void GraphBuilder::add_edge(WordId src, RelationId rel, WordId dst, double weight, bool accumulate) {
    if (src >= graph_.vocab_.size() || dst >= graph_.vocab_.size()) {
        throw Error("edge endpoint outside vocabulary");
    }
    if (rel >= graph_.relations_.size()) throw Error("edge relation id out of range");
    if (!(weight > 0.0) || !std::isfinite(weight)) {
        throw Error("edge weight must be positive and finite");
    }
    const Key key{src, rel, dst};
    if (auto it = edge_index_.find(key); it != edge_index_.end()) {
        if (accumulate) graph_.edges_[it->second].weight += weight;
        return;
    }
    edge_index_.emplace(key, graph_.edges_.size());
    graph_.edges_.push_back({src, rel, dst, weight});
}

LexicalGraph GraphBuilder::build() && {
    edge_index_.clear();
    return std::move(graph_);
}

// ---------------------------------------------------------------------------

namespace {

std::optional<SwowSlot> parse_slot(std::string_view s) {
    const auto t = normalize_word(s);
    if (t == "r1") return SwowSlot::R1;
    if (t == "r2") return SwowSlot::R2;
    if (t == "r3") return SwowSlot::R3;
    return std::nullopt;
}

}  // namespace

std::vector<SwowRecord> read_swow_tsv(std::istream& in, const std::string& source) {
    std::vector<SwowRecord> records;
    std::string line;
    std::size_t lineno = 0;
    bool first = true;
    while (detail::read_line(in, line)) {
        ++lineno;
        if (detail::is_blank(line)) continue;
        const auto fields = detail::split(line, '\t');
        if (first) {
            first = false;
            if (fields.size() >= 2 && normalize_word(fields[0]) == "cue" &&
                normalize_word(fields[1]) == "response") {
                continue;
            }
        }
        if (fields.size() != 4) {
            throw ParseError(source, lineno, "expected 4 tab-separated fields, got " +
                                                 std::to_string(fields.size()));
        }
        SwowRecord rec;
        rec.cue = normalize_word(fields[0]);
        rec.response = normalize_word(fields[1]);
        if (rec.cue.empty() || rec.response.empty()) throw ParseError(source, lineno, "empty cue or response");
        auto slot = parse_slot(fields[2]);
        if (!slot) throw ParseError(source, lineno, "slot must be R1, R2 or R3");
        rec.slot = *slot;
        auto count = detail::parse_int(fields[3]);
        if (!count) throw ParseError(source, lineno, "count is not an integer");
        if (*count <= 0) throw ParseError(source, lineno, "count must be positive");
        rec.count = *count;
        rec.line = lineno;
        records.push_back(std::move(rec));
    }
    return records;
}

LexicalGraph ingest_swow(const std::vector<SwowRecord>& records, const SwowIngestOptions& options) {
    if (records.empty()) throw Error("SWOW input contains no records");

    std::set<std::string> cues;
    if (!options.keep_response_only) {
        for (const auto& r : records) cues.insert(normalize_word(r.cue));
    }

    GraphBuilder b;
    if (options.mode == SwowMode::combined) {
        b.add_relation("R123");
    } else {
        b.add_relation("R1");
        b.add_relation("R2");
        b.add_relation("R3");
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const std::size_t line = r.line ? r.line : i + 1;
        const auto cue = normalize_word(r.cue);
        const auto response = normalize_word(r.response);
        if (cue.empty() || response.empty()) {
            throw ParseError("<swow>", line, "empty cue or response");
        }
        if (r.count <= 0) throw ParseError("<swow>", line, "count must be positive");
        if (!options.keep_response_only && !cues.contains(response)) {
            b.add_word(cue);
            continue;
        }
        const WordId src = b.add_word(cue);
        const WordId dst = b.add_word(response);
        const RelationId rel = options.mode == SwowMode::combined ? RelationId{0}
                                                                  : static_cast<RelationId>(r.slot);
        b.add_edge(src, rel, dst, static_cast<double>(r.count), /*accumulate=*/true);
    }
    return std::move(b).build();
}

std::vector<EdgeRecord> read_edge_list_tsv(std::istream& in, const std::string& source) {
    std::vector<EdgeRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (detail::read_line(in, line)) {
        ++lineno;
        if (detail::is_blank(line) || line.front() == '#') continue;
        const auto fields = detail::split(line, '\t');
        if (fields.size() != 3 && fields.size() != 4) {
            throw ParseError(source, lineno, "expected lhs<TAB>rel<TAB>rhs, got " +
                                                 std::to_string(fields.size()) + " fields");
        }
        EdgeRecord rec{normalize_word(fields[0]), std::string(detail::trim(fields[1])),
                       normalize_word(fields[2]), lineno};
        if (rec.lhs.empty() || rec.rel.empty() || rec.rhs.empty()) {
            throw ParseError(source, lineno, "empty field");
        }
        if (fields.size() == 4) {
            auto w = detail::parse_double(fields[3]);
            if (!w || !(*w > 0.0)) throw ParseError(source, lineno, "weight column must be a positive number");
        }
        records.push_back(std::move(rec));
    }
    return records;
}

LexicalGraph ingest_edge_list(const std::vector<EdgeRecord>& records) {
    GraphBuilder b;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const auto lhs = normalize_word(r.lhs);
        const auto rhs = normalize_word(r.rhs);
        if (lhs.empty() || rhs.empty() || r.rel.empty()) {
            throw ParseError("<edges>", r.line ? r.line : i + 1, "empty field");
        }
        const WordId src = b.add_word(lhs);
        const RelationId rel = b.add_relation(r.rel);
        const WordId dst = b.add_word(rhs);
        b.add_edge(src, rel, dst, 1.0, /*accumulate=*/false);
    }
    return std::move(b).build();
}

// ---------------------------------------------------------------------------

void write_graph_tsv(const LexicalGraph& g, std::ostream& out) {
    out << "# lexemb graph: " << g.num_nodes() << " nodes, " << g.num_edges() << " edges\n";
    for (const auto& w : g.vocab().words()) out << "#!node\t" << w << '\n';
    for (const auto& r : g.relation_labels()) out << "#!relation\t" << r << '\n';
    const auto& words = g.vocab().words();
    for (const auto& e : g.edges()) {
        out << words[e.src] << '\t' << g.relation_labels()[e.rel] << '\t' << words[e.dst] << '\t'
            << detail::format_double(e.weight) << '\n';
    }
}

LexicalGraph read_graph_tsv(std::istream& in, const std::string& source) {
    GraphBuilder b;
    std::string line;
    std::size_t lineno = 0;
    while (detail::read_line(in, line)) {
        ++lineno;
        if (detail::is_blank(line)) continue;
        if (line.front() == '#') {
            const auto fields = detail::split(line, '\t');
            if (fields.size() == 2 && fields[0] == "#!node") {
                b.add_word(normalize_word(fields[1]));
            } else if (fields.size() == 2 && fields[0] == "#!relation") {
                b.add_relation(std::string(detail::trim(fields[1])));
            }
            continue;
        }
        const auto fields = detail::split(line, '\t');
        if (fields.size() != 3 && fields.size() != 4) {
            throw ParseError(source, lineno, "expected lhs<TAB>rel<TAB>rhs[<TAB>weight]");
        }
        const auto lhs = normalize_word(fields[0]);
        const std::string rel(detail::trim(fields[1]));
        const auto rhs = normalize_word(fields[2]);
        if (lhs.empty() || rel.empty() || rhs.empty()) throw ParseError(source, lineno, "empty field");
        double weight = 1.0;
        if (fields.size() == 4) {
            auto w = detail::parse_double(fields[3]);
            if (!w || !(*w > 0.0) || !std::isfinite(*w)) {
                throw ParseError(source, lineno, "weight must be a positive number");
            }
            weight = *w;
        }
        const WordId src = b.add_word(lhs);
        const RelationId r = b.add_relation(rel);
        const WordId dst = b.add_word(rhs);
        b.add_edge(src, r, dst, weight, /*accumulate=*/true);
    }
    return std::move(b).build();
}

LexicalGraph load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open graph file: " + path);
    return read_graph_tsv(in, path);
}

void save_graph(const LexicalGraph& g, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write graph file: " + path);
    write_graph_tsv(g, out);
    if (!out) throw Error("write failed: " + path);
}

// ---------------------------------------------------------------------------

LexicalGraph select_subgraph(const LexicalGraph& g, std::size_t k) {
    const std::size_t n = g.num_nodes();
    if (k == 0) throw Error("subgraph size k must be positive");
    if (k > n) {
        throw Error("subgraph size k=" + std::to_string(k) + " exceeds vocabulary size " +
                    std::to_string(n));
    }
    const auto deg = g.out_degrees();
    const auto& words = g.vocab().words();
    std::vector<WordId> order(n);
    std::iota(order.begin(), order.end(), WordId{0});
    std::sort(order.begin(), order.end(), [&](WordId a, WordId b) {
        if (deg[a] != deg[b]) return deg[a] > deg[b];
        return words[a] < words[b];
    });
    std::vector<bool> keep(n, false);
    for (std::size_t i = 0; i < k; ++i) keep[order[i]] = true;

    GraphBuilder b;
    std::vector<WordId> remap(n, 0);
    for (WordId w = 0; w < n; ++w) {
        if (keep[w]) remap[w] = b.add_word(words[w]);
    }
    for (const auto& label : g.relation_labels()) b.add_relation(label);
    for (const auto& e : g.edges()) {
        if (keep[e.src] && keep[e.dst]) b.add_edge(remap[e.src], e.rel, remap[e.dst], e.weight, false);
    }
    return std::move(b).build();
}

CountMatrix to_adjacency(const LexicalGraph& g, const std::optional<std::set<std::string>>& relation_filter) {
    std::vector<bool> use(g.relation_labels().size(), !relation_filter.has_value());
    if (relation_filter) {
        for (const auto& label : *relation_filter) {
            auto r = g.find_relation(label);
            if (!r) throw Error("unknown relation in filter: '" + label + "'");
            use[*r] = true;
        }
    }
    const auto n = static_cast<Eigen::Index>(g.num_nodes());
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(g.num_edges());
    for (const auto& e : g.edges()) {
        if (use[e.rel]) {
            triplets.emplace_back(static_cast<Eigen::Index>(e.src), static_cast<Eigen::Index>(e.dst), e.weight);
        }
    }
    CountMatrix m;
    m.values.resize(n, n);
    m.values.setFromTriplets(triplets.begin(), triplets.end());
    m.values.makeCompressed();
    m.row_labels = g.vocab();
    m.col_labels = g.vocab();
    return m;
}

}  // namespace lexemb
