#include "lexemb/sme.hpp"

#include <cmath>
#include <istream>
#include <set>

#include "lexemb/error.hpp"
#include "lexemb/random.hpp"
#include "text_util.hpp"

namespace lexemb {

// --- triple generation -----------------------------------------------------

std::vector<SynsetEdge> read_synset_edges_tsv(std::istream& in, const std::string& source) {
    std::vector<SynsetEdge> edges;
    std::string line;
    std::size_t lineno = 0;
    while (detail::read_line(in, line)) {
        ++lineno;
        if (detail::is_blank(line) || line.front() == '#') continue;
        const auto f = detail::split(line, '\t');
        if (f.size() != 3) throw ParseError(source, lineno, "expected synset_a<TAB>rel<TAB>synset_b");
        SynsetEdge e{std::string(detail::trim(f[0])), std::string(detail::trim(f[1])),
                     std::string(detail::trim(f[2])), lineno};
        if (e.lhs.empty() || e.rel.empty() || e.rhs.empty()) throw ParseError(source, lineno, "empty field");
        edges.push_back(std::move(e));
    }
    return edges;
}

SynsetMembers read_synset_members_tsv(std::istream& in, const std::string& source) {
    SynsetMembers members;
    std::string line;
    std::size_t lineno = 0;
    while (detail::read_line(in, line)) {
        ++lineno;
        if (detail::is_blank(line) || line.front() == '#') continue;
        const auto f = detail::split(line, '\t');
        if (f.size() != 2) throw ParseError(source, lineno, "expected synset_id<TAB>word");
        const std::string synset(detail::trim(f[0]));
        auto word = normalize_word(f[1]);
        if (synset.empty() || word.empty()) throw ParseError(source, lineno, "empty field");
        members[synset].push_back(std::move(word));
    }
    return members;
}

namespace {

class TripleCollector {
public:
    explicit TripleCollector(Vocabulary entities) { set_.entity_vocab = std::move(entities); }

    RelationId relation(const std::string& label) {
        for (RelationId r = 0; r < set_.relation_vocab.size(); ++r) {
            if (set_.relation_vocab[r] == label) return r;
        }
        set_.relation_vocab.push_back(label);
        return set_.relation_vocab.size() - 1;
    }

    void add(const Triple& t) {
        if (seen_.insert(t).second) set_.triples.push_back(t);
    }

    TripleSet take() && { return std::move(set_); }

private:
    TripleSet set_;
    std::set<Triple> seen_;
};

}  // namespace

TripleSet wordnet_triples(const std::vector<SynsetEdge>& edges, const SynsetMembers& members,
                          const Vocabulary& vocab) {
    TripleCollector out(vocab);
    auto members_of = [&](const SynsetEdge& e, const std::string& synset) -> const std::vector<std::string>& {
        auto it = members.find(synset);
        if (it == members.end()) {
            throw Error("synset '" + synset + "' (edge line " + std::to_string(e.line) +
                        ") has no membership entry");
        }
        return it->second;
    };
    for (const auto& e : edges) {
        const auto& lhs_words = members_of(e, e.lhs);
        const auto& rhs_words = members_of(e, e.rhs);
        const RelationId rel = out.relation(e.rel);
        for (const auto& wl : lhs_words) {
            const auto l = vocab.find(wl);
            if (!l) continue;
            for (const auto& wr : rhs_words) {
                if (const auto r = vocab.find(wr)) out.add({*l, rel, *r});
            }
        }
    }
    return std::move(out).take();
}

TripleSet graph_triples(const LexicalGraph& g) {
    if (g.num_edges() == 0) throw Error("graph has no edges to turn into triples");
    TripleSet t;
    t.entity_vocab = g.vocab();
    t.relation_vocab = g.relation_labels();
    t.triples.reserve(g.num_edges());
    for (const auto& e : g.edges()) t.triples.push_back({e.src, e.rel, e.dst});
    return t;
}

TripleSet swow_triples(const LexicalGraph& g) {
    for (const auto& label : g.relation_labels()) {
        if (label != "R1" && label != "R2" && label != "R3") {
            throw Error("SWOW triples need a per-slot graph; unexpected relation '" + label + "'");
        }
    }
    return graph_triples(g);
}

TripleSplit split_triples(const TripleSet& t, double valid_frac, double test_frac, std::uint64_t seed) {
    if (!(valid_frac >= 0.0 && valid_frac < 0.5) || !(test_frac >= 0.0 && test_frac < 0.5)) {
        throw Error("validation and test fractions must lie in [0, 0.5)");
    }
    const std::size_t n = t.size();
    const auto n_valid = static_cast<std::size_t>(std::llround(valid_frac * static_cast<double>(n)));
    const auto n_test = static_cast<std::size_t>(std::llround(test_frac * static_cast<double>(n)));
    if (n_valid + n_test >= n) {
        throw Error("split leaves no training triples (" + std::to_string(n) + " triples)");
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);

    TripleSplit s;
    for (TripleSet* part : {&s.train, &s.valid, &s.test}) {
        part->entity_vocab = t.entity_vocab;
        part->relation_vocab = t.relation_vocab;
    }
    for (std::size_t i = 0; i < n; ++i) {
        TripleSet& dst = i < n_valid ? s.valid : (i < n_valid + n_test ? s.test : s.train);
        dst.triples.push_back(t.triples[order[i]]);
    }
    return s;
}

// --- model -----------------------------------------------------------------

bool operator==(const SmeModel& a, const SmeModel& b) {
    return a.entities == b.entities && a.relations == b.relations && a.left_entity == b.left_entity &&
           a.left_relation == b.left_relation && a.left_bias == b.left_bias && a.right_entity == b.right_entity &&
           a.right_relation == b.right_relation && a.right_bias == b.right_bias;
}

SmeModel init_sme(std::size_t n_entities, std::size_t n_relations, std::size_t dim, std::uint64_t seed) {
    if (dim < 1) throw Error("SME dimension must be positive");
    Rng rng(seed);
    const auto d = static_cast<Eigen::Index>(dim);
    const double embed_bound = 6.0 / std::sqrt(static_cast<double>(dim));
    const double proj_bound = std::sqrt(3.0 / static_cast<double>(dim));
    auto fill = [&](Eigen::Index rows, double bound) {
        RowMatrix m(rows, d);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
        return m;
    };
    SmeModel m;
    m.entities = fill(static_cast<Eigen::Index>(n_entities), embed_bound);
    m.entities.rowwise().normalize();
    m.relations = fill(static_cast<Eigen::Index>(n_relations), embed_bound);
    m.left_entity = fill(d, proj_bound);
    m.left_relation = fill(d, proj_bound);
    m.right_entity = fill(d, proj_bound);
    m.right_relation = fill(d, proj_bound);
    m.left_bias = Vector::Zero(d);
    m.right_bias = Vector::Zero(d);
    return m;
}

namespace {

Vector left_vec(const SmeModel& m, const Triple& t) {
    return m.left_entity * m.entities.row(static_cast<Eigen::Index>(t.lhs)).transpose() +
           m.left_relation * m.relations.row(static_cast<Eigen::Index>(t.rel)).transpose() + m.left_bias;
}

Vector right_vec(const SmeModel& m, const Triple& t) {
    return m.right_entity * m.entities.row(static_cast<Eigen::Index>(t.rhs)).transpose() +
           m.right_relation * m.relations.row(static_cast<Eigen::Index>(t.rel)).transpose() + m.right_bias;
}

Vector& row_slot(std::map<std::size_t, Vector>& rows, std::size_t id, Eigen::Index dim) {
    auto [it, inserted] = rows.try_emplace(id);
    if (inserted) it->second = Vector::Zero(dim);
    return it->second;
}

void accumulate_score_gradient(const SmeModel& m, const Triple& t, double coef, SmeGradient& g) {
    const Vector l = left_vec(m, t);
    const Vector r = right_vec(m, t);
    const auto x = m.entities.row(static_cast<Eigen::Index>(t.lhs)).transpose();
    const auto y = m.entities.row(static_cast<Eigen::Index>(t.rhs)).transpose();
    const auto rel = m.relations.row(static_cast<Eigen::Index>(t.rel)).transpose();
    const Eigen::Index d = l.size();

    g.left_entity.noalias() += coef * r * x.transpose();
    g.left_relation.noalias() += coef * r * rel.transpose();
    g.left_bias += coef * r;
    g.right_entity.noalias() += coef * l * y.transpose();
    g.right_relation.noalias() += coef * l * rel.transpose();
    g.right_bias += coef * l;
    row_slot(g.entities, t.lhs, d).noalias() += coef * (m.left_entity.transpose() * r);
    row_slot(g.entities, t.rhs, d).noalias() += coef * (m.right_entity.transpose() * l);
    row_slot(g.relations, t.rel, d).noalias() +=
        coef * (m.left_relation.transpose() * r + m.right_relation.transpose() * l);
}

}  // namespace

double sme_score(const SmeModel& m, const Triple& t) { return left_vec(m, t).dot(right_vec(m, t)); }

SmeGradient::SmeGradient(std::size_t dim) {
    const auto d = static_cast<Eigen::Index>(dim);
    left_entity = left_relation = right_entity = right_relation = RowMatrix::Zero(d, d);
    left_bias = right_bias = Vector::Zero(d);
}

void SmeGradient::clear() {
    left_entity.setZero();
    left_relation.setZero();
    right_entity.setZero();
    right_relation.setZero();
    left_bias.setZero();
    right_bias.setZero();
    entities.clear();
    relations.clear();
}

double sme_margin_loss(const SmeModel& m, const Triple& pos, const Triple& neg, double margin, SmeGradient* grad) {
    const double loss = margin - sme_score(m, pos) + sme_score(m, neg);
    if (loss <= 0.0) return 0.0;
    if (grad) {
        accumulate_score_gradient(m, pos, -1.0, *grad);
        accumulate_score_gradient(m, neg, 1.0, *grad);
    }
    return loss;
}

namespace {

double sgd_step(SmeModel& m, std::span<const Triple> positives, std::span<const Triple> negatives, double lr,
                double margin, SmeGradient& g) {
    if (positives.size() != negatives.size()) throw Error("SME batch: positives and negatives differ in size");
    g.clear();
    double loss = 0.0;
    for (std::size_t i = 0; i < positives.size(); ++i) loss += sme_margin_loss(m, positives[i], negatives[i], margin, &g);
    if (!std::isfinite(loss)) {
        throw Error("SME training produced a non-finite loss; lower the learning rate");
    }
    if (loss == 0.0) return 0.0;
    m.left_entity -= lr * g.left_entity;
    m.left_relation -= lr * g.left_relation;
    m.left_bias -= lr * g.left_bias;
    m.right_entity -= lr * g.right_entity;
    m.right_relation -= lr * g.right_relation;
    m.right_bias -= lr * g.right_bias;
    for (const auto& [id, v] : g.relations) m.relations.row(static_cast<Eigen::Index>(id)) -= lr * v.transpose();
    for (const auto& [id, v] : g.entities) {
        auto row = m.entities.row(static_cast<Eigen::Index>(id));
        row -= lr * v.transpose();
        const double norm = row.norm();
        if (norm > 0.0) row /= norm;
    }
    return loss;
}

}  // namespace

double sme_sgd_step(SmeModel& m, std::span<const Triple> positives, std::span<const Triple> negatives, double lr,
                    double margin) {
    SmeGradient g(m.dim());
    return sgd_step(m, positives, negatives, lr, margin, g);
}

double sme_mean_rank(const SmeModel& m, std::span<const Triple> triples) {
    if (triples.empty()) throw Error("mean rank over an empty triple set");
    // projections of every entity through both maps
    const RowMatrix left_proj = m.entities * m.left_entity.transpose();
    const RowMatrix right_proj = m.entities * m.right_entity.transpose();
    double total = 0.0;
    for (const auto& t : triples) {
        const auto rel = m.relations.row(static_cast<Eigen::Index>(t.rel)).transpose();
        const Vector left_rel = m.left_relation * rel + m.left_bias;
        const Vector right_rel = m.right_relation * rel + m.right_bias;
        const Vector l = left_proj.row(static_cast<Eigen::Index>(t.lhs)).transpose() + left_rel;
        const Vector r = right_proj.row(static_cast<Eigen::Index>(t.rhs)).transpose() + right_rel;
        const double truth = l.dot(r);

        const Vector rhs_scores = right_proj * l + Vector::Constant(right_proj.rows(), right_rel.dot(l));
        const Vector lhs_scores = left_proj * r + Vector::Constant(left_proj.rows(), left_rel.dot(r));
        const double rhs_rank = 1.0 + static_cast<double>((rhs_scores.array() > truth).count());
        const double lhs_rank = 1.0 + static_cast<double>((lhs_scores.array() > truth).count());
        total += 0.5 * (rhs_rank + lhs_rank);
    }
    return total / static_cast<double>(triples.size());
}

// --- training --------------------------------------------------------------

SmeTrainParams SmeTrainParams::inference_based() {
    SmeTrainParams p;
    p.eval_every = 10;
    p.lr = 0.01;
    return p;
}

SmeTrainParams SmeTrainParams::feature_based() {
    SmeTrainParams p;
    p.eval_every = 5;
    p.lr = 0.001;
    return p;
}

void SmeTrainParams::validate() const {
    if (dim < 1) throw Error("SME dimension must be positive");
    if (eval_every < 1) throw Error("eval_every must be positive");
    if (!(lr > 0.0)) throw Error("SME learning rate must be positive");
    if (n_batches < 1) throw Error("n_batches must be positive");
    if (!(margin > 0.0)) throw Error("SME margin must be positive");
    if (!(valid_frac > 0.0 && valid_frac < 0.5) || !(test_frac > 0.0 && test_frac < 0.5)) {
        throw Error("validation and test fractions must lie in (0, 0.5)");
    }
}

SmeTrainResult train_sme(const TripleSet& train, const TripleSet& valid, const SmeTrainParams& p) {
    p.validate();
    if (train.triples.empty()) throw Error("SME training set is empty");
    const std::size_t n_entities = train.entity_vocab.size();
    const std::size_t n_relations = train.relation_vocab.size();
    for (const auto* set : {&train, &valid}) {
        for (const auto& t : set->triples) {
            if (t.lhs >= n_entities || t.rhs >= n_entities || t.rel >= n_relations) {
                throw Error("triple id outside the training vocabulary");
            }
        }
    }

    SmeTrainResult res;
    SmeModel model = init_sme(n_entities, n_relations, p.dim, p.seed);
    Rng rng(derive_seed(p.seed, 1));

    double best_rank = std::numeric_limits<double>::infinity();
    SmeModel best = model;
    auto evaluate = [&](std::size_t epoch) {
        if (valid.triples.empty()) return;
        const double rank = sme_mean_rank(model, valid.triples);
        res.history.push_back({epoch, rank});
        if (rank < best_rank) {
            best_rank = rank;
            best = model;
            res.best_epoch = epoch;
        }
    };
    evaluate(0);

    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const std::size_t n_batches = std::min(p.n_batches, train.size());
    SmeGradient grad(p.dim);
    std::vector<Triple> pos, neg;

    for (std::size_t epoch = 1; epoch <= p.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t b = 0; b < n_batches; ++b) {
            const std::size_t begin = b * order.size() / n_batches;
            const std::size_t end = (b + 1) * order.size() / n_batches;
            pos.clear();
            neg.clear();
            for (std::size_t i = begin; i < end; ++i) {
                const Triple t = train.triples[order[i]];
                Triple corrupt = t;
                if (rng.coin()) corrupt.lhs = rng.below(n_entities);
                else corrupt.rhs = rng.below(n_entities);
                pos.push_back(t);
                neg.push_back(corrupt);
            }
            sgd_step(model, pos, neg, p.lr, p.margin, grad);
        }
        if (epoch % p.eval_every == 0 || epoch == p.epochs) evaluate(epoch);
    }

    if (valid.triples.empty()) {
        best = std::move(model);
        res.best_epoch = p.epochs;
    }
    res.model = std::move(best);
    res.embeddings.vocab = train.entity_vocab;
    res.embeddings.vectors = res.model.entities;
    require_finite(res.embeddings.vectors, "SME embeddings");
    return res;
}

}  // namespace lexemb
