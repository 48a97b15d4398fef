#include <algorithm>
#include <ostream>
#include <thread>

#include "lexemb/error.hpp"
#include "lexemb/random.hpp"
#include "lexemb/walk.hpp"

namespace lexemb {

void WalkParams::validate() const {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw Error("walk alpha must lie in [0, 1)");
    if (token_budget < 1) throw Error("walk token budget must be positive");
    if (shards < 1) throw Error("walk shard count must be positive");
    if (workers < 1) throw Error("worker count must be positive");
}

std::size_t WalkCorpus::num_tokens() const {
    std::size_t n = 0;
    for (const auto& w : walks) n += w.size();
    return n;
}

namespace {

/// Out-neighbours in CSR layout with cumulative weights for O(log d)
/// weight-proportional sampling.
class NeighbourSampler {
public:
    explicit NeighbourSampler(const LexicalGraph& g) : offsets_(g.num_nodes() + 1, 0) {
        for (const auto& e : g.edges()) ++offsets_[e.src + 1];
        for (std::size_t i = 1; i < offsets_.size(); ++i) offsets_[i] += offsets_[i - 1];
        targets_.resize(g.num_edges());
        cumulative_.resize(g.num_edges());
        std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
        for (const auto& e : g.edges()) {
            const std::size_t slot = fill[e.src]++;
            targets_[slot] = e.dst;
            cumulative_[slot] = e.weight;
        }
        for (std::size_t v = 0; v + 1 < offsets_.size(); ++v) {
            double run = 0.0;
            for (std::size_t k = offsets_[v]; k < offsets_[v + 1]; ++k) {
                run += cumulative_[k];
                cumulative_[k] = run;
            }
        }
    }

    bool has_neighbours(WordId v) const { return offsets_[v + 1] > offsets_[v]; }

    WordId sample(WordId v, Rng& rng) const {
        const auto begin = cumulative_.begin() + static_cast<std::ptrdiff_t>(offsets_[v]);
        const auto end = cumulative_.begin() + static_cast<std::ptrdiff_t>(offsets_[v + 1]);
        const double x = rng.uniform() * *(end - 1);
        auto it = std::upper_bound(begin, end, x);
        if (it == end) --it;
        return targets_[static_cast<std::size_t>(it - cumulative_.begin())];
    }

private:
    std::vector<std::size_t> offsets_;
    std::vector<WordId> targets_;
    std::vector<double> cumulative_;
};

std::vector<std::vector<WordId>> generate_shard(const NeighbourSampler& sampler, std::size_t n_nodes,
                                                const WalkParams& p, std::uint64_t budget, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<WordId>> walks;
    std::uint64_t emitted = 0;
    while (emitted < budget) {
        std::vector<WordId> walk;
        WordId node = rng.below(n_nodes);
        walk.push_back(node);
        while (true) {
            if (p.max_walk_len != 0 && walk.size() >= p.max_walk_len) break;
            if (rng.uniform() >= p.alpha) break;
            if (!sampler.has_neighbours(node)) break;
            node = sampler.sample(node, rng);
            walk.push_back(node);
        }
        emitted += walk.size();
        walks.push_back(std::move(walk));
    }
    return walks;
}

}  // namespace

WalkCorpus generate_walk_corpus(const LexicalGraph& g, const WalkParams& p) {
    p.validate();
    if (g.num_nodes() == 0) throw Error("cannot walk an empty graph");
    const NeighbourSampler sampler(g);

    std::vector<std::vector<std::vector<WordId>>> shards(p.shards);
    auto run_shard = [&](std::size_t s) {
        std::uint64_t budget = p.token_budget / p.shards + (s < p.token_budget % p.shards ? 1 : 0);
        if (budget == 0) return;
        const std::uint64_t seed = p.shards == 1 ? p.seed : derive_seed(p.seed, s);
        shards[s] = generate_shard(sampler, g.num_nodes(), p, budget, seed);
    };

    const std::size_t workers = std::min(p.workers, p.shards);
    if (workers <= 1) {
        for (std::size_t s = 0; s < p.shards; ++s) run_shard(s);
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t s = w; s < p.shards; s += workers) run_shard(s);
            });
        }
    }

    WalkCorpus corpus;
    corpus.vocab = g.vocab();
    for (auto& shard : shards) {
        for (auto& walk : shard) corpus.walks.push_back(std::move(walk));
    }
    return corpus;
}

void write_walk_corpus(const WalkCorpus& c, std::ostream& out) {
    std::vector<std::string> tokens;
    tokens.reserve(c.vocab.size());
    for (const auto& w : c.vocab.words()) {
        std::string t = w;
        std::replace(t.begin(), t.end(), ' ', '_');
        tokens.push_back(std::move(t));
    }
    for (const auto& walk : c.walks) {
        for (std::size_t i = 0; i < walk.size(); ++i) {
            if (i) out << ' ';
            out << tokens[walk[i]];
        }
        out << '\n';
    }
}

}  // namespace lexemb
