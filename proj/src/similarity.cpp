#include "lexemb/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <unordered_map>

#include "lexemb/error.hpp"
#include "text_util.hpp"

namespace lexemb {

double cosine(const Eigen::Ref<const Vector>& u, const Eigen::Ref<const Vector>& v) {
    if (u.size() != v.size()) throw Error("cosine of vectors with different lengths");
    const double nu = u.norm();
    const double nv = v.norm();
    if (nu == 0.0 && nv == 0.0) throw Error("cosine undefined for two zero vectors");
    if (nu == 0.0 || nv == 0.0) return 0.0;
    return std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
}

std::vector<double> fractional_ranks(std::span<const double> xs) {
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(xs.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i + 1;
        while (j < order.size() && xs[order[j]] == xs[order[i]]) ++j;
        // positions i+1 .. j share their average
        const double avg = static_cast<double>(i + 1 + j) / 2.0;
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
        i = j;
    }
    return ranks;
}

namespace {

/// Pearson correlation of two rank vectors. Doubled ranks are integers, so
/// the centered moments are exact; only the final division rounds.
double rank_pearson(const std::vector<double>& rx, const std::vector<double>& ry) {
    using Wide = __int128;
    const Wide n = static_cast<Wide>(rx.size());
    Wide sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        const auto a = static_cast<Wide>(std::llround(2.0 * rx[i]));
        const auto b = static_cast<Wide>(std::llround(2.0 * ry[i]));
        sx += a;
        sy += b;
        sxx += a * a;
        syy += b * b;
        sxy += a * b;
    }
    const auto cxy = static_cast<double>(n * sxy - sx * sy);
    const auto cxx = static_cast<double>(n * sxx - sx * sx);
    const auto cyy = static_cast<double>(n * syy - sy * sy);
    return std::clamp(cxy / std::sqrt(cxx * cyy), -1.0, 1.0);
}

bool constant(std::span<const double> xs) {
    return std::all_of(xs.begin(), xs.end(), [&](double v) { return v == xs.front(); });
}

}  // namespace

double spearman(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw Error("spearman: lists differ in length");
    if (xs.size() < 2) throw Error("spearman needs at least 2 observations");
    for (auto v : xs) if (!std::isfinite(v)) throw Error("spearman: non-finite value");
    for (auto v : ys) if (!std::isfinite(v)) throw Error("spearman: non-finite value");
    if (constant(xs) || constant(ys)) throw Error("spearman undefined for a constant list");
    return rank_pearson(fractional_ranks(xs), fractional_ranks(ys));
}

SimResult evaluate_similarity(const EmbeddingMatrix& e, const PairDataset& d) {
    std::unordered_map<std::string, Eigen::Index> index;
    for (std::size_t i = 0; i < e.vocab.size(); ++i) {
        index.emplace(normalize_word(e.vocab.word(i)), static_cast<Eigen::Index>(i));
    }
    auto lookup = [&](const std::string& w) -> const Eigen::Index* {
        auto it = index.find(normalize_word(w));
        return it == index.end() ? nullptr : &it->second;
    };

    std::vector<double> predicted, gold;
    for (const auto& p : d.pairs) {
        const auto* a = lookup(p.a);
        const auto* b = lookup(p.b);
        if (!a || !b) continue;
        const auto u = e.vectors.row(*a).transpose();
        const auto v = e.vectors.row(*b).transpose();
        if (u.isZero(0.0) && v.isZero(0.0)) continue;
        predicted.push_back(cosine(u, v));
        gold.push_back(p.gold);
    }
    if (predicted.size() < 2) {
        throw Error("dataset '" + d.name + "': fewer than 2 pairs covered by the embeddings");
    }
    SimResult r;
    r.rho = spearman(predicted, gold);
    r.n_scored = predicted.size();
    r.coverage = static_cast<double>(r.n_scored) / static_cast<double>(d.pairs.size());
    return r;
}

PairDataset read_pair_dataset(std::istream& in, const std::string& name) {
    PairDataset d;
    d.name = name;
    std::set<std::pair<std::string, std::string>> seen;
    std::string line;
    std::size_t lineno = 0;
    while (detail::read_line(in, line)) {
        ++lineno;
        if (detail::is_blank(line) || line.front() == '#') continue;
        const auto f = detail::split(line, '\t');
        if (f.size() != 3) throw ParseError(name, lineno, "expected word_a<TAB>word_b<TAB>score");
        WordPair p{normalize_word(f[0]), normalize_word(f[1]), 0.0};
        if (p.a.empty() || p.b.empty()) throw ParseError(name, lineno, "empty word");
        const auto gold = detail::parse_double(detail::trim(f[2]));
        if (!gold || !std::isfinite(*gold)) throw ParseError(name, lineno, "score is not a finite number");
        p.gold = *gold;
        auto key = std::minmax(p.a, p.b);
        if (!seen.emplace(key.first, key.second).second) {
            throw ParseError(name, lineno, "duplicate pair '" + p.a + "' / '" + p.b + "'");
        }
        d.pairs.push_back(std::move(p));
    }
    return d;
}

PairDataset load_pair_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open pair dataset '" + path + "'");
    return read_pair_dataset(in, std::filesystem::path(path).stem().string());
}

}  // namespace lexemb
