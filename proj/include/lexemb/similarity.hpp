#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lexemb/embedding.hpp"

namespace lexemb {

struct WordPair {
    std::string a;
    std::string b;
    double gold;
};

/// Word-pair similarity benchmark. Unordered pairs are unique.
struct PairDataset {
    std::string name;
    std::vector<WordPair> pairs;
};

struct SimResult {
    double rho = 0.0;
    std::size_t n_scored = 0;
    double coverage = 0.0;
};

/// Throws when both vectors are zero; 0 when exactly one is.
double cosine(const Eigen::Ref<const Vector>& u, const Eigen::Ref<const Vector>& v);

/// Average ranks (1-based) with ties sharing the mean of their positions.
std::vector<double> fractional_ranks(std::span<const double> xs);

/// Pearson correlation of fractional ranks. Needs n >= 2 and neither list
/// constant.
double spearman(std::span<const double> xs, std::span<const double> ys);

/// Pairs with an out-of-vocabulary word (after case folding) are skipped and
/// lower the coverage.
SimResult evaluate_similarity(const EmbeddingMatrix& e, const PairDataset& d);

/// `word_a<TAB>word_b<TAB>score`; `#` comments and blank lines skipped.
PairDataset read_pair_dataset(std::istream& in, const std::string& name);
PairDataset load_pair_dataset(const std::string& path);

}  // namespace lexemb
