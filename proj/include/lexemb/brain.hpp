#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lexemb/embedding.hpp"

namespace lexemb {

/// One participant's responses: for every stimulus word, one row per
/// presentation over all voxels.
struct FmriDataset {
    std::string participant_id;
    std::vector<std::string> words;
    std::vector<RowMatrix> presentations;  // per word: n_presentations x voxel_count
    std::size_t voxel_count = 0;
    std::array<std::size_t, 3> grid_dims{0, 0, 0};
    std::string voxel_size;

    std::size_t n_words() const noexcept { return words.size(); }
    /// Smallest presentation count over all words.
    std::size_t min_presentations() const;
    /// Throws when shapes disagree or a word has no presentation.
    void validate() const;
};

// --- file formats ----------------------------------------------------------

/// Binary canonical file: text header ending in `end_header\n`, then float32
/// little-endian records ordered word-major, presentation-minor.
void write_fmri_binary(const FmriDataset& d, std::ostream& out);
FmriDataset read_fmri_binary(std::istream& in, const std::string& source = "<fmri>");

/// `word<TAB>presentation<TAB>v0<TAB>v1...`; metadata in `#!key<TAB>value`
/// lines (participant, grid, voxel_size).
void write_fmri_tsv(const FmriDataset& d, std::ostream& out);
FmriDataset read_fmri_tsv(std::istream& in, const std::string& source = "<fmri>");

/// Picks the format from the leading magic bytes.
FmriDataset load_fmri(const std::string& path);
void save_fmri(const FmriDataset& d, const std::string& path);

// --- preprocessing ---------------------------------------------------------

/// Per-word mean over presentations minus the mean of those over all words.
/// Row i belongs to d.words[i].
RowMatrix representative_images(const FmriDataset& d);

/// Mean pairwise Pearson correlation between presentation rows of the
/// (presentations x training words) matrix of each voxel. Zero-variance rows
/// contribute 0.
std::vector<double> voxel_stability(const FmriDataset& d, const std::vector<std::size_t>& training_words);

/// Indices of the n most stable voxels, most stable first, ties to the lower
/// index.
std::vector<std::size_t> stable_voxels(const FmriDataset& d, const std::vector<std::size_t>& training_words,
                                       std::size_t n);

/// Top-variance fallback for files with one presentation per word.
std::vector<std::size_t> top_variance_voxels(const RowMatrix& representatives,
                                             const std::vector<std::size_t>& training_words, std::size_t n);

/// Stability selection when every word has >= 2 presentations, top variance
/// otherwise.
std::vector<std::size_t> select_voxels(const FmriDataset& d, const RowMatrix& representatives,
                                       const std::vector<std::size_t>& training_words, std::size_t n);

// --- decoder ---------------------------------------------------------------

struct DecoderParams {
    std::size_t epochs = 1000;
    std::size_t batch_size = 29;
    double lr = 0.001;
    double huber_delta = 1.0;
    double l2_weight = 1e-4;
    std::size_t n_stable_voxels = 500;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Linear map from an embedding to voxel activations: x W + b.
struct DecoderModel {
    RowMatrix weights;  // dim x n_voxels
    Vector bias;        // n_voxels

    RowMatrix predict(const Eigen::Ref<const RowMatrix>& x) const;
};

/// Huber (mean over elements) + mean pairwise squared error over example
/// pairs, averaged over voxels + l2_weight * (|W|^2 + |b|^2).
double combined_loss(const RowMatrix& pred, const RowMatrix& target, const DecoderModel& m,
                     const DecoderParams& p);

struct DecoderGradient {
    double loss = 0.0;
    RowMatrix weights;
    Vector bias;
};

/// combined_loss of m.predict(x) against target, with its gradient.
DecoderGradient decoder_loss_gradient(const RowMatrix& x, const RowMatrix& target, const DecoderModel& m,
                                      const DecoderParams& p);

struct DecoderReport {
    std::vector<double> epoch_loss;  // batch losses averaged per example
};

/// Zero-initialized mini-batch gradient descent on shuffled batches.
DecoderModel train_decoder(const RowMatrix& x, const RowMatrix& targets, const DecoderParams& p,
                           DecoderReport* report = nullptr);

/// Looks every word up in `e`; a missing word is an error listing all of them.
DecoderModel train_decoder(const EmbeddingMatrix& e, const std::vector<std::string>& words,
                           const RowMatrix& targets, const DecoderParams& p, DecoderReport* report = nullptr);

/// Rows of `e` for `words` in order; throws listing every missing word.
RowMatrix embedding_rows(const EmbeddingMatrix& e, const std::vector<std::string>& words);

// --- evaluation ------------------------------------------------------------

/// What a predictor sees for one fold. Targets are representative images
/// restricted to `voxels`.
struct Fold {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    std::vector<std::size_t> voxels;
    RowMatrix train_targets;
    RowMatrix test_targets;
    std::uint64_t seed = 0;
};

/// Returns predictions for fold.test, one row per held-out word.
using FoldPredictor = std::function<RowMatrix(const Fold&)>;

/// Trains a decoder on the fold's training words and predicts the held-out ones.
FoldPredictor decoder_predictor(const EmbeddingMatrix& e, const FmriDataset& d, const DecoderParams& p);

/// Leave-two-out decision: true iff matched cosines beat swapped ones.
bool two_vs_two_correct(const Eigen::Ref<const Vector>& p1, const Eigen::Ref<const Vector>& p2,
                        const Eigen::Ref<const Vector>& o1, const Eigen::Ref<const Vector>& o2);

struct TwoVsTwoResult {
    double accuracy = 0.0;
    std::size_t folds = 0;
    std::size_t correct = 0;
};

/// Every unordered word pair, or a seeded sample of fold_limit of them.
std::vector<std::pair<std::size_t, std::size_t>> two_vs_two_folds(std::size_t n_words,
                                                                  std::optional<std::size_t> fold_limit,
                                                                  std::uint64_t seed);

TwoVsTwoResult two_vs_two(const FmriDataset& d, const FoldPredictor& predict, const DecoderParams& p,
                          std::optional<std::size_t> fold_limit = std::nullopt, std::size_t workers = 1);

TwoVsTwoResult two_vs_two(const EmbeddingMatrix& e, const FmriDataset& d, const DecoderParams& p,
                          std::optional<std::size_t> fold_limit = std::nullopt, std::size_t workers = 1);

struct MseResult {
    double mse = 0.0;
    std::size_t folds = 0;
};

/// k-fold cross-validated mean squared error over held-out words and the
/// fold's selected voxels.
MseResult mse_eval(const FmriDataset& d, const FoldPredictor& predict, const DecoderParams& p, std::size_t k,
                   std::size_t workers = 1);

MseResult mse_eval(const EmbeddingMatrix& e, const FmriDataset& d, const DecoderParams& p, std::size_t k,
                   std::size_t workers = 1);

}  // namespace lexemb
