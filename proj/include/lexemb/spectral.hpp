#pragma once

#include <cstddef>

#include "lexemb/embedding.hpp"
#include "lexemb/graph.hpp"

namespace lexemb {

enum class KatzMode { exact, truncated };

struct SpectralParams {
    /// Katz attenuation per hop. Exact mode needs beta * rho(A) < 1.
    double beta = 0.5;
    KatzMode katz_mode = KatzMode::exact;
    /// Number of power terms in truncated mode.
    std::size_t truncation_order = 50;
    std::size_t dim = 300;
    bool center = true;
    /// Largest matrix side accepted by exact (dense LU) Katz.
    std::size_t exact_max_size = 8000;
    std::size_t power_iterations = 100;

    void validate() const;
};

/// Upper estimate of the spectral radius of a nonnegative square matrix:
/// power iteration on A + I, then the Collatz-Wielandt bound
/// max_i (A x)_i / x_i over the (positive) iterate.
double estimate_spectral_radius(const SparseMatrix& a, std::size_t iterations = 100);

/// Exact: (I - beta A)^-1 - I. Truncated: sum_{k=1..K} beta^k A^k.
DenseMatrix katz_index(const CountMatrix& a, const SpectralParams& params);

/// max(0, log(m_ij N / (r_i c_j))); zero cells stay zero.
DenseMatrix ppmi_transform(const CountMatrix& m);
DenseMatrix ppmi_transform(const DenseMatrix& m);

/// Scales every nonzero row to unit Euclidean norm; zero rows stay zero.
DenseMatrix l2_normalize_rows(DenseMatrix m);

struct PcaResult {
    EmbeddingMatrix embedding;
    /// One principal direction per row (dim x n_cols), orthonormal.
    RowMatrix components;
    Vector explained_variance;
    Vector explained_variance_ratio;
    Vector mean;
};

/// Projects rows onto the top `dim` principal directions, ordered by
/// non-increasing variance. Each direction is signed so that its entry of
/// largest magnitude is positive.
PcaResult pca_fit(const DenseMatrix& m, std::size_t dim, bool center);
EmbeddingMatrix pca_reduce(const DenseMatrix& m, std::size_t dim, bool center);

/// adjacency -> PPMI -> row L2 -> PCA
EmbeddingMatrix pipeline_pmi(const LexicalGraph& g, const SpectralParams& params);
/// adjacency -> Katz -> PPMI -> row L2 -> PCA
EmbeddingMatrix pipeline_katz(const LexicalGraph& g, const SpectralParams& params);

}  // namespace lexemb
