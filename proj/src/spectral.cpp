#include "lexemb/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "lexemb/error.hpp"

namespace lexemb {

void require_finite(const Eigen::Ref<const RowMatrix>& m, std::string_view what) {
    if (!m.allFinite()) throw Error(std::string(what) + ": matrix contains non-finite values");
}

void SpectralParams::validate() const {
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw Error("Katz beta must be a nonnegative finite number");
    if (katz_mode == KatzMode::truncated && truncation_order < 1) {
        throw Error("truncated Katz needs at least one power term");
    }
    if (dim < 1) throw Error("target dimension must be positive");
    if (power_iterations < 1) throw Error("power_iterations must be positive");
}

double estimate_spectral_radius(const SparseMatrix& a, std::size_t iterations) {
    if (a.rows() != a.cols()) throw Error("spectral radius of a non-square matrix");
    const Eigen::Index n = a.rows();
    if (n == 0) return 0.0;
    Vector x = Vector::Constant(n, 1.0 / static_cast<double>(n));
    Vector ax(n);
    for (std::size_t it = 0; it < iterations; ++it) {
        ax.noalias() = a * x;
        x += ax;
        x /= x.sum();
    }
    ax.noalias() = a * x;
    double bound = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) bound = std::max(bound, ax[i] / x[i]);
    return bound;
}

namespace {

void require_nonnegative(const SparseMatrix& a, std::string_view what) {
    for (Eigen::Index k = 0; k < a.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(a, k); it; ++it) {
            if (it.value() < 0.0) throw Error(std::string(what) + ": negative entry");
            if (!std::isfinite(it.value())) throw Error(std::string(what) + ": non-finite entry");
        }
    }
}

}  // namespace

DenseMatrix katz_index(const CountMatrix& a, const SpectralParams& params) {
    params.validate();
    const auto& m = a.values;
    if (m.rows() != m.cols()) {
        throw Error("Katz index needs a square matrix, got " + std::to_string(m.rows()) + "x" +
                    std::to_string(m.cols()));
    }
    require_nonnegative(m, "Katz index");
    const Eigen::Index n = m.rows();
    DenseMatrix out;
    out.row_labels = a.row_labels;

    if (params.katz_mode == KatzMode::exact) {
        if (static_cast<std::size_t>(n) > params.exact_max_size) {
            throw Error("exact Katz on a " + std::to_string(n) + "x" + std::to_string(n) +
                        " matrix exceeds the dense limit of " + std::to_string(params.exact_max_size) +
                        "; use truncated mode");
        }
        const double rho = estimate_spectral_radius(m, params.power_iterations);
        if (params.beta * rho >= 1.0) {
            std::ostringstream msg;
            msg << "exact Katz requires beta * rho(A) < 1, but estimated spectral radius is " << rho
                << " (beta * rho = " << params.beta * rho << "); lower beta";
            throw Error(msg.str());
        }
        RowMatrix system = RowMatrix::Identity(n, n) - params.beta * RowMatrix(m);
        RowMatrix inverse = system.partialPivLu().inverse();
        inverse.diagonal().array() -= 1.0;
        // The series has nonnegative terms; negatives are LU round-off.
        out.values = inverse.cwiseMax(0.0);
    } else {
        const SparseMatrix scaled = params.beta * m;
        RowMatrix term = RowMatrix(scaled);
        out.values = term;
        for (std::size_t k = 2; k <= params.truncation_order; ++k) {
            term = scaled * term;
            out.values += term;
        }
    }
    require_finite(out.values, "Katz index");
    return out;
}

namespace {

DenseMatrix ppmi_from(const RowMatrix& counts, const Vocabulary& labels) {
    if ((counts.array() < 0.0).any()) throw Error("PPMI: negative entry");
    require_finite(counts, "PPMI input");
    const Vector rows = counts.rowwise().sum();
    const Eigen::RowVectorXd cols = counts.colwise().sum();
    const double total = rows.sum();
    if (!(total > 0.0)) throw Error("PPMI: all-zero matrix");
    DenseMatrix out;
    out.row_labels = labels;
    out.values = RowMatrix::Zero(counts.rows(), counts.cols());
    for (Eigen::Index i = 0; i < counts.rows(); ++i) {
        for (Eigen::Index j = 0; j < counts.cols(); ++j) {
            const double v = counts(i, j);
            if (v <= 0.0) continue;
            const double pmi = std::log(v * total / (rows[i] * cols[j]));
            out.values(i, j) = std::max(0.0, pmi);
        }
    }
    return out;
}

}  // namespace

DenseMatrix ppmi_transform(const CountMatrix& m) {
    require_nonnegative(m.values, "PPMI");
    const double total = m.values.sum();
    if (!(total > 0.0)) throw Error("PPMI: all-zero matrix");
    Vector rows = Vector::Zero(m.values.rows());
    Vector cols = Vector::Zero(m.values.cols());
    for (Eigen::Index k = 0; k < m.values.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(m.values, k); it; ++it) {
            rows[it.row()] += it.value();
            cols[it.col()] += it.value();
        }
    }
    DenseMatrix out;
    out.row_labels = m.row_labels;
    out.values = RowMatrix::Zero(m.values.rows(), m.values.cols());
    for (Eigen::Index k = 0; k < m.values.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(m.values, k); it; ++it) {
            if (it.value() <= 0.0) continue;
            const double pmi = std::log(it.value() * total / (rows[it.row()] * cols[it.col()]));
            out.values(it.row(), it.col()) = std::max(0.0, pmi);
        }
    }
    return out;
}

DenseMatrix ppmi_transform(const DenseMatrix& m) { return ppmi_from(m.values, m.row_labels); }

DenseMatrix l2_normalize_rows(DenseMatrix m) {
    for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
        const double norm = m.values.row(i).norm();
        if (norm > 0.0) m.values.row(i) /= norm;
    }
    return m;
}

namespace {

/// Flips v so that its largest-magnitude entry is positive. Near-ties go to
/// the lowest index so the choice is stable under round-off.
void fix_sign(Eigen::Ref<Vector> v) {
    const double top = v.cwiseAbs().maxCoeff();
    if (top == 0.0) return;
    for (Eigen::Index j = 0; j < v.size(); ++j) {
        if (std::abs(v[j]) >= top * (1.0 - 1e-12)) {
            if (v[j] < 0.0) v = -v;
            return;
        }
    }
}

/// Gram-Schmidt completion for directions the data does not span.
Vector orthogonal_complement_vector(const Eigen::MatrixXd& basis, Eigen::Index filled, Eigen::Index m) {
    for (Eigen::Index e = 0; e < m; ++e) {
        Vector v = Vector::Unit(m, e);
        for (int pass = 0; pass < 2; ++pass) {
            for (Eigen::Index k = 0; k < filled; ++k) v -= basis.col(k).dot(v) * basis.col(k);
        }
        const double norm = v.norm();
        if (norm > 1e-6) return v / norm;
    }
    throw Error("PCA: could not complete orthonormal basis");
}

}  // namespace

PcaResult pca_fit(const DenseMatrix& m, std::size_t dim, bool center) {
    const Eigen::Index n = m.values.rows();
    const Eigen::Index cols = m.values.cols();
    if (dim < 1) throw Error("PCA: dim must be positive");
    if (static_cast<Eigen::Index>(dim) > std::min(n, cols)) {
        throw Error("PCA: dim=" + std::to_string(dim) + " exceeds min(rows, cols) = " +
                    std::to_string(std::min(n, cols)));
    }
    require_finite(m.values, "PCA input");
    const auto d = static_cast<Eigen::Index>(dim);

    PcaResult res;
    res.mean = center ? Vector(m.values.colwise().mean().transpose()) : Vector::Zero(cols);
    const Eigen::MatrixXd x = m.values.rowwise() - res.mean.transpose();
    const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;

    Eigen::MatrixXd directions(cols, d);  // one direction per column
    Vector variances(d);
    double total_variance = 0.0;

    if (cols <= n) {
        const Eigen::MatrixXd cov = (x.transpose() * x) / denom;
        total_variance = cov.trace();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
        if (eig.info() != Eigen::Success) throw Error("PCA: eigendecomposition failed");
        for (Eigen::Index k = 0; k < d; ++k) {
            directions.col(k) = eig.eigenvectors().col(cols - 1 - k);
            variances[k] = std::max(0.0, eig.eigenvalues()[cols - 1 - k]);
        }
    } else {
        // Fewer rows than columns: diagonalize the n x n Gram matrix instead.
        const Eigen::MatrixXd gram = (x * x.transpose()) / denom;
        total_variance = gram.trace();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
        if (eig.info() != Eigen::Success) throw Error("PCA: eigendecomposition failed");
        const double top = std::max(0.0, eig.eigenvalues()[n - 1]);
        for (Eigen::Index k = 0; k < d; ++k) {
            const double lambda = std::max(0.0, eig.eigenvalues()[n - 1 - k]);
            variances[k] = lambda;
            if (lambda > 1e-12 * top && lambda > 0.0) {
                Vector v = x.transpose() * eig.eigenvectors().col(n - 1 - k);
                for (Eigen::Index j = 0; j < k; ++j) v -= directions.col(j).dot(v) * directions.col(j);
                directions.col(k) = v / v.norm();
            } else {
                variances[k] = 0.0;
                directions.col(k) = orthogonal_complement_vector(directions, k, cols);
            }
        }
    }

    for (Eigen::Index k = 0; k < d; ++k) {
        Vector v = directions.col(k);
        fix_sign(v);
        directions.col(k) = v;
    }

    res.components = directions.transpose();
    res.explained_variance = variances;
    res.explained_variance_ratio =
        total_variance > 0.0 ? Vector(variances / total_variance) : Vector(Vector::Zero(d));
    res.embedding.vocab = m.row_labels;
    res.embedding.vectors = x * directions;
    require_finite(res.embedding.vectors, "PCA output");
    return res;
}

EmbeddingMatrix pca_reduce(const DenseMatrix& m, std::size_t dim, bool center) {
    return pca_fit(m, dim, center).embedding;
}

EmbeddingMatrix pipeline_pmi(const LexicalGraph& g, const SpectralParams& params) {
    params.validate();
    const auto adjacency = to_adjacency(g);
    auto ppmi = ppmi_transform(adjacency);
    auto normalized = l2_normalize_rows(std::move(ppmi));
    return pca_reduce(normalized, params.dim, params.center);
}

EmbeddingMatrix pipeline_katz(const LexicalGraph& g, const SpectralParams& params) {
    params.validate();
    const auto adjacency = to_adjacency(g);
    const auto katz = katz_index(adjacency, params);
    auto ppmi = ppmi_transform(katz);
    auto normalized = l2_normalize_rows(std::move(ppmi));
    return pca_reduce(normalized, params.dim, params.center);
}

}  // namespace lexemb
