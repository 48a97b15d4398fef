#pragma once

#include <optional>
#include <string_view>

#include <Eigen/Core>

#include "lexemb/vocabulary.hpp"

namespace lexemb {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Dense labelled matrix, the intermediate of the spectral pipelines.
struct DenseMatrix {
    RowMatrix values;
    Vocabulary row_labels;

    Eigen::Index n_rows() const { return values.rows(); }
    Eigen::Index n_cols() const { return values.cols(); }
};

/// One dense vector per vocabulary word.
struct EmbeddingMatrix {
    Vocabulary vocab;
    RowMatrix vectors;

    std::size_t size() const noexcept { return vocab.size(); }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(vectors.cols()); }

    /// Row index of `word`, or nullopt when out of vocabulary.
    std::optional<Eigen::Index> row_of(std::string_view word) const {
        if (auto id = vocab.find(word)) return static_cast<Eigen::Index>(*id);
        return std::nullopt;
    }
};

/// Throws lexemb::Error naming `what` if any entry is NaN or infinite.
void require_finite(const Eigen::Ref<const RowMatrix>& m, std::string_view what);

}  // namespace lexemb
