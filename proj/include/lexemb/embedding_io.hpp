#pragma once

#include <iosfwd>
#include <string>

#include "lexemb/embedding.hpp"

namespace lexemb {

enum class EmbeddingFormat { text, binary };

/// `.bin` selects binary, anything else text.
EmbeddingFormat format_for_path(const std::string& path);

/// Token written for `word`: whitespace replaced by underscores.
std::string embedding_token(const std::string& word);

/// `<V> <dim>` header, then `token v1 ... vdim` per row with shortest
/// round-trip decimal values.
void write_embeddings_text(const EmbeddingMatrix& e, std::ostream& out);
/// Same header, then per row: token, a space, dim little-endian float32, '\n'.
void write_embeddings_binary(const EmbeddingMatrix& e, std::ostream& out);

/// Accepts a headerless file (one vector per line) as well.
EmbeddingMatrix read_embeddings_text(std::istream& in, const std::string& source = "<embeddings>");
EmbeddingMatrix read_embeddings_binary(std::istream& in, const std::string& source = "<embeddings>");

/// Writes `path` and, when a token differs from its word, the sidecar
/// `<path>.words.tsv` mapping row index to original word.
void write_embeddings(const EmbeddingMatrix& e, const std::string& path, EmbeddingFormat format);
void write_embeddings(const EmbeddingMatrix& e, const std::string& path);

/// Applies the sidecar mapping when one is present.
EmbeddingMatrix read_embeddings(const std::string& path, EmbeddingFormat format);
EmbeddingMatrix read_embeddings(const std::string& path);

std::string sidecar_path(const std::string& path);

}  // namespace lexemb
