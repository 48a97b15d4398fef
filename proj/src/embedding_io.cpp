#include "lexemb/embedding_io.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <unordered_set>

#include "lexemb/error.hpp"
#include "text_util.hpp"

namespace lexemb {

namespace fs = std::filesystem;

EmbeddingFormat format_for_path(const std::string& path) {
    return fs::path(path).extension() == ".bin" ? EmbeddingFormat::binary : EmbeddingFormat::text;
}

std::string embedding_token(const std::string& word) {
    std::string t = word;
    for (auto& c : t) {
        if (std::isspace(static_cast<unsigned char>(c))) c = '_';
    }
    return t;
}

std::string sidecar_path(const std::string& path) { return path + ".words.tsv"; }

namespace {

void check_writable(const EmbeddingMatrix& e) {
    if (e.size() == 0 || e.dim() == 0) throw Error("cannot write an empty embedding matrix");
    if (static_cast<std::size_t>(e.vectors.rows()) != e.size()) {
        throw Error("embedding matrix rows do not match its vocabulary");
    }
    require_finite(e.vectors, "embeddings");
    std::unordered_set<std::string> tokens;
    for (const auto& w : e.vocab.words()) {
        if (!tokens.insert(embedding_token(w)).second) {
            throw Error("words collide after replacing whitespace: '" + embedding_token(w) + "'");
        }
    }
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

struct Header {
    std::size_t rows;
    std::size_t dim;
};

std::optional<Header> parse_header(std::string_view line) {
    const auto f = split_ws(line);
    if (f.size() != 2) return std::nullopt;
    const auto r = detail::parse_int(f[0]);
    const auto d = detail::parse_int(f[1]);
    if (!r || !d || *r < 0 || *d <= 0) return std::nullopt;
    return Header{static_cast<std::size_t>(*r), static_cast<std::size_t>(*d)};
}

void add_row(EmbeddingMatrix& e, std::vector<double>& values, std::string word, const std::vector<double>& row,
             const std::string& source, std::size_t line) {
    if (e.vocab.contains(word)) throw ParseError(source, line, "duplicate word '" + word + "'");
    e.vocab.add(std::move(word));
    values.insert(values.end(), row.begin(), row.end());
}

EmbeddingMatrix finish(EmbeddingMatrix e, const std::vector<double>& values, std::size_t dim) {
    e.vectors.resize(static_cast<Eigen::Index>(e.vocab.size()), static_cast<Eigen::Index>(dim));
    std::copy(values.begin(), values.end(), e.vectors.data());
    return e;
}

}  // namespace

void write_embeddings_text(const EmbeddingMatrix& e, std::ostream& out) {
    check_writable(e);
    out << e.size() << ' ' << e.dim() << '\n';
    for (std::size_t i = 0; i < e.size(); ++i) {
        out << embedding_token(e.vocab.word(i));
        for (Eigen::Index k = 0; k < e.vectors.cols(); ++k) {
            out << ' ' << detail::format_double(e.vectors(static_cast<Eigen::Index>(i), k));
        }
        out << '\n';
    }
}

void write_embeddings_binary(const EmbeddingMatrix& e, std::ostream& out) {
    check_writable(e);
    out << e.size() << ' ' << e.dim() << '\n';
    for (std::size_t i = 0; i < e.size(); ++i) {
        out << embedding_token(e.vocab.word(i)) << ' ';
        for (Eigen::Index k = 0; k < e.vectors.cols(); ++k) {
            const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(e.vectors(static_cast<Eigen::Index>(i), k)));
            const char bytes[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                                   static_cast<char>((bits >> 16) & 0xff), static_cast<char>((bits >> 24) & 0xff)};
            out.write(bytes, 4);
        }
        out << '\n';
    }
}

EmbeddingMatrix read_embeddings_text(std::istream& in, const std::string& source) {
    EmbeddingMatrix e;
    std::vector<double> values;
    std::optional<Header> header;
    std::size_t dim = 0;
    std::string line;
    std::size_t lineno = 0;
    std::vector<double> row;
    while (detail::read_line(in, line)) {
        ++lineno;
        if (lineno == 1 && (header = parse_header(line))) {
            dim = header->dim;
            continue;
        }
        if (detail::is_blank(line)) continue;
        const auto f = split_ws(line);
        if (f.size() < 2) throw ParseError(source, lineno, "expected a word followed by values");
        if (dim == 0) dim = f.size() - 1;
        if (f.size() - 1 != dim) {
            throw ParseError(source, lineno,
                             "expected " + std::to_string(dim) + " values, got " + std::to_string(f.size() - 1));
        }
        row.resize(dim);
        for (std::size_t k = 0; k < dim; ++k) {
            const auto v = detail::parse_double(f[k + 1]);
            if (!v || !std::isfinite(*v)) {
                throw ParseError(source, lineno, "bad value '" + std::string(f[k + 1]) + "'");
            }
            row[k] = *v;
        }
        add_row(e, values, std::string(f[0]), row, source, lineno);
    }
    if (header && e.size() != header->rows) {
        throw Error(source + ": header declares " + std::to_string(header->rows) + " words but " +
                    std::to_string(e.size()) + " follow");
    }
    if (e.size() == 0) throw Error(source + ": no vectors");
    return finish(std::move(e), values, dim);
}

EmbeddingMatrix read_embeddings_binary(std::istream& in, const std::string& source) {
    std::string line;
    if (!detail::read_line(in, line)) throw Error(source + ": empty file");
    const auto header = parse_header(line);
    if (!header) throw ParseError(source, 1, "expected '<words> <dim>' header");
    EmbeddingMatrix e;
    std::vector<double> values;
    std::vector<double> row(header->dim);
    std::vector<unsigned char> buf(header->dim * 4);
    for (std::size_t i = 0; i < header->rows; ++i) {
        std::string word;
        int c;
        while ((c = in.get()) == '\n') {
        }
        while (c != EOF && c != ' ') {
            word.push_back(static_cast<char>(c));
            c = in.get();
        }
        if (c == EOF) {
            throw Error(source + ": header declares " + std::to_string(header->rows) + " words but " +
                        std::to_string(i) + " follow");
        }
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (in.gcount() != static_cast<std::streamsize>(buf.size())) {
            throw Error(source + ": truncated vector for '" + word + "' (record " + std::to_string(i + 1) + ")");
        }
        for (std::size_t k = 0; k < header->dim; ++k) {
            const unsigned char* p = buf.data() + 4 * k;
            const std::uint32_t bits = std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) |
                                       (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24);
            row[k] = std::bit_cast<float>(bits);
            if (!std::isfinite(row[k])) throw Error(source + ": non-finite value for '" + word + "'");
        }
        add_row(e, values, std::move(word), row, source, i + 2);
    }
    while (in.peek() == '\n') in.get();
    if (in.peek() != std::char_traits<char>::eof()) {
        throw Error(source + ": more records than the header declares");
    }
    if (e.size() == 0) throw Error(source + ": no vectors");
    return finish(std::move(e), values, header->dim);
}

void write_embeddings(const EmbeddingMatrix& e, const std::string& path, EmbeddingFormat format) {
    check_writable(e);
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot open '" + path + "' for writing");
        if (format == EmbeddingFormat::binary) write_embeddings_binary(e, out);
        else write_embeddings_text(e, out);
        out.close();
        if (!out) throw Error("failed writing '" + path + "'");
    }
    bool renamed = false;
    for (const auto& w : e.vocab.words()) renamed = renamed || embedding_token(w) != w;
    const auto side = sidecar_path(path);
    if (!renamed) {
        std::error_code ec;
        fs::remove(side, ec);
        return;
    }
    std::ofstream out(side, std::ios::binary);
    if (!out) throw Error("cannot open '" + side + "' for writing");
    for (std::size_t i = 0; i < e.size(); ++i) {
        if (embedding_token(e.vocab.word(i)) != e.vocab.word(i)) out << i << '\t' << e.vocab.word(i) << '\n';
    }
    out.close();
    if (!out) throw Error("failed writing '" + side + "'");
}

void write_embeddings(const EmbeddingMatrix& e, const std::string& path) {
    write_embeddings(e, path, format_for_path(path));
}

EmbeddingMatrix read_embeddings(const std::string& path, EmbeddingFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open embeddings '" + path + "'");
    EmbeddingMatrix e =
        format == EmbeddingFormat::binary ? read_embeddings_binary(in, path) : read_embeddings_text(in, path);

    const auto side = sidecar_path(path);
    std::ifstream map(side);
    if (!map) return e;
    std::vector<std::string> words = e.vocab.words();
    std::string line;
    std::size_t lineno = 0;
    while (detail::read_line(map, line)) {
        ++lineno;
        if (detail::is_blank(line)) continue;
        const auto f = detail::split(line, '\t');
        const auto row = f.size() == 2 ? detail::parse_int(f[0]) : std::nullopt;
        if (!row || *row < 0 || static_cast<std::size_t>(*row) >= words.size()) {
            throw ParseError(side, lineno, "expected row<TAB>word with a valid row");
        }
        if (embedding_token(std::string(f[1])) != words[static_cast<std::size_t>(*row)]) {
            throw ParseError(side, lineno, "word does not match row token '" + words[static_cast<std::size_t>(*row)] + "'");
        }
        words[static_cast<std::size_t>(*row)] = std::string(f[1]);
    }
    e.vocab = Vocabulary(words);
    return e;
}

EmbeddingMatrix read_embeddings(const std::string& path) { return read_embeddings(path, format_for_path(path)); }

}  // namespace lexemb
