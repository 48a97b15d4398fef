#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <ostream>

#include "lexemb/brain.hpp"
#include "lexemb/error.hpp"
#include "text_util.hpp"

namespace lexemb {

namespace {

constexpr std::string_view kMagic = "LXFMRI 1";

void put_f32(std::ostream& out, double v) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    const char bytes[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                           static_cast<char>((bits >> 16) & 0xff), static_cast<char>((bits >> 24) & 0xff)};
    out.write(bytes, 4);
}

float get_f32(const unsigned char* p) {
    const std::uint32_t bits = std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
                               (std::uint32_t{p[3]} << 24);
    return std::bit_cast<float>(bits);
}

std::size_t parse_count(std::string_view s, const std::string& source, std::size_t line, const char* what) {
    const auto v = detail::parse_int(s);
    if (!v || *v < 0) throw ParseError(source, line, std::string("bad ") + what + " '" + std::string(s) + "'");
    return static_cast<std::size_t>(*v);
}

std::array<std::size_t, 3> parse_grid(const std::vector<std::string_view>& f, const std::string& source,
                                      std::size_t line) {
    if (f.size() != 4) throw ParseError(source, line, "grid needs three dimensions");
    return {parse_count(f[1], source, line, "grid dimension"), parse_count(f[2], source, line, "grid dimension"),
            parse_count(f[3], source, line, "grid dimension")};
}

}  // namespace

std::size_t FmriDataset::min_presentations() const {
    std::size_t m = presentations.empty() ? 0 : presentations.front().rows();
    for (const auto& p : presentations) m = std::min<std::size_t>(m, static_cast<std::size_t>(p.rows()));
    return m;
}

void FmriDataset::validate() const {
    if (words.empty()) throw Error("fMRI dataset has no words");
    if (presentations.size() != words.size()) throw Error("fMRI dataset: one presentation block per word required");
    if (voxel_count == 0) throw Error("fMRI dataset has no voxels");
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (presentations[i].rows() == 0) throw Error("fMRI word '" + words[i] + "' has no presentations");
        if (static_cast<std::size_t>(presentations[i].cols()) != voxel_count) {
            throw Error("fMRI word '" + words[i] + "' has the wrong number of voxels");
        }
        require_finite(presentations[i], "fMRI activations");
    }
    std::vector<std::string> sorted = words;
    std::sort(sorted.begin(), sorted.end());
    if (auto it = std::adjacent_find(sorted.begin(), sorted.end()); it != sorted.end()) {
        throw Error("fMRI dataset lists word '" + *it + "' twice");
    }
}

void write_fmri_binary(const FmriDataset& d, std::ostream& out) {
    d.validate();
    out << kMagic << '\n';
    out << "participant\t" << d.participant_id << '\n';
    out << "voxel_count\t" << d.voxel_count << '\n';
    out << "grid\t" << d.grid_dims[0] << '\t' << d.grid_dims[1] << '\t' << d.grid_dims[2] << '\n';
    out << "voxel_size\t" << d.voxel_size << '\n';
    out << "words\t" << d.words.size() << '\n';
    for (std::size_t i = 0; i < d.words.size(); ++i) out << d.words[i] << '\t' << d.presentations[i].rows() << '\n';
    out << "end_header\n";
    for (const auto& block : d.presentations) {
        for (Eigen::Index k = 0; k < block.size(); ++k) put_f32(out, block.data()[k]);
    }
    if (!out) throw Error("failed writing fMRI file");
}

FmriDataset read_fmri_binary(std::istream& in, const std::string& source) {
    FmriDataset d;
    std::string line;
    std::size_t lineno = 0;
    auto next = [&](const char* expect) {
        if (!detail::read_line(in, line)) {
            throw ParseError(source, lineno + 1, std::string("header ends before '") + expect + "'");
        }
        ++lineno;
        auto f = detail::split(line, '\t');
        if (f.front() != expect) throw ParseError(source, lineno, std::string("expected '") + expect + "'");
        return f;
    };
    if (!detail::read_line(in, line) || line != kMagic) throw ParseError(source, 1, "not an LXFMRI file");
    ++lineno;
    auto f = next("participant");
    d.participant_id = f.size() > 1 ? std::string(f[1]) : "";
    f = next("voxel_count");
    if (f.size() != 2) throw ParseError(source, lineno, "voxel_count needs one value");
    d.voxel_count = parse_count(f[1], source, lineno, "voxel count");
    f = next("grid");
    d.grid_dims = parse_grid(f, source, lineno);
    f = next("voxel_size");
    d.voxel_size = f.size() > 1 ? std::string(f[1]) : "";
    f = next("words");
    if (f.size() != 2) throw ParseError(source, lineno, "words needs one value");
    const std::size_t n_words = parse_count(f[1], source, lineno, "word count");
    std::vector<std::size_t> counts;
    for (std::size_t i = 0; i < n_words; ++i) {
        if (!detail::read_line(in, line)) throw ParseError(source, lineno + 1, "header ends inside the word list");
        ++lineno;
        const auto w = detail::split(line, '\t');
        if (w.size() != 2) throw ParseError(source, lineno, "expected word<TAB>n_presentations");
        d.words.emplace_back(w[0]);
        counts.push_back(parse_count(w[1], source, lineno, "presentation count"));
    }
    next("end_header");

    std::vector<unsigned char> buf(d.voxel_count * 4);
    for (std::size_t i = 0; i < n_words; ++i) {
        RowMatrix block(static_cast<Eigen::Index>(counts[i]), static_cast<Eigen::Index>(d.voxel_count));
        for (Eigen::Index r = 0; r < block.rows(); ++r) {
            in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
            if (in.gcount() != static_cast<std::streamsize>(buf.size())) {
                throw Error(source + ": truncated record for word '" + d.words[i] + "' presentation " +
                            std::to_string(r));
            }
            for (std::size_t v = 0; v < d.voxel_count; ++v) {
                block(r, static_cast<Eigen::Index>(v)) = get_f32(buf.data() + 4 * v);
            }
        }
        d.presentations.push_back(std::move(block));
    }
    if (in.peek() != std::char_traits<char>::eof()) throw Error(source + ": trailing bytes after last record");
    d.validate();
    return d;
}

void write_fmri_tsv(const FmriDataset& d, std::ostream& out) {
    d.validate();
    out << "#!participant\t" << d.participant_id << '\n';
    out << "#!grid\t" << d.grid_dims[0] << '\t' << d.grid_dims[1] << '\t' << d.grid_dims[2] << '\n';
    out << "#!voxel_size\t" << d.voxel_size << '\n';
    for (std::size_t i = 0; i < d.words.size(); ++i) {
        const auto& block = d.presentations[i];
        for (Eigen::Index r = 0; r < block.rows(); ++r) {
            out << d.words[i] << '\t' << r;
            for (Eigen::Index v = 0; v < block.cols(); ++v) out << '\t' << detail::format_double(block(r, v));
            out << '\n';
        }
    }
    if (!out) throw Error("failed writing fMRI TSV");
}

FmriDataset read_fmri_tsv(std::istream& in, const std::string& source) {
    FmriDataset d;
    std::map<std::string, std::size_t> index;
    std::vector<std::map<std::int64_t, std::vector<double>>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (detail::read_line(in, line)) {
        ++lineno;
        if (detail::is_blank(line)) continue;
        const auto f = detail::split(line, '\t');
        if (line.starts_with("#!")) {
            const auto key = f.front().substr(2);
            if (key == "participant") d.participant_id = f.size() > 1 ? std::string(f[1]) : "";
            else if (key == "voxel_size") d.voxel_size = f.size() > 1 ? std::string(f[1]) : "";
            else if (key == "grid") d.grid_dims = parse_grid(f, source, lineno);
            else throw ParseError(source, lineno, "unknown directive '" + std::string(key) + "'");
            continue;
        }
        if (line.front() == '#') continue;
        if (f.size() < 3) throw ParseError(source, lineno, "expected word<TAB>presentation<TAB>values...");
        const std::size_t n_vox = f.size() - 2;
        if (d.voxel_count == 0) d.voxel_count = n_vox;
        if (n_vox != d.voxel_count) {
            throw ParseError(source, lineno,
                             "expected " + std::to_string(d.voxel_count) + " voxels, got " + std::to_string(n_vox));
        }
        const std::string word(f[0]);
        if (word.empty()) throw ParseError(source, lineno, "empty word");
        const auto pres = detail::parse_int(f[1]);
        if (!pres) throw ParseError(source, lineno, "bad presentation index '" + std::string(f[1]) + "'");
        std::vector<double> values(n_vox);
        for (std::size_t v = 0; v < n_vox; ++v) {
            const auto x = detail::parse_double(f[v + 2]);
            if (!x || !std::isfinite(*x)) throw ParseError(source, lineno, "bad value in column " + std::to_string(v + 3));
            values[v] = *x;
        }
        auto [it, inserted] = index.try_emplace(word, d.words.size());
        if (inserted) {
            d.words.push_back(word);
            rows.emplace_back();
        }
        if (!rows[it->second].emplace(*pres, std::move(values)).second) {
            throw ParseError(source, lineno, "duplicate presentation " + std::to_string(*pres) + " for '" + word + "'");
        }
    }
    for (const auto& per_word : rows) {
        RowMatrix block(static_cast<Eigen::Index>(per_word.size()), static_cast<Eigen::Index>(d.voxel_count));
        Eigen::Index r = 0;
        for (const auto& [pres, values] : per_word) {
            for (std::size_t v = 0; v < values.size(); ++v) block(r, static_cast<Eigen::Index>(v)) = values[v];
            ++r;
        }
        d.presentations.push_back(std::move(block));
    }
    d.validate();
    return d;
}

FmriDataset load_fmri(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open fMRI file '" + path + "'");
    char head[8] = {};
    in.read(head, sizeof head);
    const bool binary = in.gcount() == 8 && std::string_view(head, 8) == kMagic;
    in.clear();
    in.seekg(0);
    return binary ? read_fmri_binary(in, path) : read_fmri_tsv(in, path);
}

void save_fmri(const FmriDataset& d, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write fMRI file '" + path + "'");
    if (path.ends_with(".tsv")) write_fmri_tsv(d, out);
    else write_fmri_binary(d, out);
    out.close();
    if (!out) throw Error("failed writing fMRI file '" + path + "'");
}

}  // namespace lexemb
