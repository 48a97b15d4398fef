#include "lexemb/vocabulary.hpp"

#include <algorithm>
#include <cctype>

#include "lexemb/error.hpp"

namespace lexemb {

std::string normalize_word(std::string_view word) {
    auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!word.empty() && is_space(word.front())) word.remove_prefix(1);
    while (!word.empty() && is_space(word.back())) word.remove_suffix(1);
    std::string out(word);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
        return static_cast<char>(std::tolower(c));
    });
    return out;
}

Vocabulary::Vocabulary(std::vector<std::string> words) {
    words_.reserve(words.size());
    for (auto& w : words) {
        if (index_.contains(w)) throw Error("duplicate vocabulary entry '" + w + "'");
        add(w);
    }
}

WordId Vocabulary::add(const std::string& word) {
    if (auto it = index_.find(word); it != index_.end()) return it->second;
    const WordId id = words_.size();
    words_.push_back(word);
    index_.emplace(word, id);
    return id;
}

std::optional<WordId> Vocabulary::find(std::string_view word) const {
    if (auto it = index_.find(word); it != index_.end()) return it->second;
    return std::nullopt;
}

WordId Vocabulary::at(std::string_view word) const {
    if (auto id = find(word)) return *id;
    throw Error("word not in vocabulary: '" + std::string(word) + "'");
}

}  // namespace lexemb
