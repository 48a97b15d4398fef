#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lexemb {

using WordId = std::size_t;

/// Lowercases ASCII letters and strips surrounding whitespace. Internal
/// spaces ("ice cream") are kept.
std::string normalize_word(std::string_view word);

/// Ordered set of unique strings with a reverse index. Ids follow insertion
/// order of first occurrence.
class Vocabulary {
public:
    Vocabulary() = default;
    explicit Vocabulary(std::vector<std::string> words);

    /// Returns the id of `word`, inserting it if new.
    WordId add(const std::string& word);

    std::optional<WordId> find(std::string_view word) const;
    bool contains(std::string_view word) const { return find(word).has_value(); }

    /// Throws lexemb::Error if absent.
    WordId at(std::string_view word) const;

    const std::string& word(WordId id) const { return words_.at(id); }
    const std::vector<std::string>& words() const noexcept { return words_; }
    std::size_t size() const noexcept { return words_.size(); }
    bool empty() const noexcept { return words_.empty(); }

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
        return a.words_ == b.words_;
    }

private:
    struct Hash {
        using is_transparent = void;
        std::size_t operator()(std::string_view s) const noexcept {
            return std::hash<std::string_view>{}(s);
        }
    };
    std::vector<std::string> words_;
    std::unordered_map<std::string, WordId, Hash, std::equal_to<>> index_;
};

}  // namespace lexemb
