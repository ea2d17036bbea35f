#pragma once

#include <string>
#include <unordered_set>
#include <vector>

namespace probgate {

/// Set of SQL reserved words used to split generated tokens into structure
/// (keywords, punctuation) and content (entities, attributes, literals).
/// Multi-word entries are stored both whole and decomposed into their
/// constituent words, since generator tokens never span two words.
class ReservedLexicon {
public:
    static ReservedLexicon default_lexicon();

    /// Builds a lexicon from caller-supplied entries, replacing (not
    /// extending) the default list. Entries are normalized and decomposed
    /// the same way the default list is.
    static ReservedLexicon from_words(const std::vector<std::string>& entries);

    bool contains(const std::string& upper_word) const {
        return words_.count(upper_word) != 0;
    }

    std::size_t size() const noexcept { return words_.size(); }

private:
    void add_entry(const std::string& entry);

    std::unordered_set<std::string> words_;
};

/// True when the token should be excluded from confidence scoring:
/// its trimmed, uppercased text is a reserved word, or the token is
/// whitespace-only, or it consists solely of punctuation.
bool is_reserved(const std::string& token_text, const ReservedLexicon& lex);

std::string trim_copy(const std::string& s);
std::string upper_copy(const std::string& s);

} // namespace probgate
