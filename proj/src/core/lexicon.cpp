#include "core/lexicon.hpp"

#include <cctype>
#include <sstream>
#include <vector>

namespace probgate {

namespace {

// Shipped reserved-word list. Keywords plus type and date-part names that
// show up inside SQL as structure rather than content.
const char* const kDefaultEntries[] = {
    "SELECT", "AS", "IN", "COUNT", "FROM", "WHERE", "AND", "OR", "INSERT",
    "UPDATE", "DELETE", "CREATE", "DROP", "ALTER", "JOIN", "ON", "GROUP BY",
    "ORDER BY", "HAVING", "LIMIT", "UNION", "DISTINCT", "INDEX", "TABLE",
    "VIEW", "TRIGGER", "PRIMARY KEY", "FOREIGN KEY", "NULL", "NOT NULL",
    "UNIQUE", "CHECK", "DEFAULT", "INDEX", "SEQUENCE", "EXEC", "LIKE",
    "BETWEEN", "EXISTS", "CASE", "WHEN", "THEN", "ELSE", "END", "CAST",
    "CHAR", "VARCHAR", "BOOLEAN", "INTEGER", "DATE", "INTERVAL", "TIME",
    "TIMESTAMP", "YEAR", "MONTH", "DAY", "HOUR", "MINUTE", "SECOND", "ZONE",
    "CURRENT_DATE", "CURRENT_TIME", "CURRENT_TIMESTAMP", "TRUE", "FALSE",
};

bool is_space_char(unsigned char c) { return std::isspace(c) != 0; }

} // namespace

std::string trim_copy(const std::string& s) {
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end && is_space_char(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && is_space_char(static_cast<unsigned char>(s[end - 1]))) --end;
    return s.substr(begin, end - begin);
}

std::string upper_copy(const std::string& s) {
    std::string out = s;
    for (char& c : out) {
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    return out;
}

void ReservedLexicon::add_entry(const std::string& entry) {
    const std::string normalized = upper_copy(trim_copy(entry));
    if (normalized.empty()) {
        return;
    }
    words_.insert(normalized);
    // Decompose "GROUP BY" into "GROUP" and "BY" so (sub)word-level
    // generator tokens can match the entry at all.
    std::istringstream parts(normalized);
    std::string word;
    while (parts >> word) {
        words_.insert(word);
    }
}

ReservedLexicon ReservedLexicon::default_lexicon() {
    ReservedLexicon lex;
    for (const char* entry : kDefaultEntries) {
        lex.add_entry(entry);
    }
    return lex;
}

ReservedLexicon ReservedLexicon::from_words(const std::vector<std::string>& entries) {
    ReservedLexicon lex;
    for (const auto& entry : entries) {
        lex.add_entry(entry);
    }
    return lex;
}

bool is_reserved(const std::string& token_text, const ReservedLexicon& lex) {
    const std::string trimmed = trim_copy(token_text);
    if (trimmed.empty()) {
        return true;
    }
    bool all_punct = true;
    for (char c : trimmed) {
        if (std::ispunct(static_cast<unsigned char>(c)) == 0) {
            all_punct = false;
            break;
        }
    }
    if (all_punct) {
        return true;
    }
    return lex.contains(upper_copy(trimmed));
}

} // namespace probgate
