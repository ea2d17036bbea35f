#include <doctest.h>

#include <cctype>
#include <string>

#include "core/lexicon.hpp"

using namespace probgate;

namespace {

// The single-word entries of the shipped list, used for the membership
// property below.
const char* const kSingleWords[] = {
    "SELECT", "AS", "IN", "COUNT", "FROM", "WHERE", "AND", "OR", "INSERT", "UPDATE", "DELETE",
    "CREATE", "DROP", "ALTER", "JOIN", "ON", "HAVING", "LIMIT", "UNION", "DISTINCT", "INDEX",
    "TABLE", "VIEW", "TRIGGER", "NULL", "UNIQUE", "CHECK", "DEFAULT", "SEQUENCE", "EXEC", "LIKE",
    "BETWEEN", "EXISTS", "CASE", "WHEN", "THEN", "ELSE", "END", "CAST", "CHAR", "VARCHAR",
    "BOOLEAN", "INTEGER", "DATE", "INTERVAL", "TIME", "TIMESTAMP", "YEAR", "MONTH", "DAY", "HOUR",
    "MINUTE", "SECOND", "ZONE", "CURRENT_DATE", "CURRENT_TIME", "CURRENT_TIMESTAMP", "TRUE",
    "FALSE",
};

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

} // namespace

TEST_CASE("default lexicon ships the reserved list") {
    const auto lex = ReservedLexicon::default_lexicon();
    CHECK(lex.contains("SELECT"));
    CHECK(lex.contains("GROUP BY"));
    CHECK(lex.contains("CURRENT_TIMESTAMP"));
    CHECK_FALSE(lex.contains("PATIENTS"));
    CHECK(lex.size() >= 60);
}

TEST_CASE("multi-word entries decompose into constituents") {
    const auto lex = ReservedLexicon::default_lexicon();
    CHECK(lex.contains("GROUP"));
    CHECK(lex.contains("BY"));
    CHECK(lex.contains("ORDER"));
    CHECK(lex.contains("PRIMARY"));
    CHECK(lex.contains("KEY"));
    CHECK(lex.contains("FOREIGN"));
    CHECK(lex.contains("NOT"));
}

TEST_CASE("is_reserved normalizes whitespace and case") {
    const auto lex = ReservedLexicon::default_lexicon();
    CHECK(is_reserved(" SELECT", lex));
    CHECK(is_reserved("count", lex));
    CHECK_FALSE(is_reserved(" patients", lex));
}

TEST_CASE("whitespace and punctuation tokens are structural") {
    const auto lex = ReservedLexicon::default_lexicon();
    CHECK(is_reserved(",", lex));
    CHECK(is_reserved("  ", lex));
    CHECK(is_reserved("", lex));
    CHECK(is_reserved(" ( ", lex));
    CHECK(is_reserved("*", lex));
    CHECK_FALSE(is_reserved("t1.age", lex)); // mixed content stays content
}

TEST_CASE("subword fragments do not match") {
    const auto lex = ReservedLexicon::default_lexicon();
    CHECK_FALSE(is_reserved("SEL", lex));
    CHECK_FALSE(is_reserved("ECT", lex));
}

TEST_CASE("every single-word entry matches in both cases") {
    const auto lex = ReservedLexicon::default_lexicon();
    for (const char* word : kSingleWords) {
        CAPTURE(word);
        CHECK(is_reserved(word, lex));
        CHECK(is_reserved(lower(word), lex));
        CHECK(is_reserved(" " + std::string(word), lex));
    }
}

TEST_CASE("override lexicon replaces the default") {
    const auto lex = ReservedLexicon::from_words({"FOO", "bar baz"});
    CHECK(is_reserved("foo", lex));
    CHECK(is_reserved("BAR", lex));  // decomposition applies to overrides too
    CHECK(is_reserved("baz", lex));
    CHECK_FALSE(is_reserved("SELECT", lex));
}
