#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "core/error.hpp"
#include "core/scoring.hpp"

using namespace probgate;
using namespace probgate::scoring;

namespace {

const ReservedLexicon& lex() {
    static const ReservedLexicon instance = ReservedLexicon::default_lexicon();
    return instance;
}

GenerationRecord record_of(std::vector<ScoredToken> tokens, const std::string& id = "r") {
    GenerationRecord record;
    record.id = id;
    record.question = "q";
    record.sql = tokens.empty() ? "" : "SELECT 1";
    record.tokens = std::move(tokens);
    return record;
}

// Token stream where the generator itself tracks which tokens are reserved,
// so the oracle does not depend on the lexicon.
struct FlaggedStream {
    std::vector<ScoredToken> tokens;
    std::vector<bool> reserved;
};

FlaggedStream random_stream(std::mt19937& rng, std::size_t max_tokens = 50) {
    static const char* const kReserved[] = {"SELECT", " FROM", "WHERE", " AND", "count", " BY"};
    std::uniform_int_distribution<std::size_t> len_dist(1, max_tokens);
    std::uniform_real_distribution<double> logprob_dist(-8.0, 0.0);
    std::bernoulli_distribution reserved_dist(0.4);
    std::uniform_int_distribution<std::size_t> keyword_dist(0, std::size(kReserved) - 1);
    std::uniform_int_distribution<int> word_dist(0, 999);

    FlaggedStream stream;
    const std::size_t n = len_dist(rng);
    for (std::size_t i = 0; i < n; ++i) {
        const bool is_kw = reserved_dist(rng);
        ScoredToken token;
        token.text = is_kw ? kReserved[keyword_dist(rng)]
                           : " w" + std::to_string(word_dist(rng));
        token.logprob = logprob_dist(rng);
        stream.tokens.push_back(std::move(token));
        stream.reserved.push_back(is_kw);
    }
    return stream;
}

// Independent filter-sort-slice-mean oracle over the generator's own flags.
double bottom_k_oracle(const FlaggedStream& stream, std::size_t t) {
    std::vector<double> kept;
    for (std::size_t i = 0; i < stream.tokens.size(); ++i) {
        if (!stream.reserved[i]) kept.push_back(stream.tokens[i].logprob);
    }
    if (kept.empty()) {
        for (const auto& token : stream.tokens) kept.push_back(token.logprob);
    }
    std::sort(kept.begin(), kept.end());
    if (kept.size() > t) kept.resize(t);
    double sum = 0.0;
    for (double v : kept) sum += v;
    return sum / static_cast<double>(kept.size());
}

// Three-point distribution {p, (1-p)/2, (1-p)/2} hitting a target entropy,
// found by bisection. Covers (0, ln 3).
std::vector<TokenAlternative> alternatives_with_entropy(double target) {
    const auto entropy = [](double p) {
        const double q = (1.0 - p) / 2.0;
        return -p * std::log(p) - 2.0 * q * std::log(q);
    };
    double lo = 1.0 / 3.0;
    double hi = 1.0 - 1e-12;
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (entropy(mid) > target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double p = 0.5 * (lo + hi);
    const double q = (1.0 - p) / 2.0;
    return {{"a", std::log(p)}, {"b", std::log(q)}, {"c", std::log(q)}};
}

} // namespace

TEST_CASE("bottom-k averages the lowest content logprobs") {
    const auto record = record_of({{"SELECT", -0.9, {}},
                                   {" patients", -2.0, {}},
                                   {"WHERE", -0.1, {}},
                                   {" age", -0.5, {}}});
    const auto score = calc_log_bottom_k(record, 2, lex());
    CHECK(score.value == doctest::Approx(-1.25).epsilon(1e-12));
    CHECK(score.n_considered == 2);
    CHECK_FALSE(score.used_fallback);
}

TEST_CASE("bottom-k of a single content token is that token") {
    const auto record = record_of({{" x", -0.3, {}}});
    const auto score = calc_log_bottom_k(record, 10, lex());
    CHECK(score.value == doctest::Approx(-0.3));
    CHECK(score.n_considered == 1);
}

TEST_CASE("all-reserved records fall back to every token") {
    const auto record = record_of({{"SELECT", -0.2, {}}, {"FROM", -0.4, {}}});
    const auto score = calc_log_bottom_k(record, 10, lex());
    CHECK(score.value == doctest::Approx(-0.3));
    CHECK(score.used_fallback);
    CHECK(score.n_considered == 2);
}

TEST_CASE("constant logprobs average to themselves") {
    const auto record = record_of(
        {{" a", -1.0, {}}, {" b", -1.0, {}}, {"SELECT", -1.0, {}}, {" c", -1.0, {}}});
    for (std::size_t t : {1u, 2u, 10u}) {
        CHECK(calc_log_bottom_k(record, t, lex()).value == doctest::Approx(-1.0));
    }
}

TEST_CASE("empty records are unscorable") {
    CHECK_THROWS_AS(calc_log_bottom_k(record_of({}), 10, lex()), Error);
    CHECK_THROWS_AS(calc_log_bottom_k(record_of({{" x", -1.0, {}}}), 0, lex()), Error);
}

TEST_CASE("bottom-k equals the filter-sort-slice oracle on random streams") {
    std::mt19937 rng(20240517);
    std::uniform_int_distribution<std::size_t> t_dist(1, 15);
    for (int trial = 0; trial < 500; ++trial) {
        const auto stream = random_stream(rng);
        const std::size_t t = t_dist(rng);
        const auto record = record_of(stream.tokens);
        const auto score = calc_log_bottom_k(record, t, lex());
        CHECK(score.value == doctest::Approx(bottom_k_oracle(stream, t)).epsilon(1e-12));
    }
}

TEST_CASE("reserved-token logprobs never influence the score") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        auto stream = random_stream(rng);
        std::size_t reserved_idx = stream.tokens.size();
        bool has_content = false;
        for (std::size_t i = 0; i < stream.tokens.size(); ++i) {
            if (stream.reserved[i] && reserved_idx == stream.tokens.size()) reserved_idx = i;
            if (!stream.reserved[i]) has_content = true;
        }
        if (!has_content || reserved_idx == stream.tokens.size()) continue;
        const auto before = calc_log_bottom_k(record_of(stream.tokens), 5, lex());
        stream.tokens[reserved_idx].logprob = -7.77;
        const auto after = calc_log_bottom_k(record_of(stream.tokens), 5, lex());
        CHECK(before.value == after.value);
    }
}

TEST_CASE("lowering a participating content logprob never raises the score") {
    std::mt19937 rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        auto stream = random_stream(rng);
        std::size_t lowest_content = stream.tokens.size();
        for (std::size_t i = 0; i < stream.tokens.size(); ++i) {
            if (stream.reserved[i]) continue;
            if (lowest_content == stream.tokens.size() ||
                stream.tokens[i].logprob < stream.tokens[lowest_content].logprob) {
                lowest_content = i;
            }
        }
        if (lowest_content == stream.tokens.size()) continue;
        const auto before = calc_log_bottom_k(record_of(stream.tokens), 5, lex());
        stream.tokens[lowest_content].logprob -= 1.5;
        const auto after = calc_log_bottom_k(record_of(stream.tokens), 5, lex());
        CHECK(after.value <= before.value + 1e-12);
    }
}

TEST_CASE("large t degenerates to the plain content mean") {
    std::mt19937 rng(123);
    for (int trial = 0; trial < 100; ++trial) {
        const auto stream = random_stream(rng, 20);
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < stream.tokens.size(); ++i) {
            if (!stream.reserved[i]) {
                sum += stream.tokens[i].logprob;
                ++count;
            }
        }
        if (count == 0) continue;
        const auto score = calc_log_bottom_k(record_of(stream.tokens), 1000, lex());
        CHECK(score.value == doctest::Approx(sum / static_cast<double>(count)).epsilon(1e-12));
        CHECK(score.n_considered == count);
    }
}

TEST_CASE("entropy of a certain token is zero") {
    const auto record = record_of({{" a", -0.1, {{"a", 0.0}}}, {" b", -0.2, {{"b", 0.0}}}});
    const auto score = max_entropy_score(record);
    CHECK(score.value == doctest::Approx(0.0));
}

TEST_CASE("uniform two-way alternatives give entropy ln 2") {
    const double half = std::log(0.5);
    const auto record = record_of({{" a", half, {{"x", half}, {"y", half}}}});
    const auto score = max_entropy_score(record);
    CHECK(score.value == doctest::Approx(-std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("record entropy is the maximum over tokens") {
    const auto record = record_of({
        {" a", -0.1, alternatives_with_entropy(0.1)},
        {" b", -0.1, alternatives_with_entropy(0.9)},
        {" c", -0.1, alternatives_with_entropy(0.4)},
    });
    const auto score = max_entropy_score(record);
    CHECK(score.value == doctest::Approx(-0.9).epsilon(1e-6));
}

TEST_CASE("entropy renormalizes unnormalized alternatives") {
    // two alternatives with equal logprob renormalize to uniform regardless
    // of their absolute mass
    const auto record = record_of({{" a", -3.0, {{"x", -3.0}, {"y", -3.0}}}});
    CHECK(max_entropy_score(record).value == doctest::Approx(-std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("entropy scorer demands alternatives") {
    const auto record = record_of({{" a", -0.1, {{"a", -0.1}}}, {" b", -0.2, {}}});
    try {
        max_entropy_score(record);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("use the probgate scorer") != std::string::npos);
    }
}

TEST_CASE("score_dataset keeps order and degrades unscorable records") {
    std::vector<GenerationRecord> records;
    records.push_back(record_of({{" a", -0.5, {}}}, "q1"));
    records.push_back(record_of({}, "q2")); // empty generation
    records.push_back(record_of({{" b", -1.5, {}}}, "q3"));

    std::vector<std::string> warnings;
    const auto scores = score_dataset(records, ScorerConfig{}, lex(), &warnings);
    REQUIRE(scores.size() == 3);
    CHECK(scores[0].id == "q1");
    CHECK(scores[1].id == "q2");
    CHECK(scores[2].id == "q3");
    CHECK(scores[1].value == kUnscorableValue);
    CHECK(scores[1].unscorable());
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("q2") != std::string::npos);

    // permuting the input permutes the output identically
    std::swap(records[0], records[2]);
    const auto swapped = score_dataset(records, ScorerConfig{}, lex());
    CHECK(swapped[0].id == "q3");
    CHECK(swapped[2].id == "q1");
    CHECK(swapped[0].value == scores[2].value);
}

TEST_CASE("score_dataset under the entropy scorer degrades missing alternatives") {
    std::vector<GenerationRecord> records;
    records.push_back(record_of({{" a", -0.5, {}}}, "q1")); // no alternatives
    std::vector<std::string> warnings;
    const auto scores =
        score_dataset(records, ScorerConfig{ScorerKind::MaxEntropy, 10}, lex(), &warnings);
    REQUIRE(scores.size() == 1);
    CHECK(scores[0].unscorable());
    CHECK(warnings.size() == 1);
}
