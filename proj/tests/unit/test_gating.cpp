#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "core/error.hpp"
#include "core/gating.hpp"

using namespace probgate;
using namespace probgate::gating;

namespace {

std::vector<ConfidenceScore> scores_of(std::initializer_list<std::pair<const char*, double>> init) {
    std::vector<ConfidenceScore> scores;
    for (const auto& [id, value] : init) {
        scores.push_back(ConfidenceScore{id, value, 1, false});
    }
    return scores;
}

std::set<std::string> abstained_ids(const std::vector<GateDecision>& decisions) {
    std::set<std::string> ids;
    for (const auto& d : decisions) {
        if (!d.answer) ids.insert(d.id);
    }
    return ids;
}

std::vector<ConfidenceScore> random_scores(std::mt19937& rng, std::size_t n,
                                           bool with_ties = false) {
    std::uniform_real_distribution<double> value_dist(-6.0, 0.0);
    std::uniform_int_distribution<int> tie_dist(0, 3);
    std::vector<ConfidenceScore> scores;
    scores.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        double v = value_dist(rng);
        if (with_ties && tie_dist(rng) == 0) {
            v = std::floor(v); // force collisions
        }
        scores.push_back(ConfidenceScore{"id" + std::to_string(i), v, 1, false});
    }
    return scores;
}

// Sort-based oracle for the k-smallest set under (value, id).
std::set<std::string> k_smallest_oracle(std::vector<ConfidenceScore> scores, std::size_t k) {
    std::sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) {
        return a.value != b.value ? a.value < b.value : a.id < b.id;
    });
    std::set<std::string> ids;
    for (std::size_t i = 0; i < k; ++i) ids.insert(scores[i].id);
    return ids;
}

} // namespace

TEST_CASE("rank gate abstains on the k lowest scores") {
    const auto scores = scores_of({{"a", -3.0}, {"b", -1.0}, {"c", -2.0}});

    SUBCASE("k = 0 passes everything") {
        const auto decisions = gate_by_rank(scores, 0);
        CHECK(abstained_ids(decisions).empty());
        for (const auto& d : decisions) CHECK(d.stage == GateStage::Pass);
    }
    SUBCASE("k = 2 gates the two lowest") {
        const auto decisions = gate_by_rank(scores, 2);
        CHECK(abstained_ids(decisions) == std::set<std::string>{"a", "c"});
        CHECK(decisions[0].stage == GateStage::RankGate);
        CHECK(decisions[1].stage == GateStage::Pass);
        CHECK(decisions[2].stage == GateStage::RankGate);
    }
    SUBCASE("k beyond the dataset errors") {
        CHECK_THROWS_AS(gate_by_rank(scores, 4), Error);
    }
}

TEST_CASE("rank gate breaks score ties by ascending id") {
    const auto scores = scores_of({{"b", -2.0}, {"a", -2.0}});
    const auto decisions = gate_by_rank(scores, 1);
    CHECK(abstained_ids(decisions) == std::set<std::string>{"a"});
}

TEST_CASE("rank gate matches the sort oracle on random inputs") {
    std::mt19937 rng(31337);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng() % 40;
        const auto scores = random_scores(rng, n, trial % 2 == 0);
        const std::size_t k = rng() % (n + 1);
        CHECK(abstained_ids(gate_by_rank(scores, k)) == k_smallest_oracle(scores, k));
    }
}

TEST_CASE("abstain sets nest as k grows") {
    std::mt19937 rng(4242);
    const auto scores = random_scores(rng, 30, true);
    std::set<std::string> previous;
    for (std::size_t k = 0; k <= scores.size(); ++k) {
        const auto current = abstained_ids(gate_by_rank(scores, k));
        CHECK(current.size() == k);
        CHECK(std::includes(current.begin(), current.end(), previous.begin(), previous.end()));
        previous = current;
    }
}

TEST_CASE("rank gate is invariant under strictly increasing transforms") {
    std::mt19937 rng(555);
    const auto scores = random_scores(rng, 25, true);
    const auto transforms = {
        +[](double v) { return 0.5 * v - 0.1; },
        +[](double v) { return -std::exp(-0.3 * v); },
    };
    for (const auto& transform : transforms) {
        auto transformed = scores;
        for (auto& s : transformed) s.value = transform(s.value);
        for (std::size_t k : {0UL, 5UL, 12UL, 25UL}) {
            CHECK(abstained_ids(gate_by_rank(scores, k)) ==
                  abstained_ids(gate_by_rank(transformed, k)));
        }
    }
}

TEST_CASE("absolute gate uses a strict boundary") {
    const auto scores = scores_of({{"a", -3.0}, {"b", -1.0}, {"c", -2.5}});
    const auto decisions = gate_by_absolute(scores, -2.5);
    CHECK(abstained_ids(decisions) == std::set<std::string>{"a"}); // c sits on the boundary
    CHECK(abstained_ids(gate_by_absolute(scores, -10.0)).empty());
}

TEST_CASE("k_from_fraction rounds half away from zero") {
    CHECK(k_from_fraction(1167, 0.1997) == 233);
    CHECK(k_from_fraction(100, 0.0) == 0);
    CHECK(k_from_fraction(10, 0.5) == 5);
    CHECK(k_from_fraction(10, 0.25) == 3); // 2.5 rounds away from zero
    CHECK_THROWS_AS(k_from_fraction(10, 1.5), Error);
}

TEST_CASE("answerable accuracy falls out of the answer-all score") {
    CHECK(infer_answerable_accuracy(73.52, 0.1997) == doctest::Approx(0.9187).epsilon(5e-4));
    CHECK(infer_answerable_accuracy(0.0, 0.5) == doctest::Approx(0.0));
    CHECK(infer_answerable_accuracy(100.0, 0.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(infer_answerable_accuracy(90.0, 0.5), Error); // implies accuracy 1.8
}

namespace {

struct SweepFixture {
    std::vector<ConfidenceScore> scores;
    std::vector<EvalLabel> labels;
    AccuracyMap accuracy;
};

SweepFixture random_sweep_fixture(std::mt19937& rng, std::size_t n) {
    std::uniform_real_distribution<double> value_dist(-5.0, 0.0);
    std::bernoulli_distribution answerable_dist(0.7);
    std::bernoulli_distribution correct_dist(0.8);
    SweepFixture fx;
    for (std::size_t i = 0; i < n; ++i) {
        const std::string id = "s" + std::to_string(i);
        fx.scores.push_back(ConfidenceScore{id, value_dist(rng), 1, false});
        if (answerable_dist(rng)) {
            fx.labels.push_back(EvalLabel{id, "SELECT 1"});
            fx.accuracy[id] = correct_dist(rng) ? 1 : 0;
        } else {
            fx.labels.push_back(EvalLabel{id, std::nullopt});
        }
    }
    return fx;
}

// Re-evaluates the reliability score at one k from first principles.
double rs_at_k(const SweepFixture& fx, std::size_t k, const RsConfig& penalty) {
    auto scores = fx.scores;
    std::sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) {
        return a.value != b.value ? a.value < b.value : a.id < b.id;
    });
    std::set<std::string> abstain;
    for (std::size_t i = 0; i < k; ++i) abstain.insert(scores[i].id);

    const double c = resolve_penalty(penalty, fx.scores.size());
    double sum = 0.0;
    for (const auto& label : fx.labels) {
        const bool abstained = abstain.count(label.id) > 0;
        if (label.answerable()) {
            if (abstained) {
                sum += 0.0;
            } else {
                sum += fx.accuracy.at(label.id) == 1 ? 1.0 : -c;
            }
        } else {
            sum += abstained ? 1.0 : -c;
        }
    }
    return 100.0 * sum / static_cast<double>(fx.labels.size());
}

} // namespace

TEST_CASE("sweep maximizes the reliability score over k") {
    std::mt19937 rng(2718);
    for (int trial = 0; trial < 25; ++trial) {
        const auto fx = random_sweep_fixture(rng, 10 + rng() % 30);
        const RsConfig penalty = trial % 2 == 0 ? RsConfig::fixed(5) : RsConfig::n_samples();
        const auto result = sweep_k(fx.scores, fx.labels, fx.accuracy, penalty);

        REQUIRE(result.curve.size() == fx.scores.size() + 1);
        double best = rs_at_k(fx, 0, penalty);
        std::size_t best_k = 0;
        for (std::size_t k = 0; k <= fx.scores.size(); ++k) {
            const double rs = rs_at_k(fx, k, penalty);
            CHECK(result.curve[k].second == doctest::Approx(rs).epsilon(1e-9));
            if (rs > best) {
                best = rs;
                best_k = k;
            }
        }
        CHECK(result.k_star == best_k);
        CHECK(result.rs_star == doctest::Approx(best).epsilon(1e-9));
    }
}

TEST_CASE("sweep degenerate cases") {
    SUBCASE("perfect model never abstains") {
        SweepFixture fx;
        for (int i = 0; i < 8; ++i) {
            const std::string id = "p" + std::to_string(i);
            fx.scores.push_back(ConfidenceScore{id, -0.1 * i, 1, false});
            fx.labels.push_back(EvalLabel{id, "SELECT 1"});
            fx.accuracy[id] = 1;
        }
        const auto result = sweep_k(fx.scores, fx.labels, fx.accuracy, RsConfig::fixed(10));
        CHECK(result.k_star == 0);
        CHECK(result.rs_star == doctest::Approx(100.0));
    }
    SUBCASE("all-unanswerable data abstains everywhere") {
        SweepFixture fx;
        for (int i = 0; i < 8; ++i) {
            const std::string id = "u" + std::to_string(i);
            fx.scores.push_back(ConfidenceScore{id, -0.1 * i, 1, false});
            fx.labels.push_back(EvalLabel{id, std::nullopt});
        }
        const auto result = sweep_k(fx.scores, fx.labels, fx.accuracy, RsConfig::fixed(10));
        CHECK(result.k_star == fx.scores.size());
        CHECK(result.rs_star == doctest::Approx(100.0));
    }
}

TEST_CASE("sweep demands total label and accuracy coverage") {
    std::vector<ConfidenceScore> scores = {{"a", -1.0, 1, false}};
    CHECK_THROWS_AS(sweep_k(scores, {}, {}, RsConfig::fixed(5)), Error);
    std::vector<EvalLabel> labels = {{"a", "SELECT 1"}};
    CHECK_THROWS_AS(sweep_k(scores, labels, {}, RsConfig::fixed(5)), Error);
}
