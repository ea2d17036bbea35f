#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "core/model.hpp"

namespace probgate::gating {

/// Execution accuracy per record id (1 correct, 0 wrong), for answerable
/// records. Unanswerable ids need no entry.
using AccuracyMap = std::unordered_map<std::string, int>;

/// Abstains on exactly the k lowest-confidence records. Ties are broken by
/// ascending id so runs are reproducible. Decisions come back in the input
/// order of `scores`.
std::vector<GateDecision> gate_by_rank(const std::vector<ConfidenceScore>& scores,
                                       std::size_t k);

/// Abstains on records scoring strictly below `threshold`; the boundary
/// score answers.
std::vector<GateDecision> gate_by_absolute(const std::vector<ConfidenceScore>& scores,
                                           double threshold);

/// round(n * fraction), half away from zero.
std::size_t k_from_fraction(std::size_t n, double fraction);

/// Recovers the model's accuracy on answerable questions from the score of
/// an answer-everything run at penalty 0: only correct answers contribute
/// there, so rs0 = 100 * accuracy * (1 - unanswerable_fraction).
double infer_answerable_accuracy(double rs0_answer_all, double unanswerable_fraction);

struct SweepResult {
    std::size_t k_star = 0;
    double rs_star = 0.0;
    std::vector<std::pair<std::size_t, double>> curve; // (k, rs) for k in 0..N
};

/// Evaluates the reliability score at every rank-gate threshold k in 0..N
/// and returns the maximizer (smallest k on ties) with the full curve.
SweepResult sweep_k(const std::vector<ConfidenceScore>& scores,
                    const std::vector<EvalLabel>& labels,
                    const AccuracyMap& accuracy,
                    const RsConfig& penalty);

} // namespace probgate::gating
