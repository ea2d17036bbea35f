#include "core/gating.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/error.hpp"

namespace probgate::gating {

namespace {

// Indices of `scores` sorted by (value ascending, id ascending): the total
// order both gates and the sweep share.
std::vector<std::size_t> ascending_order(const std::vector<ConfidenceScore>& scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a].value != scores[b].value) return scores[a].value < scores[b].value;
        return scores[a].id < scores[b].id;
    });
    return order;
}

} // namespace

std::vector<GateDecision> gate_by_rank(const std::vector<ConfidenceScore>& scores,
                                       std::size_t k) {
    if (k > scores.size()) {
        throw_argument("gate_by_rank: k (" + std::to_string(k) + ") exceeds score count (" +
                       std::to_string(scores.size()) + ")");
    }
    const auto order = ascending_order(scores);
    std::vector<GateDecision> decisions(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        decisions[i] = GateDecision{scores[i].id, true, GateStage::Pass};
    }
    for (std::size_t rank = 0; rank < k; ++rank) {
        auto& d = decisions[order[rank]];
        d.answer = false;
        d.stage = GateStage::RankGate;
    }
    return decisions;
}

std::vector<GateDecision> gate_by_absolute(const std::vector<ConfidenceScore>& scores,
                                           double threshold) {
    std::vector<GateDecision> decisions;
    decisions.reserve(scores.size());
    for (const auto& score : scores) {
        const bool abstain = score.value < threshold;
        decisions.push_back(GateDecision{score.id, !abstain,
                                         abstain ? GateStage::RankGate : GateStage::Pass});
    }
    return decisions;
}

std::size_t k_from_fraction(std::size_t n, double fraction) {
    if (fraction < 0.0 || fraction > 1.0) {
        throw_argument("k_from_fraction: fraction must lie in [0,1]");
    }
    return static_cast<std::size_t>(std::llround(static_cast<double>(n) * fraction));
}

double infer_answerable_accuracy(double rs0_answer_all, double unanswerable_fraction) {
    if (unanswerable_fraction < 0.0 || unanswerable_fraction >= 1.0) {
        throw_argument("infer_answerable_accuracy: unanswerable_fraction must lie in [0,1)");
    }
    const double accuracy = rs0_answer_all / (100.0 * (1.0 - unanswerable_fraction));
    if (accuracy < 0.0 || accuracy > 1.0) {
        throw_argument("infer_answerable_accuracy: inputs are inconsistent, derived accuracy " +
                       std::to_string(accuracy) + " lies outside [0,1]");
    }
    return accuracy;
}

SweepResult sweep_k(const std::vector<ConfidenceScore>& scores,
                    const std::vector<EvalLabel>& labels,
                    const AccuracyMap& accuracy,
                    const RsConfig& penalty) {
    if (scores.empty()) {
        throw_argument("sweep_k: no scores to sweep");
    }
    std::unordered_map<std::string, bool> answerable;
    answerable.reserve(labels.size());
    for (const auto& label : labels) {
        answerable.emplace(label.id, label.answerable());
    }

    const std::size_t n = scores.size();
    const double c = resolve_penalty(penalty, n);

    // Per-record branch values under "answered" and "abstained".
    std::vector<double> if_answered(n);
    std::vector<double> if_abstained(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto it = answerable.find(scores[i].id);
        if (it == answerable.end()) {
            throw_argument("sweep_k: no label for id '" + scores[i].id + "'");
        }
        if (it->second) {
            const auto acc = accuracy.find(scores[i].id);
            if (acc == accuracy.end()) {
                throw_argument("sweep_k: no execution accuracy for answerable id '" +
                               scores[i].id + "'");
            }
            if_answered[i] = acc->second != 0 ? 1.0 : -c;
            if_abstained[i] = 0.0;
        } else {
            if_answered[i] = -c;
            if_abstained[i] = 1.0;
        }
    }

    // Rank of each record under the gate's (value, id) order.
    const auto order = ascending_order(scores);
    std::vector<std::size_t> rank(n);
    for (std::size_t pos = 0; pos < n; ++pos) {
        rank[order[pos]] = pos;
    }

    SweepResult result;
    result.curve.reserve(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sum += rank[i] < k ? if_abstained[i] : if_answered[i];
        }
        const double rs = RsConfig::kScale * sum / static_cast<double>(n);
        result.curve.emplace_back(k, rs);
        if (k == 0 || rs > result.rs_star) {
            result.k_star = k;
            result.rs_star = rs;
        }
    }
    return result;
}

} // namespace probgate::gating
