#include "core/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "core/error.hpp"

namespace probgate::metrics {

const char* sample_case_name(SampleCase c) {
    switch (c) {
        case SampleCase::AnsAnsweredCorrect: return "ANS_ANSWERED_CORRECT";
        case SampleCase::AnsAbstained: return "ANS_ABSTAINED";
        case SampleCase::AnsAnsweredWrong: return "ANS_ANSWERED_WRONG";
        case SampleCase::UnaAnswered: return "UNA_ANSWERED";
        case SampleCase::UnaAbstained: return "UNA_ABSTAINED";
    }
    return "ANS_ABSTAINED";
}

SampleCase sample_case_from_name(const std::string& name) {
    if (name == "ANS_ANSWERED_CORRECT") return SampleCase::AnsAnsweredCorrect;
    if (name == "ANS_ABSTAINED") return SampleCase::AnsAbstained;
    if (name == "ANS_ANSWERED_WRONG") return SampleCase::AnsAnsweredWrong;
    if (name == "UNA_ANSWERED") return SampleCase::UnaAnswered;
    if (name == "UNA_ABSTAINED") return SampleCase::UnaAbstained;
    throw_parse("unknown sample case '" + name + "'");
}

SampleOutcome classify_sample(const EvalLabel& label, const GateDecision& decision,
                              std::optional<int> acc) {
    if (label.id != decision.id) {
        throw_argument("classify_sample: label id '" + label.id + "' and decision id '" +
                       decision.id + "' disagree");
    }
    if (label.answerable()) {
        if (!decision.answer) {
            return SampleOutcome{label.id, SampleCase::AnsAbstained};
        }
        if (!acc.has_value()) {
            throw_argument("classify_sample: answered answerable id '" + label.id +
                           "' needs an execution accuracy");
        }
        return SampleOutcome{label.id, *acc != 0 ? SampleCase::AnsAnsweredCorrect
                                                 : SampleCase::AnsAnsweredWrong};
    }
    return SampleOutcome{label.id, decision.answer ? SampleCase::UnaAnswered
                                                   : SampleCase::UnaAbstained};
}

double rs_score(const std::vector<SampleOutcome>& outcomes, const RsConfig& config) {
    if (outcomes.empty()) {
        throw_argument("rs_score: no outcomes to score");
    }
    const double c = resolve_penalty(config, outcomes.size());
    double sum = 0.0;
    for (const auto& outcome : outcomes) {
        switch (outcome.sample_case) {
            case SampleCase::AnsAnsweredCorrect:
            case SampleCase::UnaAbstained:
                sum += 1.0;
                break;
            case SampleCase::AnsAbstained:
                break;
            case SampleCase::AnsAnsweredWrong:
            case SampleCase::UnaAnswered:
                sum -= c;
                break;
        }
    }
    return RsConfig::kScale * sum / static_cast<double>(outcomes.size());
}

std::vector<RsTableRow> rs_table(const std::vector<SampleOutcome>& outcomes,
                                 const std::vector<RsConfig>& penalty_grid) {
    if (penalty_grid.empty()) {
        throw_argument("rs_table: empty penalty grid");
    }
    std::vector<RsTableRow> rows;
    rows.reserve(penalty_grid.size());
    for (const auto& config : penalty_grid) {
        RsTableRow row;
        row.c_resolved = resolve_penalty(config, outcomes.size());
        if (config.penalty_is_n_samples) {
            row.c_label = "N";
        } else {
            // trim trailing zeros so 5.0 prints as "5" but 2.5 stays "2.5"
            std::string label = std::to_string(config.penalty);
            label.erase(label.find_last_not_of('0') + 1);
            if (!label.empty() && label.back() == '.') label.pop_back();
            row.c_label = label;
        }
        row.rs = rs_score(outcomes, config);
        rows.push_back(std::move(row));
    }
    return rows;
}

HistogramData score_histogram(const std::vector<ConfidenceScore>& scores,
                              const std::vector<EvalLabel>& labels,
                              const HistogramSpec& spec) {
    if (spec.bin_width <= 0.0) {
        throw_argument("score_histogram: bin_width must be positive");
    }
    std::unordered_map<std::string, bool> answerable;
    answerable.reserve(labels.size());
    for (const auto& label : labels) {
        answerable.emplace(label.id, label.answerable());
    }

    double min_finite = 0.0;
    bool any_finite = false;
    for (const auto& score : scores) {
        if (std::isfinite(score.value)) {
            min_finite = any_finite ? std::min(min_finite, score.value) : score.value;
            any_finite = true;
        }
    }
    if (!any_finite) {
        min_finite = -spec.bin_width;
    }

    HistogramData data;
    data.bin_width = spec.bin_width;
    // lowest edge: the largest multiple of bin_width at or below the minimum
    const auto lo_index = static_cast<long long>(std::floor(min_finite / spec.bin_width));
    const auto bins = static_cast<std::size_t>(std::max(1LL, -lo_index));
    data.edges.resize(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) {
        data.edges[i] = static_cast<double>(lo_index + static_cast<long long>(i)) * spec.bin_width;
    }
    data.answerable.assign(bins, 0);
    data.unanswerable.assign(bins, 0);

    double ans_sum = 0.0;
    double una_sum = 0.0;
    for (const auto& score : scores) {
        const auto it = answerable.find(score.id);
        if (it == answerable.end()) {
            throw_argument("score_histogram: no label for id '" + score.id + "'");
        }
        double idx_f = std::floor(score.value / spec.bin_width) - static_cast<double>(lo_index);
        if (!std::isfinite(idx_f)) idx_f = 0.0;
        // last bin is closed at 0; out-of-range values clamp into the edge bins
        const auto bin = static_cast<std::size_t>(
            std::clamp(idx_f, 0.0, static_cast<double>(bins - 1)));
        if (it->second) {
            ++data.answerable[bin];
            ++data.answerable_total;
            ans_sum += score.value;
        } else {
            ++data.unanswerable[bin];
            ++data.unanswerable_total;
            una_sum += score.value;
        }
    }
    data.answerable_mean =
        data.answerable_total > 0 ? ans_sum / static_cast<double>(data.answerable_total) : 0.0;
    data.unanswerable_mean =
        data.unanswerable_total > 0 ? una_sum / static_cast<double>(data.unanswerable_total) : 0.0;
    return data;
}

} // namespace probgate::metrics
