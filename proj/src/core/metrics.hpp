#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "core/model.hpp"

namespace probgate::metrics {

/// The five per-sample reliability branches: what the model did on an
/// answerable or unanswerable question, and whether an answer was right.
enum class SampleCase {
    AnsAnsweredCorrect, // answerable, answered, correct       -> +1
    AnsAbstained,       // answerable, abstained               ->  0
    AnsAnsweredWrong,   // answerable, answered, wrong         -> -c
    UnaAnswered,        // unanswerable, answered              -> -c
    UnaAbstained,       // unanswerable, abstained             -> +1
};

const char* sample_case_name(SampleCase c);
SampleCase sample_case_from_name(const std::string& name);

struct SampleOutcome {
    std::string id;
    SampleCase sample_case = SampleCase::AnsAbstained;

    bool operator==(const SampleOutcome&) const = default;
};

/// Maps (label, decision, acc) onto its branch. acc is required exactly when
/// the question is answerable and was answered.
SampleOutcome classify_sample(const EvalLabel& label, const GateDecision& decision,
                              std::optional<int> acc);

/// Reliability score: mean branch value scaled by 100, with the penalty
/// sentinel resolved against the outcome count.
double rs_score(const std::vector<SampleOutcome>& outcomes, const RsConfig& config);

struct RsTableRow {
    std::string c_label; // "0", "5", "10", "N", ...
    double c_resolved = 0.0;
    double rs = 0.0;
};

std::vector<RsTableRow> rs_table(const std::vector<SampleOutcome>& outcomes,
                                 const std::vector<RsConfig>& penalty_grid);

struct HistogramSpec {
    double bin_width = 0.25;
};

/// Binned score counts per label class. Bin edges sit at integer multiples
/// of bin_width and the range ends at 0; the last bin is closed at 0 and
/// the first bin absorbs anything below the range (the unscorable sentinel).
struct HistogramData {
    double bin_width = 0.25;
    std::vector<double> edges;                 // size bins+1, last edge 0
    std::vector<std::size_t> answerable;       // counts per bin
    std::vector<std::size_t> unanswerable;     // counts per bin
    double answerable_mean = 0.0;              // mean score per series
    double unanswerable_mean = 0.0;
    std::size_t answerable_total = 0;
    std::size_t unanswerable_total = 0;
};

HistogramData score_histogram(const std::vector<ConfidenceScore>& scores,
                              const std::vector<EvalLabel>& labels,
                              const HistogramSpec& spec);

} // namespace probgate::metrics
