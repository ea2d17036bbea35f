#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "core/gating.hpp"
#include "core/lexicon.hpp"
#include "core/metrics.hpp"
#include "core/model.hpp"
#include "core/scoring.hpp"

namespace probgate::io {

// Every on-disk artifact the pipeline reads or writes. JSONL for streams,
// one JSON object for the prediction submission, CSV for tables.

std::vector<GenerationRecord> read_generations(const std::string& path);
void write_generations(const std::vector<GenerationRecord>& records, const std::string& path);

std::vector<EvalLabel> read_labels(const std::string& path);
void write_labels(const std::vector<EvalLabel>& labels, const std::string& path);

std::vector<ConfidenceScore> read_scores(const std::string& path);
void write_scores(const std::vector<ConfidenceScore>& scores, const std::string& path);

std::vector<GateDecision> read_decisions(const std::string& path);
void write_decisions(const std::vector<GateDecision>& decisions, const std::string& path);

/// Prediction submission: one JSON object mapping id -> SQL text, with the
/// literal string "null" marking an abstention.
void write_predictions(const std::vector<GateDecision>& decisions,
                       const std::vector<GenerationRecord>& records,
                       const std::string& path);
std::vector<std::pair<std::string, std::string>> read_predictions(const std::string& path);

inline constexpr const char* kAbstainMarker = "null";

struct TrainingPairs {
    std::vector<std::pair<std::string, std::string>> pairs; // (question, gold sql)
    std::size_t dropped_unanswerable = 0;
};

/// Chat-format training log: three messages per line (system, user,
/// assistant). Unanswerable rows (assistant content "null") are dropped and
/// counted.
TrainingPairs read_training_pairs(const std::string& path);

/// Lexicon override file: one word per line, replacing the default list.
ReservedLexicon read_lexicon_file(const std::string& path);

enum class GateMode {
    FixedK,
    Fraction,
    Absolute,
    Sweep,
};

const char* gate_mode_name(GateMode mode);

struct RunConfig {
    scoring::ScorerKind scorer = scoring::ScorerKind::ProbGate;
    std::size_t t = 10;
    GateMode gate_mode = GateMode::FixedK;
    std::optional<std::size_t> k;
    std::optional<double> fraction;
    std::optional<double> absolute_threshold;
    std::optional<RsConfig> sweep_penalty;
    std::vector<RsConfig> penalty_grid;
    std::optional<std::string> db_path;
    std::int64_t exec_timeout_ms = 5000;
    std::optional<std::string> generations_path;
    std::optional<std::string> labels_path;
    std::optional<std::string> lexicon_path;
    std::string out_dir = "out";
};

/// Loads a run configuration. Relative paths inside the file resolve against
/// the file's directory; `overrides_json` (same schema, paths taken verbatim)
/// wins field-by-field.
RunConfig load_run_config(const std::string& path, const std::string& overrides_json = "");

/// Validates the mode/field pairing: exactly the field matching gate_mode
/// may be set.
void validate_run_config(const RunConfig& config);

/// Parses "0,5,10,N" style penalty lists.
std::vector<RsConfig> parse_penalty_grid(const std::string& csv);
RsConfig parse_penalty(const std::string& token);

void write_sweep_curve_csv(const std::vector<std::pair<std::size_t, double>>& curve,
                           const std::string& path);
void write_rs_table_csv(const std::vector<metrics::RsTableRow>& rows, const std::string& path);
void write_histogram_csv(const metrics::HistogramData& histogram, const std::string& path);
void write_outcomes_jsonl(const std::vector<metrics::SampleOutcome>& outcomes,
                          const std::string& path);

/// Shortest decimal representation that round-trips, for CSV cells.
std::string format_double(double value);

} // namespace probgate::io
