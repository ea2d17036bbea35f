#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "core/io.hpp"
#include "core/metrics.hpp"
#include "core/model.hpp"

namespace probgate::pipeline {

struct StageCounts {
    std::size_t ingested = 0;
    std::size_t scored = 0;
    std::size_t rank_abstained = 0;
    std::size_t exec_abstained = 0;
    std::size_t answered = 0;
};

struct EvaluationResult {
    std::vector<metrics::SampleOutcome> outcomes;      // in label order
    std::vector<metrics::RsTableRow> table;
    std::map<std::string, std::size_t> case_counts;    // keyed by case name
};

/// Joins a prediction submission against gold labels, executes answered
/// answerable predictions to get their accuracy, and scores the penalty
/// grid. The database is only touched when an accuracy is actually needed.
EvaluationResult evaluate_predictions(
    const std::vector<std::pair<std::string, std::string>>& predictions,
    const std::vector<EvalLabel>& labels,
    const std::optional<std::string>& db_path,
    std::int64_t timeout_ms,
    const std::vector<RsConfig>& penalty_grid);

/// Writes rs_table.csv, outcomes.jsonl and run_summary.json under out_dir.
void write_evaluation_report(const EvaluationResult& result, const std::string& out_dir);

struct PipelineResult {
    io::RunConfig config;
    StageCounts counts;
    std::map<std::string, std::string> artifacts;      // artifact name -> path
    std::optional<std::size_t> k_star;                 // sweep mode only
    std::optional<double> rs_star;
    std::optional<EvaluationResult> evaluation;        // when labels were given
    std::vector<std::string> warnings;
};

/// One-shot flow: ingest, score, gate, execution-filter, predict, evaluate.
/// Artifacts land under config.out_dir with fixed names; outputs are a pure
/// function of the inputs, so reruns are byte-identical.
PipelineResult run_pipeline(const io::RunConfig& config);

/// The run_summary.json document for a finished pipeline run.
std::string summary_json(const PipelineResult& result);

} // namespace probgate::pipeline
