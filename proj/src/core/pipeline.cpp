#include "core/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "core/error.hpp"
#include "core/execution.hpp"
#include "core/gating.hpp"
#include "core/scoring.hpp"

namespace probgate::pipeline {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string join_path(const std::string& dir, const char* name) {
    return (fs::path(dir) / name).string();
}

json penalty_to_json(const RsConfig& config) {
    if (config.penalty_is_n_samples) return json("N");
    return json(config.penalty);
}

json config_to_json(const io::RunConfig& config) {
    json doc;
    doc["scorer"] = config.scorer == scoring::ScorerKind::MaxEntropy ? "max_entropy" : "probgate";
    doc["t"] = config.t;
    doc["gate_mode"] = io::gate_mode_name(config.gate_mode);
    if (config.k) doc["k"] = *config.k;
    if (config.fraction) doc["fraction"] = *config.fraction;
    if (config.absolute_threshold) doc["absolute_threshold"] = *config.absolute_threshold;
    if (config.sweep_penalty) doc["sweep_penalty"] = penalty_to_json(*config.sweep_penalty);
    json grid = json::array();
    for (const auto& penalty : config.penalty_grid) {
        grid.push_back(penalty_to_json(penalty));
    }
    doc["penalty_grid"] = std::move(grid);
    if (config.db_path) doc["db_path"] = *config.db_path;
    doc["exec_timeout_ms"] = config.exec_timeout_ms;
    if (config.generations_path) doc["generations"] = *config.generations_path;
    if (config.labels_path) doc["labels"] = *config.labels_path;
    if (config.lexicon_path) doc["lexicon"] = *config.lexicon_path;
    doc["out_dir"] = config.out_dir;
    return doc;
}

void write_text(const std::string& path, const std::string& content) {
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty()) {
        std::error_code ec;
        fs::create_directories(parent, ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw_io("cannot open '" + path + "' for writing");
    }
    out << content;
}

} // namespace

EvaluationResult evaluate_predictions(
    const std::vector<std::pair<std::string, std::string>>& predictions,
    const std::vector<EvalLabel>& labels,
    const std::optional<std::string>& db_path,
    std::int64_t timeout_ms,
    const std::vector<RsConfig>& penalty_grid) {
    std::unordered_map<std::string, const std::string*> pred_by_id;
    pred_by_id.reserve(predictions.size());
    for (const auto& [id, sql] : predictions) {
        if (!pred_by_id.emplace(id, &sql).second) {
            throw_validation("duplicate prediction for id '" + id + "'");
        }
    }
    std::unordered_set<std::string> label_ids;
    label_ids.reserve(labels.size());
    for (const auto& label : labels) {
        label_ids.insert(label.id);
    }
    for (const auto& [id, sql] : predictions) {
        if (label_ids.count(id) == 0) {
            throw_argument("prediction '" + id + "' has no label");
        }
    }

    std::optional<exec::Database> db; // opened on first accuracy lookup
    EvaluationResult result;
    result.outcomes.reserve(labels.size());
    for (const auto& label : labels) {
        const auto it = pred_by_id.find(label.id);
        if (it == pred_by_id.end()) {
            throw_argument("no prediction for labeled id '" + label.id + "'");
        }
        const std::string& pred_sql = *it->second;
        const bool answered = pred_sql != io::kAbstainMarker;
        GateDecision decision{label.id, answered,
                              answered ? GateStage::Pass : GateStage::RankGate};
        std::optional<int> acc;
        if (label.answerable() && answered) {
            if (!db) {
                if (!db_path) {
                    throw_argument("a database is required to evaluate answered answerable "
                                   "predictions (first needed for id '" +
                                   label.id + "')");
                }
                db.emplace(*db_path);
            }
            try {
                acc = exec::execution_accuracy(pred_sql, *label.gold_sql, *db, timeout_ms);
            } catch (const Error& e) {
                throw_argument("id '" + label.id + "': " + e.what());
            }
        }
        result.outcomes.push_back(metrics::classify_sample(label, decision, acc));
    }

    result.table = metrics::rs_table(result.outcomes, penalty_grid);
    for (const auto& outcome : result.outcomes) {
        ++result.case_counts[metrics::sample_case_name(outcome.sample_case)];
    }
    return result;
}

void write_evaluation_report(const EvaluationResult& result, const std::string& out_dir) {
    io::write_rs_table_csv(result.table, join_path(out_dir, "rs_table.csv"));
    io::write_outcomes_jsonl(result.outcomes, join_path(out_dir, "outcomes.jsonl"));

    json summary;
    summary["n"] = result.outcomes.size();
    json rs = json::object();
    for (const auto& row : result.table) {
        rs[row.c_label] = row.rs;
    }
    summary["rs"] = std::move(rs);
    json cases = json::object();
    for (const auto& [name, count] : result.case_counts) {
        cases[name] = count;
    }
    summary["case_counts"] = std::move(cases);
    write_text(join_path(out_dir, "run_summary.json"), summary.dump(2) + "\n");
}

PipelineResult run_pipeline(const io::RunConfig& config) {
    io::validate_run_config(config);
    if (!config.generations_path) {
        throw_argument("pipeline: config must name a generations file");
    }

    PipelineResult result;
    result.config = config;

    const auto records = io::read_generations(*config.generations_path);
    result.counts.ingested = records.size();

    const ReservedLexicon lexicon = config.lexicon_path
                                        ? io::read_lexicon_file(*config.lexicon_path)
                                        : ReservedLexicon::default_lexicon();

    scoring::ScorerConfig scorer_config{config.scorer, config.t};
    const auto scores = scoring::score_dataset(records, scorer_config, lexicon, &result.warnings);
    result.counts.scored = scores.size();
    const std::string scores_path = join_path(config.out_dir, "scores.jsonl");
    io::write_scores(scores, scores_path);
    result.artifacts["scores"] = scores_path;

    std::optional<std::vector<EvalLabel>> labels;
    if (config.labels_path) {
        labels = io::read_labels(*config.labels_path);
    }

    std::vector<GateDecision> decisions;
    switch (config.gate_mode) {
        case io::GateMode::FixedK:
            decisions = gating::gate_by_rank(scores, *config.k);
            break;
        case io::GateMode::Fraction:
            decisions = gating::gate_by_rank(
                scores, gating::k_from_fraction(scores.size(), *config.fraction));
            break;
        case io::GateMode::Absolute:
            decisions = gating::gate_by_absolute(scores, *config.absolute_threshold);
            break;
        case io::GateMode::Sweep: {
            if (!labels) {
                throw_argument("pipeline: sweep mode needs a labels file");
            }
            gating::AccuracyMap accuracy;
            const bool any_answerable =
                std::any_of(labels->begin(), labels->end(),
                            [](const EvalLabel& l) { return l.answerable(); });
            if (any_answerable) {
                if (!config.db_path) {
                    throw_argument("pipeline: sweep mode needs a database for execution "
                                   "accuracy");
                }
                exec::Database db(*config.db_path);
                accuracy = exec::accuracy_for_records(records, *labels, db,
                                                      config.exec_timeout_ms);
            }
            const auto sweep = gating::sweep_k(scores, *labels, accuracy, *config.sweep_penalty);
            result.k_star = sweep.k_star;
            result.rs_star = sweep.rs_star;
            const std::string curve_path = join_path(config.out_dir, "sweep_curve.csv");
            io::write_sweep_curve_csv(sweep.curve, curve_path);
            result.artifacts["sweep_curve"] = curve_path;
            decisions = gating::gate_by_rank(scores, sweep.k_star);
            break;
        }
    }
    const std::string decisions_path = join_path(config.out_dir, "decisions.jsonl");
    io::write_decisions(decisions, decisions_path);
    result.artifacts["decisions"] = decisions_path;

    if (config.db_path) {
        exec::Database db(*config.db_path);
        decisions = exec::grammatical_error_filter(decisions, records, db,
                                                   config.exec_timeout_ms);
        const std::string filtered_path = join_path(config.out_dir, "decisions_final.jsonl");
        io::write_decisions(decisions, filtered_path);
        result.artifacts["decisions_final"] = filtered_path;
    }

    for (const auto& decision : decisions) {
        if (decision.answer) {
            ++result.counts.answered;
        } else if (decision.stage == GateStage::RankGate) {
            ++result.counts.rank_abstained;
        } else {
            ++result.counts.exec_abstained;
        }
    }

    const std::string predictions_path = join_path(config.out_dir, "predictions.json");
    io::write_predictions(decisions, records, predictions_path);
    result.artifacts["predictions"] = predictions_path;

    if (labels) {
        const auto predictions = io::read_predictions(predictions_path);
        result.evaluation = evaluate_predictions(predictions, *labels, config.db_path,
                                                 config.exec_timeout_ms, config.penalty_grid);
        io::write_rs_table_csv(result.evaluation->table,
                               join_path(config.out_dir, "rs_table.csv"));
        io::write_outcomes_jsonl(result.evaluation->outcomes,
                                 join_path(config.out_dir, "outcomes.jsonl"));
        result.artifacts["rs_table"] = join_path(config.out_dir, "rs_table.csv");
        result.artifacts["outcomes"] = join_path(config.out_dir, "outcomes.jsonl");

        const auto histogram = metrics::score_histogram(scores, *labels, metrics::HistogramSpec{});
        const std::string histogram_path = join_path(config.out_dir, "histogram.csv");
        io::write_histogram_csv(histogram, histogram_path);
        result.artifacts["histogram"] = histogram_path;
    }

    const std::string summary_path = join_path(config.out_dir, "run_summary.json");
    write_text(summary_path, summary_json(result));
    result.artifacts["run_summary"] = summary_path;
    return result;
}

std::string summary_json(const PipelineResult& result) {
    json doc;
    doc["config"] = config_to_json(result.config);
    json counts;
    counts["ingested"] = result.counts.ingested;
    counts["scored"] = result.counts.scored;
    counts["rank_abstained"] = result.counts.rank_abstained;
    counts["exec_abstained"] = result.counts.exec_abstained;
    counts["answered"] = result.counts.answered;
    doc["stage_counts"] = std::move(counts);
    if (result.k_star) {
        doc["k_star"] = *result.k_star;
        doc["rs_star"] = *result.rs_star;
    }
    if (result.evaluation) {
        json rs = json::object();
        for (const auto& row : result.evaluation->table) {
            rs[row.c_label] = row.rs;
        }
        doc["rs"] = std::move(rs);
        json cases = json::object();
        for (const auto& [name, count] : result.evaluation->case_counts) {
            cases[name] = count;
        }
        doc["case_counts"] = std::move(cases);
    }
    json artifacts = json::object();
    for (const auto& [name, path] : result.artifacts) {
        artifacts[name] = fs::path(path).filename().string();
    }
    doc["artifacts"] = std::move(artifacts);
    return doc.dump(2) + "\n";
}

} // namespace probgate::pipeline
