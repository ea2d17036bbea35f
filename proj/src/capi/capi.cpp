#include "probgate/probgate.h"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/client.hpp"
#include "core/error.hpp"
#include "core/execution.hpp"
#include "core/gating.hpp"
#include "core/io.hpp"
#include "core/lexicon.hpp"
#include "core/metrics.hpp"
#include "core/model.hpp"
#include "core/pipeline.hpp"
#include "core/scoring.hpp"

// Opaque handle definitions. Each wraps the core value plus whatever string
// storage its accessors hand out.

struct pg_lexicon {
    probgate::ReservedLexicon lex;
};

struct pg_generations {
    std::vector<probgate::GenerationRecord> records;
};

struct pg_labels {
    std::vector<probgate::EvalLabel> labels;
};

struct pg_scores {
    std::vector<probgate::ConfidenceScore> scores;
};

struct pg_decisions {
    std::vector<probgate::GateDecision> decisions;
};

struct pg_training_pairs {
    probgate::io::TrainingPairs pairs;
};

namespace {

thread_local std::string t_last_error;

void set_error(const std::string& message) { t_last_error = message; }

pg_status status_for(const probgate::Error& e) {
    switch (e.kind()) {
        case probgate::ErrorKind::Io: return PG_ERR_IO;
        case probgate::ErrorKind::Parse: return PG_ERR_PARSE;
        case probgate::ErrorKind::Validation: return PG_ERR_VALIDATION;
        case probgate::ErrorKind::Argument: return PG_ERR_ARGUMENT;
        case probgate::ErrorKind::Db: return PG_ERR_DB;
    }
    return PG_ERR_INTERNAL;
}

// Runs `fn`, translating exceptions into status codes + pg_last_error.
template <typename Fn>
pg_status guarded(Fn&& fn) {
    try {
        fn();
        return PG_OK;
    } catch (const probgate::Error& e) {
        set_error(e.what());
        return status_for(e);
    } catch (const std::exception& e) {
        set_error(e.what());
        return PG_ERR_INTERNAL;
    } catch (...) {
        set_error("unknown failure");
        return PG_ERR_INTERNAL;
    }
}

pg_status require(bool ok, const char* message) {
    if (!ok) {
        set_error(message);
        return PG_ERR_ARGUMENT;
    }
    return PG_OK;
}

const probgate::ReservedLexicon& lexicon_or_default(const pg_lexicon* lex) {
    static const probgate::ReservedLexicon default_lex =
        probgate::ReservedLexicon::default_lexicon();
    return lex != nullptr ? lex->lex : default_lex;
}

} // namespace

extern "C" {

const char* pg_version(void) { return "0.1.0"; }

const char* pg_last_error(void) { return t_last_error.c_str(); }

/* ---- lexicon ---- */

pg_status pg_lexicon_default(pg_lexicon** out) {
    if (pg_status s = require(out != nullptr, "pg_lexicon_default: out is NULL")) return s;
    return guarded([&] { *out = new pg_lexicon{probgate::ReservedLexicon::default_lexicon()}; });
}

pg_status pg_lexicon_read(const char* path, pg_lexicon** out) {
    if (pg_status s = require(path != nullptr && out != nullptr,
                              "pg_lexicon_read: NULL argument")) {
        return s;
    }
    return guarded([&] { *out = new pg_lexicon{probgate::io::read_lexicon_file(path)}; });
}

int pg_lexicon_is_reserved(const pg_lexicon* lex, const char* token_text) {
    if (lex == nullptr || token_text == nullptr) return 0;
    return probgate::is_reserved(token_text, lex->lex) ? 1 : 0;
}

void pg_lexicon_free(pg_lexicon* lex) { delete lex; }

/* ---- generations ---- */

pg_status pg_generations_read(const char* path, pg_generations** out) {
    if (pg_status s = require(path != nullptr && out != nullptr,
                              "pg_generations_read: NULL argument")) {
        return s;
    }
    return guarded([&] { *out = new pg_generations{probgate::io::read_generations(path)}; });
}

size_t pg_generations_size(const pg_generations* gens) {
    return gens != nullptr ? gens->records.size() : 0;
}

pg_status pg_generations_get(const pg_generations* gens, size_t index, const char** id,
                             const char** sql, size_t* token_count) {
    if (pg_status s = require(gens != nullptr, "pg_generations_get: handle is NULL")) return s;
    if (pg_status s = require(index < gens->records.size(),
                              "pg_generations_get: index out of range")) {
        return s;
    }
    const auto& record = gens->records[index];
    if (id != nullptr) *id = record.id.c_str();
    if (sql != nullptr) *sql = record.sql.c_str();
    if (token_count != nullptr) *token_count = record.tokens.size();
    return PG_OK;
}

void pg_generations_free(pg_generations* gens) { delete gens; }

/* ---- labels ---- */

pg_status pg_labels_read(const char* path, pg_labels** out) {
    if (pg_status s = require(path != nullptr && out != nullptr,
                              "pg_labels_read: NULL argument")) {
        return s;
    }
    return guarded([&] { *out = new pg_labels{probgate::io::read_labels(path)}; });
}

size_t pg_labels_size(const pg_labels* labels) {
    return labels != nullptr ? labels->labels.size() : 0;
}

pg_status pg_labels_get(const pg_labels* labels, size_t index, const char** id,
                        const char** gold_sql) {
    if (pg_status s = require(labels != nullptr, "pg_labels_get: handle is NULL")) return s;
    if (pg_status s = require(index < labels->labels.size(),
                              "pg_labels_get: index out of range")) {
        return s;
    }
    const auto& label = labels->labels[index];
    if (id != nullptr) *id = label.id.c_str();
    if (gold_sql != nullptr) {
        *gold_sql = label.gold_sql.has_value() ? label.gold_sql->c_str() : nullptr;
    }
    return PG_OK;
}

void pg_labels_free(pg_labels* labels) { delete labels; }

/* ---- scoring ---- */

pg_status pg_score_dataset(const pg_generations* gens, pg_scorer_kind kind, size_t bottom_k,
                           const pg_lexicon* lex, pg_scores** out) {
    if (pg_status s = require(gens != nullptr && out != nullptr,
                              "pg_score_dataset: NULL argument")) {
        return s;
    }
    return guarded([&] {
        probgate::scoring::ScorerConfig config;
        config.kind = kind == PG_SCORER_MAX_ENTROPY
                          ? probgate::scoring::ScorerKind::MaxEntropy
                          : probgate::scoring::ScorerKind::ProbGate;
        config.bottom_k = bottom_k;
        *out = new pg_scores{probgate::scoring::score_dataset(gens->records, config,
                                                              lexicon_or_default(lex))};
    });
}

pg_status pg_scores_read(const char* path, pg_scores** out) {
    if (pg_status s = require(path != nullptr && out != nullptr,
                              "pg_scores_read: NULL argument")) {
        return s;
    }
    return guarded([&] { *out = new pg_scores{probgate::io::read_scores(path)}; });
}

pg_status pg_scores_write(const pg_scores* scores, const char* path) {
    if (pg_status s = require(scores != nullptr && path != nullptr,
                              "pg_scores_write: NULL argument")) {
        return s;
    }
    return guarded([&] { probgate::io::write_scores(scores->scores, path); });
}

size_t pg_scores_size(const pg_scores* scores) {
    return scores != nullptr ? scores->scores.size() : 0;
}

pg_status pg_scores_get(const pg_scores* scores, size_t index, const char** id, double* value,
                        size_t* n_considered, int* used_fallback) {
    if (pg_status s = require(scores != nullptr, "pg_scores_get: handle is NULL")) return s;
    if (pg_status s = require(index < scores->scores.size(),
                              "pg_scores_get: index out of range")) {
        return s;
    }
    const auto& score = scores->scores[index];
    if (id != nullptr) *id = score.id.c_str();
    if (value != nullptr) *value = score.value;
    if (n_considered != nullptr) *n_considered = score.n_considered;
    if (used_fallback != nullptr) *used_fallback = score.used_fallback ? 1 : 0;
    return PG_OK;
}

void pg_scores_free(pg_scores* scores) { delete scores; }

/* ---- gating ---- */

pg_status pg_gate_rank(const pg_scores* scores, size_t k, pg_decisions** out) {
    if (pg_status s = require(scores != nullptr && out != nullptr,
                              "pg_gate_rank: NULL argument")) {
        return s;
    }
    return guarded(
        [&] { *out = new pg_decisions{probgate::gating::gate_by_rank(scores->scores, k)}; });
}

pg_status pg_gate_fraction(const pg_scores* scores, double fraction, pg_decisions** out) {
    if (pg_status s = require(scores != nullptr && out != nullptr,
                              "pg_gate_fraction: NULL argument")) {
        return s;
    }
    return guarded([&] {
        const size_t k = probgate::gating::k_from_fraction(scores->scores.size(), fraction);
        *out = new pg_decisions{probgate::gating::gate_by_rank(scores->scores, k)};
    });
}

pg_status pg_gate_absolute(const pg_scores* scores, double threshold, pg_decisions** out) {
    if (pg_status s = require(scores != nullptr && out != nullptr,
                              "pg_gate_absolute: NULL argument")) {
        return s;
    }
    return guarded([&] {
        *out = new pg_decisions{probgate::gating::gate_by_absolute(scores->scores, threshold)};
    });
}

pg_status pg_k_from_fraction(size_t n, double fraction, size_t* out_k) {
    if (pg_status s = require(out_k != nullptr, "pg_k_from_fraction: out_k is NULL")) return s;
    return guarded([&] { *out_k = probgate::gating::k_from_fraction(n, fraction); });
}

pg_status pg_infer_answerable_accuracy(double rs0_answer_all, double unanswerable_fraction,
                                       double* out_accuracy) {
    if (pg_status s = require(out_accuracy != nullptr,
                              "pg_infer_answerable_accuracy: out_accuracy is NULL")) {
        return s;
    }
    return guarded([&] {
        *out_accuracy =
            probgate::gating::infer_answerable_accuracy(rs0_answer_all, unanswerable_fraction);
    });
}

pg_status pg_decisions_read(const char* path, pg_decisions** out) {
    if (pg_status s = require(path != nullptr && out != nullptr,
                              "pg_decisions_read: NULL argument")) {
        return s;
    }
    return guarded([&] { *out = new pg_decisions{probgate::io::read_decisions(path)}; });
}

pg_status pg_decisions_write(const pg_decisions* decisions, const char* path) {
    if (pg_status s = require(decisions != nullptr && path != nullptr,
                              "pg_decisions_write: NULL argument")) {
        return s;
    }
    return guarded([&] { probgate::io::write_decisions(decisions->decisions, path); });
}

size_t pg_decisions_size(const pg_decisions* decisions) {
    return decisions != nullptr ? decisions->decisions.size() : 0;
}

pg_status pg_decisions_get(const pg_decisions* decisions, size_t index, const char** id,
                           int* answer, pg_gate_stage* stage) {
    if (pg_status s = require(decisions != nullptr, "pg_decisions_get: handle is NULL")) return s;
    if (pg_status s = require(index < decisions->decisions.size(),
                              "pg_decisions_get: index out of range")) {
        return s;
    }
    const auto& decision = decisions->decisions[index];
    if (id != nullptr) *id = decision.id.c_str();
    if (answer != nullptr) *answer = decision.answer ? 1 : 0;
    if (stage != nullptr) {
        switch (decision.stage) {
            case probgate::GateStage::Pass: *stage = PG_STAGE_PASS; break;
            case probgate::GateStage::RankGate: *stage = PG_STAGE_RANK_GATE; break;
            case probgate::GateStage::ExecutionGate: *stage = PG_STAGE_EXECUTION_GATE; break;
        }
    }
    return PG_OK;
}

void pg_decisions_free(pg_decisions* decisions) { delete decisions; }

/* ---- execution gate ---- */

pg_status pg_exec_filter(const pg_decisions* decisions, const pg_generations* gens,
                         const char* db_path, int64_t timeout_ms, pg_decisions** out) {
    if (pg_status s = require(decisions != nullptr && gens != nullptr && db_path != nullptr &&
                                  out != nullptr,
                              "pg_exec_filter: NULL argument")) {
        return s;
    }
    return guarded([&] {
        probgate::exec::Database db(db_path);
        *out = new pg_decisions{probgate::exec::grammatical_error_filter(
            decisions->decisions, gens->records, db, timeout_ms)};
    });
}

/* ---- predictions ---- */

pg_status pg_predictions_write(const pg_decisions* decisions, const pg_generations* gens,
                               const char* path) {
    if (pg_status s = require(decisions != nullptr && gens != nullptr && path != nullptr,
                              "pg_predictions_write: NULL argument")) {
        return s;
    }
    return guarded(
        [&] { probgate::io::write_predictions(decisions->decisions, gens->records, path); });
}

/* ---- evaluation ---- */

pg_status pg_evaluate(const char* predictions_path, const pg_labels* labels, const char* db_path,
                      int64_t timeout_ms, const char* penalty_grid, const char* out_dir) {
    if (pg_status s = require(predictions_path != nullptr && labels != nullptr &&
                                  penalty_grid != nullptr && out_dir != nullptr,
                              "pg_evaluate: NULL argument")) {
        return s;
    }
    return guarded([&] {
        const auto predictions = probgate::io::read_predictions(predictions_path);
        const auto grid = probgate::io::parse_penalty_grid(penalty_grid);
        std::optional<std::string> db;
        if (db_path != nullptr) db = db_path;
        const auto result = probgate::pipeline::evaluate_predictions(predictions, labels->labels,
                                                                     db, timeout_ms, grid);
        probgate::pipeline::write_evaluation_report(result, out_dir);
    });
}

/* ---- sweep ---- */

pg_status pg_sweep(const pg_scores* scores, const pg_labels* labels, const pg_generations* gens,
                   const char* db_path, int64_t timeout_ms, const char* penalty,
                   const char* curve_csv_path, size_t* out_k_star, double* out_rs_star) {
    if (pg_status s = require(scores != nullptr && labels != nullptr && gens != nullptr &&
                                  penalty != nullptr,
                              "pg_sweep: NULL argument")) {
        return s;
    }
    return guarded([&] {
        probgate::gating::AccuracyMap accuracy;
        const bool any_answerable =
            std::any_of(labels->labels.begin(), labels->labels.end(),
                        [](const probgate::EvalLabel& l) { return l.answerable(); });
        if (any_answerable) {
            if (db_path == nullptr) {
                probgate::throw_argument(
                    "pg_sweep: db_path is required when answerable labels exist");
            }
            probgate::exec::Database db(db_path);
            accuracy = probgate::exec::accuracy_for_records(gens->records, labels->labels, db,
                                                            timeout_ms);
        }
        const auto result = probgate::gating::sweep_k(scores->scores, labels->labels, accuracy,
                                                      probgate::io::parse_penalty(penalty));
        if (curve_csv_path != nullptr) {
            probgate::io::write_sweep_curve_csv(result.curve, curve_csv_path);
        }
        if (out_k_star != nullptr) *out_k_star = result.k_star;
        if (out_rs_star != nullptr) *out_rs_star = result.rs_star;
    });
}

/* ---- histogram ---- */

pg_status pg_histogram(const pg_scores* scores, const pg_labels* labels, double bin_width,
                       const char* csv_path, double* out_answerable_mean,
                       double* out_unanswerable_mean) {
    if (pg_status s = require(scores != nullptr && labels != nullptr && csv_path != nullptr,
                              "pg_histogram: NULL argument")) {
        return s;
    }
    return guarded([&] {
        probgate::metrics::HistogramSpec spec;
        spec.bin_width = bin_width;
        const auto histogram =
            probgate::metrics::score_histogram(scores->scores, labels->labels, spec);
        probgate::io::write_histogram_csv(histogram, csv_path);
        if (out_answerable_mean != nullptr) *out_answerable_mean = histogram.answerable_mean;
        if (out_unanswerable_mean != nullptr) {
            *out_unanswerable_mean = histogram.unanswerable_mean;
        }
    });
}

/* ---- pipeline ---- */

pg_status pg_pipeline_run(const char* config_path, const char* overrides_json,
                          char** out_summary_json) {
    if (pg_status s = require(config_path != nullptr, "pg_pipeline_run: config_path is NULL")) {
        return s;
    }
    return guarded([&] {
        auto config = probgate::io::load_run_config(
            config_path, overrides_json != nullptr ? overrides_json : "");
        if (!config.db_path) {
            if (const char* env_db = std::getenv("PROBGATE_DB");
                env_db != nullptr && *env_db != '\0') {
                config.db_path = env_db;
            }
        }
        const auto result = probgate::pipeline::run_pipeline(config);
        for (const auto& warning : result.warnings) {
            std::fprintf(stderr, "probgate: warning: %s\n", warning.c_str());
        }
        if (out_summary_json != nullptr) {
            const std::string summary = probgate::pipeline::summary_json(result);
            char* copy = static_cast<char*>(std::malloc(summary.size() + 1));
            if (copy == nullptr) {
                probgate::throw_io("out of memory for summary");
            }
            std::memcpy(copy, summary.c_str(), summary.size() + 1);
            *out_summary_json = copy;
        }
    });
}

void pg_string_free(char* s) { std::free(s); }

/* ---- training pairs ---- */

pg_status pg_training_pairs_read(const char* path, pg_training_pairs** out) {
    if (pg_status s = require(path != nullptr && out != nullptr,
                              "pg_training_pairs_read: NULL argument")) {
        return s;
    }
    return guarded([&] { *out = new pg_training_pairs{probgate::io::read_training_pairs(path)}; });
}

size_t pg_training_pairs_size(const pg_training_pairs* pairs) {
    return pairs != nullptr ? pairs->pairs.pairs.size() : 0;
}

size_t pg_training_pairs_dropped(const pg_training_pairs* pairs) {
    return pairs != nullptr ? pairs->pairs.dropped_unanswerable : 0;
}

pg_status pg_training_pairs_get(const pg_training_pairs* pairs, size_t index,
                                const char** question, const char** gold_sql) {
    if (pg_status s = require(pairs != nullptr, "pg_training_pairs_get: handle is NULL")) {
        return s;
    }
    if (pg_status s = require(index < pairs->pairs.pairs.size(),
                              "pg_training_pairs_get: index out of range")) {
        return s;
    }
    const auto& pair = pairs->pairs.pairs[index];
    if (question != nullptr) *question = pair.first.c_str();
    if (gold_sql != nullptr) *gold_sql = pair.second.c_str();
    return PG_OK;
}

void pg_training_pairs_free(pg_training_pairs* pairs) { delete pairs; }

/* ---- generation client ---- */

pg_status pg_fetch_generations(const char* questions_path, const char* client_config_json,
                               const char* out_path) {
    if (pg_status s = require(questions_path != nullptr && out_path != nullptr,
                              "pg_fetch_generations: NULL argument")) {
        return s;
    }
    return guarded([&] {
        probgate::client::ClientConfig config;
        if (client_config_json != nullptr && *client_config_json != '\0') {
            nlohmann::json doc;
            try {
                doc = nlohmann::json::parse(client_config_json);
            } catch (const nlohmann::json::exception& e) {
                probgate::throw_parse(std::string("client config: ") + e.what());
            }
            if (doc.contains("base_url")) config.base_url = doc["base_url"];
            if (doc.contains("model")) config.model = doc["model"];
            if (doc.contains("api_key_env")) config.api_key_env = doc["api_key_env"];
            if (doc.contains("system_prompt")) config.system_prompt = doc["system_prompt"];
            if (doc.contains("max_retries")) config.max_retries = doc["max_retries"];
            if (doc.contains("request_timeout_ms")) {
                config.request_timeout_ms = doc["request_timeout_ms"];
            }
            if (doc.contains("temperature")) config.temperature = doc["temperature"];
            if (doc.contains("top_logprobs")) config.top_logprobs = doc["top_logprobs"];
            if (doc.contains("concurrency")) config.concurrency = doc["concurrency"];
        }
        probgate::client::fetch_to_file(questions_path, config, out_path,
                                        probgate::client::default_transport());
    });
}

} /* extern "C" */
