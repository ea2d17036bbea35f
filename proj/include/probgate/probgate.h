/*
 * probgate — reliability gating for text-to-SQL generations.
 *
 * C interface to the probgate shared library. All functions return a
 * pg_status; on failure pg_last_error() describes what went wrong for the
 * calling thread. Objects are opaque handles created by the library and
 * released with their matching *_free function. Strings returned through
 * const char* out-parameters stay valid until the owning handle is freed.
 */

#ifndef PROBGATE_H
#define PROBGATE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PG_API __declspec(dllexport)
#else
#define PG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pg_status {
    PG_OK = 0,
    PG_ERR_IO = 1,         /* filesystem or network failure */
    PG_ERR_PARSE = 2,      /* malformed input document */
    PG_ERR_VALIDATION = 3, /* well-formed input violating a contract */
    PG_ERR_ARGUMENT = 4,   /* bad argument (including NULL handles) */
    PG_ERR_DB = 5,         /* database cannot be opened */
    PG_ERR_INTERNAL = 6
} pg_status;

typedef enum pg_scorer_kind {
    PG_SCORER_PROBGATE = 0,   /* bottom-k averaged log probability */
    PG_SCORER_MAX_ENTROPY = 1 /* negated maximum per-token entropy */
} pg_scorer_kind;

typedef enum pg_gate_stage {
    PG_STAGE_PASS = 0,
    PG_STAGE_RANK_GATE = 1,
    PG_STAGE_EXECUTION_GATE = 2
} pg_gate_stage;

typedef struct pg_lexicon pg_lexicon;
typedef struct pg_generations pg_generations;
typedef struct pg_labels pg_labels;
typedef struct pg_scores pg_scores;
typedef struct pg_decisions pg_decisions;
typedef struct pg_training_pairs pg_training_pairs;

PG_API const char* pg_version(void);

/* Message for the calling thread's most recent failure. Never NULL. */
PG_API const char* pg_last_error(void);

/* ---- reserved-word lexicon ---------------------------------------- */

PG_API pg_status pg_lexicon_default(pg_lexicon** out);
/* One word per line; replaces the built-in list. */
PG_API pg_status pg_lexicon_read(const char* path, pg_lexicon** out);
/* 1 when the token is excluded from scoring (keyword, whitespace or
 * punctuation), 0 otherwise. Returns 0 on NULL arguments. */
PG_API int pg_lexicon_is_reserved(const pg_lexicon* lex, const char* token_text);
PG_API void pg_lexicon_free(pg_lexicon* lex);

/* ---- generation logs (JSONL: id, question, sql, tokens) ------------ */

PG_API pg_status pg_generations_read(const char* path, pg_generations** out);
PG_API size_t pg_generations_size(const pg_generations* gens);
PG_API pg_status pg_generations_get(const pg_generations* gens, size_t index,
                                    const char** id, const char** sql, size_t* token_count);
PG_API void pg_generations_free(pg_generations* gens);

/* ---- gold labels (JSONL: id, gold_sql or null) ---------------------- */

PG_API pg_status pg_labels_read(const char* path, pg_labels** out);
PG_API size_t pg_labels_size(const pg_labels* labels);
/* gold_sql comes back NULL for unanswerable ids. */
PG_API pg_status pg_labels_get(const pg_labels* labels, size_t index,
                               const char** id, const char** gold_sql);
PG_API void pg_labels_free(pg_labels* labels);

/* ---- confidence scoring -------------------------------------------- */

/* bottom_k is the number of lowest log probabilities averaged (ignored by
 * the entropy scorer). lex may be NULL for the default lexicon. */
PG_API pg_status pg_score_dataset(const pg_generations* gens, pg_scorer_kind kind,
                                  size_t bottom_k, const pg_lexicon* lex, pg_scores** out);
PG_API pg_status pg_scores_read(const char* path, pg_scores** out);
PG_API pg_status pg_scores_write(const pg_scores* scores, const char* path);
PG_API size_t pg_scores_size(const pg_scores* scores);
/* Unscorable records report value -INFINITY and n_considered 0. */
PG_API pg_status pg_scores_get(const pg_scores* scores, size_t index, const char** id,
                               double* value, size_t* n_considered, int* used_fallback);
PG_API void pg_scores_free(pg_scores* scores);

/* ---- gating ---------------------------------------------------------- */

/* Abstains on the k lowest scores (ties broken by id). */
PG_API pg_status pg_gate_rank(const pg_scores* scores, size_t k, pg_decisions** out);
/* k = round(n * fraction), half away from zero. */
PG_API pg_status pg_gate_fraction(const pg_scores* scores, double fraction, pg_decisions** out);
/* Abstains on scores strictly below threshold. */
PG_API pg_status pg_gate_absolute(const pg_scores* scores, double threshold, pg_decisions** out);
PG_API pg_status pg_k_from_fraction(size_t n, double fraction, size_t* out_k);
/* Accuracy on answerable questions implied by an answer-everything run at
 * penalty 0 and the dataset's unanswerable fraction. */
PG_API pg_status pg_infer_answerable_accuracy(double rs0_answer_all,
                                              double unanswerable_fraction,
                                              double* out_accuracy);

PG_API pg_status pg_decisions_read(const char* path, pg_decisions** out);
PG_API pg_status pg_decisions_write(const pg_decisions* decisions, const char* path);
PG_API size_t pg_decisions_size(const pg_decisions* decisions);
PG_API pg_status pg_decisions_get(const pg_decisions* decisions, size_t index,
                                  const char** id, int* answer, pg_gate_stage* stage);
PG_API void pg_decisions_free(pg_decisions* decisions);

/* ---- execution gate --------------------------------------------------- */

/* Re-checks every passing decision by executing its SQL read-only against
 * db_path; failures become EXECUTION_GATE abstentions. */
PG_API pg_status pg_exec_filter(const pg_decisions* decisions, const pg_generations* gens,
                                const char* db_path, int64_t timeout_ms, pg_decisions** out);

/* ---- prediction submission -------------------------------------------- */

/* One JSON object id -> SQL, with "null" marking abstentions. */
PG_API pg_status pg_predictions_write(const pg_decisions* decisions,
                                      const pg_generations* gens, const char* path);

/* ---- evaluation --------------------------------------------------------- */

/* Scores a submission against labels over a penalty grid ("0,5,10,N").
 * Writes rs_table.csv, outcomes.jsonl and run_summary.json under out_dir.
 * db_path may be NULL when no answered answerable predictions exist. */
PG_API pg_status pg_evaluate(const char* predictions_path, const pg_labels* labels,
                             const char* db_path, int64_t timeout_ms,
                             const char* penalty_grid, const char* out_dir);

/* ---- threshold sweep ----------------------------------------------------- */

/* Evaluates the reliability score at every rank-gate k and reports the
 * maximizer. penalty is a number or "N". curve_csv_path may be NULL.
 * db_path may be NULL when no labeled id is answerable. */
PG_API pg_status pg_sweep(const pg_scores* scores, const pg_labels* labels,
                          const pg_generations* gens, const char* db_path,
                          int64_t timeout_ms, const char* penalty,
                          const char* curve_csv_path, size_t* out_k_star,
                          double* out_rs_star);

/* ---- score distribution ---------------------------------------------------- */

/* Bins scores per label class into csv_path. Mean out-params may be NULL. */
PG_API pg_status pg_histogram(const pg_scores* scores, const pg_labels* labels,
                              double bin_width, const char* csv_path,
                              double* out_answerable_mean, double* out_unanswerable_mean);

/* ---- one-shot pipeline -------------------------------------------------------- */

/* Runs score -> gate -> execution filter -> predict -> evaluate from a JSON
 * config file. overrides_json (same schema, may be NULL) wins field-by-field;
 * the PROBGATE_DB environment variable supplies db_path when neither sets it.
 * On success *out_summary_json holds the run summary; free it with
 * pg_string_free. */
PG_API pg_status pg_pipeline_run(const char* config_path, const char* overrides_json,
                                 char** out_summary_json);
PG_API void pg_string_free(char* s);

/* ---- chat-format training logs -------------------------------------- */

PG_API pg_status pg_training_pairs_read(const char* path, pg_training_pairs** out);
PG_API size_t pg_training_pairs_size(const pg_training_pairs* pairs);
PG_API size_t pg_training_pairs_dropped(const pg_training_pairs* pairs);
PG_API pg_status pg_training_pairs_get(const pg_training_pairs* pairs, size_t index,
                                       const char** question, const char** gold_sql);
PG_API void pg_training_pairs_free(pg_training_pairs* pairs);

/* ---- generation client (network) ------------------------------------- */

/* Fetches completions with per-token log probabilities for a JSONL file of
 * {id, question} rows and writes a generation log. client_config_json fields:
 * base_url, model, api_key_env, system_prompt, max_retries,
 * request_timeout_ms, temperature, top_logprobs, concurrency. */
PG_API pg_status pg_fetch_generations(const char* questions_path,
                                      const char* client_config_json,
                                      const char* out_path);

#ifdef __cplusplus
}
#endif

#endif /* PROBGATE_H */
