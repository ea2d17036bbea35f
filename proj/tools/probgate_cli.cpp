// probgate command line: post-processes text-to-SQL generation logs into
// reliability-gated submissions and evaluation reports. Every subcommand is
// a thin wrapper over the probgate C API.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "probgate/probgate.h"

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& context) {
    std::fprintf(stderr, "probgate: error: %s: %s\n", context.c_str(), pg_last_error());
    std::exit(1);
}

void check(pg_status status, const std::string& context) {
    if (status != PG_OK) fail(context);
}

// RAII for the C handles so early exits do not leak.
template <typename T, void (*Free)(T*)>
struct Handle {
    T* ptr = nullptr;
    ~Handle() { Free(ptr); }
    T** out() { return &ptr; }
    T* get() const { return ptr; }
};

using GenerationsHandle = Handle<pg_generations, pg_generations_free>;
using LabelsHandle = Handle<pg_labels, pg_labels_free>;
using ScoresHandle = Handle<pg_scores, pg_scores_free>;
using DecisionsHandle = Handle<pg_decisions, pg_decisions_free>;
using LexiconHandle = Handle<pg_lexicon, pg_lexicon_free>;

std::optional<std::string> db_or_env(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("PROBGATE_DB"); env != nullptr && *env != '\0') {
        return std::string(env);
    }
    return std::nullopt;
}

void load_lexicon(const std::string& path, LexiconHandle& lexicon) {
    if (path.empty()) {
        check(pg_lexicon_default(lexicon.out()), "loading default lexicon");
    } else {
        check(pg_lexicon_read(path.c_str(), lexicon.out()), "loading lexicon '" + path + "'");
    }
}

int count_abstained(const pg_decisions* decisions) {
    int abstained = 0;
    const size_t n = pg_decisions_size(decisions);
    for (size_t i = 0; i < n; ++i) {
        int answer = 0;
        pg_decisions_get(decisions, i, nullptr, &answer, nullptr);
        abstained += answer == 0 ? 1 : 0;
    }
    return abstained;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"reliability gating for text-to-SQL generation logs"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(pg_version()));

    // score
    auto* score = app.add_subcommand("score", "score generations by token log probability");
    std::string score_generations, score_out, score_scorer = "probgate", score_lexicon;
    std::size_t score_t = 10;
    score->add_option("--generations", score_generations, "generation log (JSONL)")->required();
    score->add_option("--out", score_out, "scores output (JSONL)")->required();
    score->add_option("--scorer", score_scorer, "probgate | max-entropy")
        ->check(CLI::IsMember({"probgate", "max-entropy"}));
    score->add_option("--t", score_t, "bottom-k size (default 10)");
    score->add_option("--lexicon", score_lexicon, "reserved-word override file");

    // gate
    auto* gate = app.add_subcommand("gate", "turn scores into answer/abstain decisions");
    std::string gate_scores, gate_out;
    std::optional<std::size_t> gate_k;
    std::optional<double> gate_fraction, gate_threshold;
    gate->add_option("--scores", gate_scores, "scores file (JSONL)")->required();
    gate->add_option("--out", gate_out, "decisions output (JSONL)")->required();
    auto* opt_k = gate->add_option("--k", gate_k, "abstain on the k lowest scores");
    auto* opt_fraction =
        gate->add_option("--fraction", gate_fraction, "abstain on round(n*fraction) records");
    auto* opt_threshold =
        gate->add_option("--threshold", gate_threshold, "abstain strictly below this score");
    opt_k->excludes(opt_fraction)->excludes(opt_threshold);
    opt_fraction->excludes(opt_threshold);

    // exec-filter
    auto* exec_filter =
        app.add_subcommand("exec-filter", "abstain on answers whose SQL fails to execute");
    std::string ef_decisions, ef_generations, ef_db, ef_out;
    std::int64_t ef_timeout = 5000;
    exec_filter->add_option("--decisions", ef_decisions, "decisions file (JSONL)")->required();
    exec_filter->add_option("--generations", ef_generations, "generation log (JSONL)")->required();
    exec_filter->add_option("--db", ef_db, "SQLite database (or set PROBGATE_DB)");
    exec_filter->add_option("--timeout-ms", ef_timeout, "per-query timeout (default 5000)");
    exec_filter->add_option("--out", ef_out, "filtered decisions output")->required();

    // predict
    auto* predict = app.add_subcommand("predict", "write the prediction submission");
    std::string pr_decisions, pr_generations, pr_out;
    predict->add_option("--decisions", pr_decisions, "decisions file (JSONL)")->required();
    predict->add_option("--generations", pr_generations, "generation log (JSONL)")->required();
    predict->add_option("--out", pr_out, "predictions output (JSON)")->required();

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "score a submission against gold labels");
    std::string ev_predictions, ev_labels, ev_db, ev_penalties = "0,5,10,N", ev_out_dir = "report";
    std::int64_t ev_timeout = 5000;
    evaluate->add_option("--predictions", ev_predictions, "submission file (JSON)")->required();
    evaluate->add_option("--labels", ev_labels, "gold labels (JSONL)")->required();
    evaluate->add_option("--db", ev_db, "SQLite database (or set PROBGATE_DB)");
    evaluate->add_option("--timeout-ms", ev_timeout, "per-query timeout (default 5000)");
    evaluate->add_option("--penalties", ev_penalties, "penalty grid (default 0,5,10,N)");
    evaluate->add_option("--out-dir", ev_out_dir, "report directory (default report)");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "find the reliability-maximizing gate threshold");
    std::string sw_scores, sw_labels, sw_generations, sw_db, sw_penalty = "10", sw_curve;
    std::int64_t sw_timeout = 5000;
    sweep->add_option("--scores", sw_scores, "scores file (JSONL)")->required();
    sweep->add_option("--labels", sw_labels, "gold labels (JSONL)")->required();
    sweep->add_option("--generations", sw_generations, "generation log (JSONL)")->required();
    sweep->add_option("--db", sw_db, "SQLite database (or set PROBGATE_DB)");
    sweep->add_option("--timeout-ms", sw_timeout, "per-query timeout (default 5000)");
    sweep->add_option("--penalty", sw_penalty, "penalty (number or N, default 10)");
    sweep->add_option("--curve-out", sw_curve, "write the (k, rs) curve as CSV");

    // histogram
    auto* histogram = app.add_subcommand("histogram", "export score distributions per label class");
    std::string hi_scores, hi_labels, hi_out;
    double hi_bin_width = 0.25;
    histogram->add_option("--scores", hi_scores, "scores file (JSONL)")->required();
    histogram->add_option("--labels", hi_labels, "gold labels (JSONL)")->required();
    histogram->add_option("--bin-width", hi_bin_width, "bin width (default 0.25)");
    histogram->add_option("--out", hi_out, "histogram output (CSV)")->required();

    // pipeline
    auto* pipeline = app.add_subcommand("pipeline", "run score, gate, filter, predict, evaluate");
    std::string pl_config;
    std::string pl_generations, pl_labels, pl_db, pl_out_dir, pl_scorer, pl_lexicon, pl_penalties;
    std::optional<std::size_t> pl_t, pl_k;
    std::optional<double> pl_fraction, pl_threshold;
    std::string pl_sweep_penalty;
    std::optional<std::int64_t> pl_timeout;
    pipeline->add_option("--config", pl_config, "run configuration (JSON)")->required();
    pipeline->add_option("--generations", pl_generations, "override: generation log");
    pipeline->add_option("--labels", pl_labels, "override: gold labels");
    pipeline->add_option("--db", pl_db, "override: SQLite database");
    pipeline->add_option("--out-dir", pl_out_dir, "override: artifact directory");
    pipeline->add_option("--scorer", pl_scorer, "override: probgate | max-entropy")
        ->check(CLI::IsMember({"probgate", "max-entropy"}));
    pipeline->add_option("--t", pl_t, "override: bottom-k size");
    pipeline->add_option("--k", pl_k, "override: fixed-k gate threshold");
    pipeline->add_option("--fraction", pl_fraction, "override: fraction gate");
    pipeline->add_option("--threshold", pl_threshold, "override: absolute gate");
    pipeline->add_option("--sweep-penalty", pl_sweep_penalty, "override: sweep penalty");
    pipeline->add_option("--penalties", pl_penalties, "override: evaluation penalty grid");
    pipeline->add_option("--timeout-ms", pl_timeout, "override: per-query timeout");
    pipeline->add_option("--lexicon", pl_lexicon, "override: reserved-word file");

    // fetch
    auto* fetch = app.add_subcommand("fetch", "fetch generations from a chat-completions API");
    std::string fe_questions, fe_out, fe_base_url = "https://api.openai.com";
    std::string fe_model = "gpt-3.5-turbo", fe_api_key_env = "OPENAI_API_KEY";
    int fe_retries = 3, fe_top_logprobs = 0, fe_concurrency = 1;
    std::int64_t fe_timeout = 30000;
    double fe_temperature = 0.0;
    fetch->add_option("--questions", fe_questions, "questions file (JSONL of id, question)")
        ->required();
    fetch->add_option("--out", fe_out, "generation log output (JSONL)")->required();
    fetch->add_option("--base-url", fe_base_url, "API base url");
    fetch->add_option("--model", fe_model, "model name");
    fetch->add_option("--api-key-env", fe_api_key_env, "env var holding the API key");
    fetch->add_option("--max-retries", fe_retries, "retry budget for transient failures");
    fetch->add_option("--timeout-ms", fe_timeout, "request timeout");
    fetch->add_option("--temperature", fe_temperature, "sampling temperature (default 0)");
    fetch->add_option("--top-logprobs", fe_top_logprobs, "alternatives per token (0 = none)");
    fetch->add_option("--concurrency", fe_concurrency, "parallel request cap (default 1)");

    CLI11_PARSE(app, argc, argv);

    if (score->parsed()) {
        GenerationsHandle gens;
        check(pg_generations_read(score_generations.c_str(), gens.out()),
              "reading '" + score_generations + "'");
        LexiconHandle lexicon;
        load_lexicon(score_lexicon, lexicon);
        ScoresHandle scores;
        const pg_scorer_kind kind =
            score_scorer == "max-entropy" ? PG_SCORER_MAX_ENTROPY : PG_SCORER_PROBGATE;
        check(pg_score_dataset(gens.get(), kind, score_t, lexicon.get(), scores.out()),
              "scoring");
        check(pg_scores_write(scores.get(), score_out.c_str()), "writing '" + score_out + "'");
        std::printf("scored %zu records -> %s\n", pg_scores_size(scores.get()),
                    score_out.c_str());
        return 0;
    }

    if (gate->parsed()) {
        ScoresHandle scores;
        check(pg_scores_read(gate_scores.c_str(), scores.out()), "reading '" + gate_scores + "'");
        DecisionsHandle decisions;
        if (gate_k.has_value()) {
            check(pg_gate_rank(scores.get(), *gate_k, decisions.out()), "gating");
        } else if (gate_fraction.has_value()) {
            check(pg_gate_fraction(scores.get(), *gate_fraction, decisions.out()), "gating");
        } else if (gate_threshold.has_value()) {
            check(pg_gate_absolute(scores.get(), *gate_threshold, decisions.out()), "gating");
        } else {
            std::fprintf(stderr, "probgate: error: gate needs one of --k, --fraction, "
                                 "--threshold\n");
            return 1;
        }
        check(pg_decisions_write(decisions.get(), gate_out.c_str()),
              "writing '" + gate_out + "'");
        std::printf("gated %zu records (%d abstained) -> %s\n",
                    pg_decisions_size(decisions.get()), count_abstained(decisions.get()),
                    gate_out.c_str());
        return 0;
    }

    if (exec_filter->parsed()) {
        const auto db = db_or_env(ef_db);
        if (!db) {
            std::fprintf(stderr, "probgate: error: exec-filter needs --db or PROBGATE_DB\n");
            return 1;
        }
        DecisionsHandle decisions;
        check(pg_decisions_read(ef_decisions.c_str(), decisions.out()),
              "reading '" + ef_decisions + "'");
        GenerationsHandle gens;
        check(pg_generations_read(ef_generations.c_str(), gens.out()),
              "reading '" + ef_generations + "'");
        DecisionsHandle filtered;
        check(pg_exec_filter(decisions.get(), gens.get(), db->c_str(), ef_timeout,
                             filtered.out()),
              "execution filtering");
        check(pg_decisions_write(filtered.get(), ef_out.c_str()), "writing '" + ef_out + "'");
        std::printf("execution-filtered %zu records (%d abstained total) -> %s\n",
                    pg_decisions_size(filtered.get()), count_abstained(filtered.get()),
                    ef_out.c_str());
        return 0;
    }

    if (predict->parsed()) {
        DecisionsHandle decisions;
        check(pg_decisions_read(pr_decisions.c_str(), decisions.out()),
              "reading '" + pr_decisions + "'");
        GenerationsHandle gens;
        check(pg_generations_read(pr_generations.c_str(), gens.out()),
              "reading '" + pr_generations + "'");
        check(pg_predictions_write(decisions.get(), gens.get(), pr_out.c_str()),
              "writing '" + pr_out + "'");
        std::printf("wrote predictions for %zu records -> %s\n",
                    pg_decisions_size(decisions.get()), pr_out.c_str());
        return 0;
    }

    if (evaluate->parsed()) {
        LabelsHandle labels;
        check(pg_labels_read(ev_labels.c_str(), labels.out()), "reading '" + ev_labels + "'");
        const auto db = db_or_env(ev_db);
        check(pg_evaluate(ev_predictions.c_str(), labels.get(),
                          db.has_value() ? db->c_str() : nullptr, ev_timeout,
                          ev_penalties.c_str(), ev_out_dir.c_str()),
              "evaluating");
        std::printf("evaluated %zu labels -> %s/rs_table.csv\n", pg_labels_size(labels.get()),
                    ev_out_dir.c_str());
        return 0;
    }

    if (sweep->parsed()) {
        ScoresHandle scores;
        check(pg_scores_read(sw_scores.c_str(), scores.out()), "reading '" + sw_scores + "'");
        LabelsHandle labels;
        check(pg_labels_read(sw_labels.c_str(), labels.out()), "reading '" + sw_labels + "'");
        GenerationsHandle gens;
        check(pg_generations_read(sw_generations.c_str(), gens.out()),
              "reading '" + sw_generations + "'");
        const auto db = db_or_env(sw_db);
        size_t k_star = 0;
        double rs_star = 0.0;
        check(pg_sweep(scores.get(), labels.get(), gens.get(),
                       db.has_value() ? db->c_str() : nullptr, sw_timeout, sw_penalty.c_str(),
                       sw_curve.empty() ? nullptr : sw_curve.c_str(), &k_star, &rs_star),
              "sweeping");
        std::printf("k_star=%zu rs_star=%.6f\n", k_star, rs_star);
        return 0;
    }

    if (histogram->parsed()) {
        ScoresHandle scores;
        check(pg_scores_read(hi_scores.c_str(), scores.out()), "reading '" + hi_scores + "'");
        LabelsHandle labels;
        check(pg_labels_read(hi_labels.c_str(), labels.out()), "reading '" + hi_labels + "'");
        double ans_mean = 0.0, una_mean = 0.0;
        check(pg_histogram(scores.get(), labels.get(), hi_bin_width, hi_out.c_str(), &ans_mean,
                           &una_mean),
              "writing '" + hi_out + "'");
        std::printf("histogram -> %s (answerable mean %.4f, unanswerable mean %.4f)\n",
                    hi_out.c_str(), ans_mean, una_mean);
        return 0;
    }

    if (pipeline->parsed()) {
        json overrides = json::object();
        if (!pl_generations.empty()) overrides["generations"] = pl_generations;
        if (!pl_labels.empty()) overrides["labels"] = pl_labels;
        if (!pl_db.empty()) overrides["db_path"] = pl_db;
        if (!pl_out_dir.empty()) overrides["out_dir"] = pl_out_dir;
        if (!pl_scorer.empty()) {
            overrides["scorer"] = pl_scorer == "max-entropy" ? "max_entropy" : "probgate";
        }
        if (pl_t) overrides["t"] = *pl_t;
        if (pl_k) overrides["k"] = *pl_k;
        if (pl_fraction) overrides["fraction"] = *pl_fraction;
        if (pl_threshold) overrides["absolute_threshold"] = *pl_threshold;
        if (!pl_sweep_penalty.empty()) overrides["sweep_penalty"] = pl_sweep_penalty;
        if (!pl_penalties.empty()) {
            json grid = json::array();
            std::stringstream stream(pl_penalties);
            std::string token;
            while (std::getline(stream, token, ',')) {
                if (!token.empty()) grid.push_back(token);
            }
            overrides["penalty_grid"] = std::move(grid);
        }
        if (pl_timeout) overrides["exec_timeout_ms"] = *pl_timeout;
        if (!pl_lexicon.empty()) overrides["lexicon"] = pl_lexicon;

        char* summary = nullptr;
        const std::string overrides_str = overrides.empty() ? "" : overrides.dump();
        check(pg_pipeline_run(pl_config.c_str(),
                              overrides_str.empty() ? nullptr : overrides_str.c_str(), &summary),
              "running pipeline");
        std::printf("%s", summary);
        pg_string_free(summary);
        return 0;
    }

    if (fetch->parsed()) {
        json config;
        config["base_url"] = fe_base_url;
        config["model"] = fe_model;
        config["api_key_env"] = fe_api_key_env;
        config["max_retries"] = fe_retries;
        config["request_timeout_ms"] = fe_timeout;
        config["temperature"] = fe_temperature;
        config["top_logprobs"] = fe_top_logprobs;
        config["concurrency"] = fe_concurrency;
        const std::string config_str = config.dump();
        check(pg_fetch_generations(fe_questions.c_str(), config_str.c_str(), fe_out.c_str()),
              "fetching generations");
        std::printf("wrote generations -> %s\n", fe_out.c_str());
        return 0;
    }

    return 0;
}
