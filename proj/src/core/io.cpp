#include "core/io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "core/error.hpp"

namespace probgate::io {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw_io("cannot open '" + path + "' for reading");
    }
    return in;
}

std::ofstream open_output(const std::string& path) {
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty()) {
        std::error_code ec;
        fs::create_directories(parent, ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw_io("cannot open '" + path + "' for writing");
    }
    return out;
}

bool blank(const std::string& line) {
    return trim_copy(line).empty();
}

// Applies `fn` to each non-blank JSONL line, reporting parse failures with
// the 1-based line number.
template <typename Fn>
void for_each_jsonl(const std::string& path, Fn&& fn) {
    std::ifstream in = open_input(path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) continue;
        json doc;
        try {
            doc = json::parse(line);
        } catch (const json::exception& e) {
            throw_parse(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        fn(doc, line_no);
    }
}

std::string require_string(const json& doc, const char* field, const std::string& where) {
    const auto it = doc.find(field);
    if (it == doc.end() || !it->is_string()) {
        throw_parse(where + ": missing or non-string field '" + field + "'");
    }
    return it->get<std::string>();
}

double require_number(const json& doc, const char* field, const std::string& where) {
    const auto it = doc.find(field);
    if (it == doc.end() || !it->is_number()) {
        throw_parse(where + ": missing or non-numeric field '" + field + "'");
    }
    return it->get<double>();
}

TokenAlternative parse_alternative(const json& alt, const std::string& where) {
    if (alt.is_array()) {
        if (alt.size() != 2 || !alt[0].is_string() || !alt[1].is_number()) {
            throw_parse(where + ": alternative must be [text, logprob]");
        }
        return TokenAlternative{alt[0].get<std::string>(), alt[1].get<double>()};
    }
    if (alt.is_object()) {
        return TokenAlternative{require_string(alt, "text", where),
                                require_number(alt, "logprob", where)};
    }
    throw_parse(where + ": alternative must be an object or a pair");
}

ScoredToken parse_token(const json& tok, const std::string& where) {
    if (!tok.is_object()) {
        throw_parse(where + ": token entries must be objects");
    }
    ScoredToken token;
    token.text = require_string(tok, "text", where);
    token.logprob = require_number(tok, "logprob", where);
    if (const auto it = tok.find("alternatives"); it != tok.end() && !it->is_null()) {
        if (!it->is_array()) {
            throw_parse(where + ": 'alternatives' must be an array");
        }
        for (const auto& alt : *it) {
            token.alternatives.push_back(parse_alternative(alt, where));
        }
    }
    sort_alternatives(token);
    return token;
}

json token_to_json(const ScoredToken& token) {
    json tok;
    tok["text"] = token.text;
    tok["logprob"] = token.logprob;
    if (!token.alternatives.empty()) {
        json alts = json::array();
        for (const auto& alt : token.alternatives) {
            alts.push_back({{"text", alt.text}, {"logprob", alt.logprob}});
        }
        tok["alternatives"] = std::move(alts);
    }
    return tok;
}

} // namespace

std::vector<GenerationRecord> read_generations(const std::string& path) {
    std::vector<GenerationRecord> records;
    std::unordered_set<std::string> seen;
    for_each_jsonl(path, [&](const json& doc, std::size_t line_no) {
        const std::string where = path + ":" + std::to_string(line_no);
        GenerationRecord record;
        record.id = require_string(doc, "id", where);
        record.question = require_string(doc, "question", where);
        record.sql = require_string(doc, "sql", where);
        const auto tokens = doc.find("tokens");
        if (tokens == doc.end() || !tokens->is_array()) {
            throw_parse(where + ": missing or non-array field 'tokens'");
        }
        for (const auto& tok : *tokens) {
            record.tokens.push_back(parse_token(tok, where));
        }
        validate_record(record);
        if (!seen.insert(record.id).second) {
            throw_validation(path + ": duplicate id '" + record.id + "'");
        }
        records.push_back(std::move(record));
    });
    return records;
}

void write_generations(const std::vector<GenerationRecord>& records, const std::string& path) {
    std::ofstream out = open_output(path);
    for (const auto& record : records) {
        json doc;
        doc["id"] = record.id;
        doc["question"] = record.question;
        doc["sql"] = record.sql;
        json tokens = json::array();
        for (const auto& token : record.tokens) {
            tokens.push_back(token_to_json(token));
        }
        doc["tokens"] = std::move(tokens);
        out << doc.dump() << '\n';
    }
}

std::vector<EvalLabel> read_labels(const std::string& path) {
    std::vector<EvalLabel> labels;
    std::unordered_set<std::string> seen;
    for_each_jsonl(path, [&](const json& doc, std::size_t line_no) {
        const std::string where = path + ":" + std::to_string(line_no);
        EvalLabel label;
        label.id = require_string(doc, "id", where);
        const auto gold = doc.find("gold_sql");
        if (gold == doc.end()) {
            throw_parse(where + ": missing field 'gold_sql'");
        }
        if (gold->is_string()) {
            label.gold_sql = gold->get<std::string>();
        } else if (!gold->is_null()) {
            throw_parse(where + ": 'gold_sql' must be a string or null");
        }
        if (!seen.insert(label.id).second) {
            throw_validation(path + ": duplicate id '" + label.id + "'");
        }
        labels.push_back(std::move(label));
    });
    return labels;
}

void write_labels(const std::vector<EvalLabel>& labels, const std::string& path) {
    std::ofstream out = open_output(path);
    for (const auto& label : labels) {
        json doc;
        doc["id"] = label.id;
        doc["gold_sql"] = label.gold_sql.has_value() ? json(*label.gold_sql) : json(nullptr);
        out << doc.dump() << '\n';
    }
}

std::vector<ConfidenceScore> read_scores(const std::string& path) {
    std::vector<ConfidenceScore> scores;
    std::unordered_set<std::string> seen;
    for_each_jsonl(path, [&](const json& doc, std::size_t line_no) {
        const std::string where = path + ":" + std::to_string(line_no);
        ConfidenceScore score;
        score.id = require_string(doc, "id", where);
        const auto value = doc.find("value");
        if (value == doc.end()) {
            throw_parse(where + ": missing field 'value'");
        }
        if (value->is_null()) {
            score.value = kUnscorableValue; // unscorable sentinel
        } else if (value->is_number()) {
            score.value = value->get<double>();
        } else {
            throw_parse(where + ": 'value' must be a number or null");
        }
        score.n_considered = static_cast<std::size_t>(require_number(doc, "n_considered", where));
        const auto fallback = doc.find("used_fallback");
        if (fallback == doc.end() || !fallback->is_boolean()) {
            throw_parse(where + ": missing or non-boolean field 'used_fallback'");
        }
        score.used_fallback = fallback->get<bool>();
        if (!seen.insert(score.id).second) {
            throw_validation(path + ": duplicate id '" + score.id + "'");
        }
        scores.push_back(std::move(score));
    });
    return scores;
}

void write_scores(const std::vector<ConfidenceScore>& scores, const std::string& path) {
    std::ofstream out = open_output(path);
    for (const auto& score : scores) {
        json doc;
        doc["id"] = score.id;
        // non-finite sentinel serializes as null
        doc["value"] = std::isfinite(score.value) ? json(score.value) : json(nullptr);
        doc["n_considered"] = score.n_considered;
        doc["used_fallback"] = score.used_fallback;
        out << doc.dump() << '\n';
    }
}

std::vector<GateDecision> read_decisions(const std::string& path) {
    std::vector<GateDecision> decisions;
    std::unordered_set<std::string> seen;
    for_each_jsonl(path, [&](const json& doc, std::size_t line_no) {
        const std::string where = path + ":" + std::to_string(line_no);
        GateDecision decision;
        decision.id = require_string(doc, "id", where);
        const auto answer = doc.find("answer");
        if (answer == doc.end() || !answer->is_boolean()) {
            throw_parse(where + ": missing or non-boolean field 'answer'");
        }
        decision.answer = answer->get<bool>();
        decision.stage = gate_stage_from_name(require_string(doc, "stage", where));
        if (decision.answer != (decision.stage == GateStage::Pass)) {
            throw_validation(where + ": id '" + decision.id +
                             "' has inconsistent answer/stage fields");
        }
        if (!seen.insert(decision.id).second) {
            throw_validation(path + ": duplicate id '" + decision.id + "'");
        }
        decisions.push_back(std::move(decision));
    });
    return decisions;
}

void write_decisions(const std::vector<GateDecision>& decisions, const std::string& path) {
    std::ofstream out = open_output(path);
    for (const auto& decision : decisions) {
        json doc;
        doc["id"] = decision.id;
        doc["answer"] = decision.answer;
        doc["stage"] = gate_stage_name(decision.stage);
        out << doc.dump() << '\n';
    }
}

void write_predictions(const std::vector<GateDecision>& decisions,
                       const std::vector<GenerationRecord>& records,
                       const std::string& path) {
    std::unordered_map<std::string, const GenerationRecord*> by_id;
    by_id.reserve(records.size());
    for (const auto& record : records) {
        by_id.emplace(record.id, &record);
    }
    json doc = json::object();
    std::unordered_set<std::string> covered;
    for (const auto& decision : decisions) {
        const auto it = by_id.find(decision.id);
        if (it == by_id.end()) {
            throw_argument("write_predictions: decision '" + decision.id +
                           "' has no matching record");
        }
        covered.insert(decision.id);
        doc[decision.id] = decision.answer ? it->second->sql : kAbstainMarker;
    }
    for (const auto& record : records) {
        if (covered.count(record.id) == 0) {
            throw_argument("write_predictions: record '" + record.id + "' has no decision");
        }
    }
    std::ofstream out = open_output(path);
    out << doc.dump(2) << '\n';
}

std::vector<std::pair<std::string, std::string>> read_predictions(const std::string& path) {
    std::ifstream in = open_input(path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw_parse(path + ": " + e.what());
    }
    if (!doc.is_object()) {
        throw_parse(path + ": predictions must be a single JSON object keyed by id");
    }
    std::vector<std::pair<std::string, std::string>> predictions;
    predictions.reserve(doc.size());
    for (const auto& [id, value] : doc.items()) {
        if (!value.is_string()) {
            throw_parse(path + ": prediction for '" + id +
                        "' must be a string (use \"null\" to abstain)");
        }
        predictions.emplace_back(id, value.get<std::string>());
    }
    return predictions;
}

TrainingPairs read_training_pairs(const std::string& path) {
    TrainingPairs result;
    for_each_jsonl(path, [&](const json& doc, std::size_t line_no) {
        const std::string where = path + ":" + std::to_string(line_no);
        const auto messages = doc.find("messages");
        if (messages == doc.end() || !messages->is_array()) {
            throw_parse(where + ": missing or non-array field 'messages'");
        }
        if (messages->size() != 3) {
            throw_parse(where + ": expected exactly 3 messages (system, user, assistant), got " +
                        std::to_string(messages->size()));
        }
        static const char* const kRoles[3] = {"system", "user", "assistant"};
        std::string contents[3];
        for (std::size_t i = 0; i < 3; ++i) {
            const json& msg = (*messages)[i];
            if (require_string(msg, "role", where) != kRoles[i]) {
                throw_parse(where + ": message " + std::to_string(i) + " must have role '" +
                            kRoles[i] + "'");
            }
            contents[i] = require_string(msg, "content", where);
        }
        if (contents[2] == kAbstainMarker) {
            ++result.dropped_unanswerable;
        } else {
            result.pairs.emplace_back(contents[1], contents[2]);
        }
    });
    return result;
}

ReservedLexicon read_lexicon_file(const std::string& path) {
    std::ifstream in = open_input(path);
    std::vector<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        if (!blank(line)) {
            words.push_back(trim_copy(line));
        }
    }
    return ReservedLexicon::from_words(words);
}

const char* gate_mode_name(GateMode mode) {
    switch (mode) {
        case GateMode::FixedK: return "fixed_k";
        case GateMode::Fraction: return "fraction";
        case GateMode::Absolute: return "absolute";
        case GateMode::Sweep: return "sweep";
    }
    return "fixed_k";
}

RsConfig parse_penalty(const std::string& token) {
    const std::string t = trim_copy(token);
    if (t == "N" || t == "n") {
        return RsConfig::n_samples();
    }
    try {
        std::size_t pos = 0;
        const double value = std::stod(t, &pos);
        if (pos != t.size()) throw std::invalid_argument(t);
        if (value < 0.0) {
            throw_argument("penalty must be >= 0, got '" + t + "'");
        }
        return RsConfig::fixed(value);
    } catch (const Error&) {
        throw;
    } catch (const std::exception&) {
        throw_parse("invalid penalty '" + t + "' (expected a number or 'N')");
    }
}

std::vector<RsConfig> parse_penalty_grid(const std::string& csv) {
    std::vector<RsConfig> grid;
    std::stringstream stream(csv);
    std::string token;
    while (std::getline(stream, token, ',')) {
        if (!trim_copy(token).empty()) {
            grid.push_back(parse_penalty(token));
        }
    }
    if (grid.empty()) {
        throw_argument("penalty grid is empty");
    }
    return grid;
}

namespace {

RsConfig penalty_from_json(const json& value, const std::string& where) {
    if (value.is_string()) {
        return parse_penalty(value.get<std::string>());
    }
    if (value.is_number()) {
        const double c = value.get<double>();
        if (c < 0.0) {
            throw_parse(where + ": penalty must be >= 0");
        }
        return RsConfig::fixed(c);
    }
    throw_parse(where + ": penalty must be a number or the string \"N\"");
}

// Applies one config document onto `config`. `base_dir` resolves relative
// paths; empty means take paths verbatim (CLI overrides).
void apply_config_json(RunConfig& config, const json& doc, const fs::path& base_dir,
                       const std::string& where) {
    const auto resolve = [&](const std::string& p) -> std::string {
        if (base_dir.empty() || fs::path(p).is_absolute()) return p;
        return (base_dir / p).lexically_normal().string();
    };
    for (const auto& [key, value] : doc.items()) {
        if (key == "scorer") {
            const std::string s = value.get<std::string>();
            if (s == "probgate") {
                config.scorer = scoring::ScorerKind::ProbGate;
            } else if (s == "max_entropy") {
                config.scorer = scoring::ScorerKind::MaxEntropy;
            } else {
                throw_parse(where + ": unknown scorer '" + s + "'");
            }
        } else if (key == "t") {
            const auto t = value.get<std::int64_t>();
            if (t < 1) throw_parse(where + ": 't' must be >= 1");
            config.t = static_cast<std::size_t>(t);
        } else if (key == "gate_mode") {
            const std::string m = value.get<std::string>();
            if (m == "fixed_k") {
                config.gate_mode = GateMode::FixedK;
            } else if (m == "fraction") {
                config.gate_mode = GateMode::Fraction;
            } else if (m == "absolute") {
                config.gate_mode = GateMode::Absolute;
            } else if (m == "sweep") {
                config.gate_mode = GateMode::Sweep;
            } else {
                throw_parse(where + ": unknown gate_mode '" + m + "'");
            }
        } else if (key == "k") {
            if (value.is_null()) { config.k.reset(); continue; }
            const auto k = value.get<std::int64_t>();
            if (k < 0) throw_parse(where + ": 'k' must be >= 0");
            config.k = static_cast<std::size_t>(k);
        } else if (key == "fraction") {
            if (value.is_null()) { config.fraction.reset(); continue; }
            const double f = value.get<double>();
            if (f < 0.0 || f > 1.0) throw_parse(where + ": 'fraction' must lie in [0,1]");
            config.fraction = f;
        } else if (key == "absolute_threshold") {
            if (value.is_null()) { config.absolute_threshold.reset(); continue; }
            const double thr = value.get<double>();
            if (thr > 0.0) throw_parse(where + ": 'absolute_threshold' must be <= 0");
            config.absolute_threshold = thr;
        } else if (key == "sweep_penalty") {
            if (value.is_null()) { config.sweep_penalty.reset(); continue; }
            config.sweep_penalty = penalty_from_json(value, where);
        } else if (key == "penalty_grid") {
            if (!value.is_array() || value.empty()) {
                throw_parse(where + ": 'penalty_grid' must be a non-empty array");
            }
            config.penalty_grid.clear();
            for (const auto& entry : value) {
                config.penalty_grid.push_back(penalty_from_json(entry, where));
            }
        } else if (key == "db_path") {
            if (value.is_null()) { config.db_path.reset(); continue; }
            config.db_path = resolve(value.get<std::string>());
        } else if (key == "exec_timeout_ms") {
            const auto ms = value.get<std::int64_t>();
            if (ms < 1) throw_parse(where + ": 'exec_timeout_ms' must be >= 1");
            config.exec_timeout_ms = ms;
        } else if (key == "generations") {
            config.generations_path = resolve(value.get<std::string>());
        } else if (key == "labels") {
            if (value.is_null()) { config.labels_path.reset(); continue; }
            config.labels_path = resolve(value.get<std::string>());
        } else if (key == "lexicon") {
            if (value.is_null()) { config.lexicon_path.reset(); continue; }
            config.lexicon_path = resolve(value.get<std::string>());
        } else if (key == "out_dir") {
            config.out_dir = resolve(value.get<std::string>());
        } else {
            throw_parse(where + ": unknown config field '" + key + "'");
        }
    }
}

} // namespace

RunConfig load_run_config(const std::string& path, const std::string& overrides_json) {
    std::ifstream in = open_input(path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw_parse(path + ": " + e.what());
    }
    if (!doc.is_object()) {
        throw_parse(path + ": run config must be a JSON object");
    }
    RunConfig config;
    config.penalty_grid = {RsConfig::fixed(0), RsConfig::fixed(5), RsConfig::fixed(10),
                           RsConfig::n_samples()};
    try {
        apply_config_json(config, doc, fs::path(path).parent_path(), path);
        if (!overrides_json.empty()) {
            json overrides = json::parse(overrides_json);
            apply_config_json(config, overrides, fs::path(), "overrides");
        }
    } catch (const Error&) {
        throw;
    } catch (const json::exception& e) {
        throw_parse(path + ": " + e.what());
    }
    validate_run_config(config);
    return config;
}

void validate_run_config(const RunConfig& config) {
    const bool want_k = config.gate_mode == GateMode::FixedK;
    const bool want_fraction = config.gate_mode == GateMode::Fraction;
    const bool want_threshold = config.gate_mode == GateMode::Absolute;
    const bool want_sweep = config.gate_mode == GateMode::Sweep;
    const auto mismatch = [&](bool want, bool have, const char* field) {
        if (want && !have) {
            throw_validation(std::string("run config: gate_mode '") +
                             gate_mode_name(config.gate_mode) + "' requires field '" + field +
                             "'");
        }
        if (!want && have) {
            throw_validation(std::string("run config: field '") + field +
                             "' conflicts with gate_mode '" + gate_mode_name(config.gate_mode) +
                             "'");
        }
    };
    mismatch(want_k, config.k.has_value(), "k");
    mismatch(want_fraction, config.fraction.has_value(), "fraction");
    mismatch(want_threshold, config.absolute_threshold.has_value(), "absolute_threshold");
    mismatch(want_sweep, config.sweep_penalty.has_value(), "sweep_penalty");
    if (config.t < 1) {
        throw_validation("run config: 't' must be >= 1");
    }
    if (config.penalty_grid.empty()) {
        throw_validation("run config: empty penalty grid");
    }
}

void write_sweep_curve_csv(const std::vector<std::pair<std::size_t, double>>& curve,
                           const std::string& path) {
    std::ofstream out = open_output(path);
    out << "k,rs\n";
    for (const auto& [k, rs] : curve) {
        out << k << ',' << format_double(rs) << '\n';
    }
}

void write_rs_table_csv(const std::vector<metrics::RsTableRow>& rows, const std::string& path) {
    std::ofstream out = open_output(path);
    out << "c,c_resolved,rs\n";
    for (const auto& row : rows) {
        out << row.c_label << ',' << format_double(row.c_resolved) << ',' << format_double(row.rs)
            << '\n';
    }
}

void write_histogram_csv(const metrics::HistogramData& histogram, const std::string& path) {
    std::ofstream out = open_output(path);
    out << "# answerable_mean=" << format_double(histogram.answerable_mean)
        << " unanswerable_mean=" << format_double(histogram.unanswerable_mean) << '\n';
    out << "bin_lo,bin_hi,answerable,unanswerable\n";
    for (std::size_t i = 0; i + 1 < histogram.edges.size(); ++i) {
        out << format_double(histogram.edges[i]) << ',' << format_double(histogram.edges[i + 1])
            << ',' << histogram.answerable[i] << ',' << histogram.unanswerable[i] << '\n';
    }
}

void write_outcomes_jsonl(const std::vector<metrics::SampleOutcome>& outcomes,
                          const std::string& path) {
    std::ofstream out = open_output(path);
    for (const auto& outcome : outcomes) {
        json doc;
        doc["id"] = outcome.id;
        doc["case"] = metrics::sample_case_name(outcome.sample_case);
        out << doc.dump() << '\n';
    }
}

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buffer[64];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, result.ptr);
}

} // namespace probgate::io
