#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace probgate {

// Shared data vocabulary for the whole pipeline. Everything here is a plain
// immutable value: construct, validate, pass around. No I/O.

/// One generated token with its natural-log probability. `alternatives`
/// holds the top-k candidates at this position (used only by the entropy
/// scorer) and is kept sorted descending by logprob.
struct TokenAlternative {
    std::string text;
    double logprob = 0.0; // natural log, <= 0

    bool operator==(const TokenAlternative&) const = default;
};

struct ScoredToken {
    std::string text;
    double logprob = 0.0; // natural log, <= 0
    std::vector<TokenAlternative> alternatives;

    bool operator==(const ScoredToken&) const = default;
};

/// One question's generation: the SQL text plus the token stream it was
/// assembled from. tokens may be empty only when sql is empty.
struct GenerationRecord {
    std::string id;
    std::string question;
    std::string sql;
    std::vector<ScoredToken> tokens;

    bool operator==(const GenerationRecord&) const = default;
};

/// Gold annotation. Absent gold_sql marks the question unanswerable.
struct EvalLabel {
    std::string id;
    std::optional<std::string> gold_sql;

    bool answerable() const noexcept { return gold_sql.has_value(); }

    bool operator==(const EvalLabel&) const = default;
};

/// Sentinel confidence for records that cannot be scored at all (no tokens).
/// It sorts below every real score, so the rank gate abstains on it first.
inline constexpr double kUnscorableValue = -std::numeric_limits<double>::infinity();

struct ConfidenceScore {
    std::string id;
    double value = 0.0;       // averaged bottom-k logprob; higher = more confident
    std::size_t n_considered = 0;
    bool used_fallback = false; // no non-reserved token existed

    bool unscorable() const noexcept { return n_considered == 0; }

    bool operator==(const ConfidenceScore&) const = default;
};

enum class GateStage {
    Pass,
    RankGate,
    ExecutionGate,
};

/// Per-record verdict. answer == false exactly when a gate stage abstained.
struct GateDecision {
    std::string id;
    bool answer = true;
    GateStage stage = GateStage::Pass;

    bool operator==(const GateDecision&) const = default;
};

/// Penalty configuration for the reliability score. The n_samples sentinel
/// resolves to the evaluated-set size, once per scoring run.
struct RsConfig {
    double penalty = 0.0;
    bool penalty_is_n_samples = false;

    static constexpr double kScale = 100.0;

    static RsConfig fixed(double c) { return RsConfig{c, false}; }
    static RsConfig n_samples() { return RsConfig{0.0, true}; }

    bool operator==(const RsConfig&) const = default;
};

double resolve_penalty(const RsConfig& config, std::size_t dataset_size);

const char* gate_stage_name(GateStage stage);
GateStage gate_stage_from_name(const std::string& name);

// Construction-time invariant checks. Ingestion calls these with the record
// id so violations name their source; `context` prefixes the message.
void validate_token(const ScoredToken& token, const std::string& context);
void validate_record(const GenerationRecord& record);

/// Normalizes a token's alternatives to the descending-by-logprob order the
/// type promises. Stable, so equal logprobs keep their wire order.
void sort_alternatives(ScoredToken& token);

} // namespace probgate
