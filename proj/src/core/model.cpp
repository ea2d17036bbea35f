#include "core/model.hpp"

#include <algorithm>

#include "core/error.hpp"

namespace probgate {

double resolve_penalty(const RsConfig& config, std::size_t dataset_size) {
    if (dataset_size == 0) {
        throw_argument("resolve_penalty: dataset_size must be >= 1");
    }
    if (config.penalty_is_n_samples) {
        return static_cast<double>(dataset_size);
    }
    if (config.penalty < 0.0) {
        throw_argument("resolve_penalty: penalty must be >= 0");
    }
    return config.penalty;
}

const char* gate_stage_name(GateStage stage) {
    switch (stage) {
        case GateStage::Pass: return "PASS";
        case GateStage::RankGate: return "RANK_GATE";
        case GateStage::ExecutionGate: return "EXECUTION_GATE";
    }
    return "PASS";
}

GateStage gate_stage_from_name(const std::string& name) {
    if (name == "PASS") return GateStage::Pass;
    if (name == "RANK_GATE") return GateStage::RankGate;
    if (name == "EXECUTION_GATE") return GateStage::ExecutionGate;
    throw_parse("unknown gate stage '" + name + "'");
}

void validate_token(const ScoredToken& token, const std::string& context) {
    if (token.logprob > 0.0) {
        throw_validation(context + ": token '" + token.text + "' has positive logprob");
    }
    for (const auto& alt : token.alternatives) {
        if (alt.logprob > 0.0) {
            throw_validation(context + ": alternative '" + alt.text + "' has positive logprob");
        }
    }
}

void validate_record(const GenerationRecord& record) {
    if (record.id.empty()) {
        throw_validation("record with empty id");
    }
    if (record.tokens.empty() && !record.sql.empty()) {
        throw_validation("record '" + record.id + "': non-empty sql with empty token stream");
    }
    for (const auto& token : record.tokens) {
        validate_token(token, "record '" + record.id + "'");
    }
}

void sort_alternatives(ScoredToken& token) {
    std::stable_sort(token.alternatives.begin(), token.alternatives.end(),
                     [](const TokenAlternative& a, const TokenAlternative& b) {
                         return a.logprob > b.logprob;
                     });
}

} // namespace probgate
