#include "core/scoring.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace probgate::scoring {

namespace {

double mean(const std::vector<double>& values) {
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

// Entropy of the distribution obtained by renormalizing the alternative
// logprobs. Log-sum-exp keeps the renormalization stable for very low
// probabilities.
double token_entropy(const ScoredToken& token) {
    const auto& alts = token.alternatives;
    double max_lp = alts.front().logprob;
    for (const auto& alt : alts) max_lp = std::max(max_lp, alt.logprob);
    double z = 0.0;
    for (const auto& alt : alts) z += std::exp(alt.logprob - max_lp);
    const double log_z = max_lp + std::log(z);

    double entropy = 0.0;
    for (const auto& alt : alts) {
        const double log_p = alt.logprob - log_z;
        const double p = std::exp(log_p);
        entropy -= p * log_p; // p == 0 contributes exactly 0
    }
    return entropy;
}

} // namespace

ConfidenceScore calc_log_bottom_k(const GenerationRecord& record,
                                  std::size_t bottom_k,
                                  const ReservedLexicon& lex) {
    if (record.tokens.empty()) {
        throw_validation("record '" + record.id + "' has no tokens to score");
    }
    if (bottom_k == 0) {
        throw_argument("bottom_k must be >= 1");
    }

    std::vector<double> logprobs;
    logprobs.reserve(record.tokens.size());
    for (const auto& token : record.tokens) {
        if (!is_reserved(token.text, lex)) {
            logprobs.push_back(token.logprob);
        }
    }

    bool used_fallback = false;
    if (logprobs.empty()) {
        // All-keyword generation: the keyword confidence is the only signal.
        used_fallback = true;
        for (const auto& token : record.tokens) {
            logprobs.push_back(token.logprob);
        }
    }

    std::sort(logprobs.begin(), logprobs.end());
    logprobs.resize(std::min(bottom_k, logprobs.size()));

    return ConfidenceScore{record.id, mean(logprobs), logprobs.size(), used_fallback};
}

ConfidenceScore max_entropy_score(const GenerationRecord& record) {
    if (record.tokens.empty()) {
        throw_validation("record '" + record.id + "' has no tokens to score");
    }
    double max_entropy = 0.0;
    for (const auto& token : record.tokens) {
        if (token.alternatives.empty()) {
            throw_validation("record '" + record.id +
                             "': token without alternatives; entropy scoring needs top-k "
                             "logprobs, use the probgate scorer instead");
        }
        max_entropy = std::max(max_entropy, token_entropy(token));
    }
    return ConfidenceScore{record.id, -max_entropy, record.tokens.size(), false};
}

std::vector<ConfidenceScore> score_dataset(const std::vector<GenerationRecord>& records,
                                           const ScorerConfig& config,
                                           const ReservedLexicon& lex,
                                           std::vector<std::string>* warnings) {
    std::vector<ConfidenceScore> scores;
    scores.reserve(records.size());
    for (const auto& record : records) {
        try {
            if (config.kind == ScorerKind::MaxEntropy) {
                scores.push_back(max_entropy_score(record));
            } else {
                scores.push_back(calc_log_bottom_k(record, config.bottom_k, lex));
            }
        } catch (const Error& e) {
            // Unscorable records get the most-unconfident sentinel so the
            // rank gate abstains on them first.
            scores.push_back(ConfidenceScore{record.id, kUnscorableValue, 0, false});
            if (warnings != nullptr) {
                warnings->push_back(std::string("record '") + record.id +
                                    "' is unscorable, assigned sentinel: " + e.what());
            }
        }
    }
    return scores;
}

} // namespace probgate::scoring
