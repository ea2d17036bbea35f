#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "core/lexicon.hpp"
#include "core/model.hpp"

namespace probgate::scoring {

enum class ScorerKind {
    ProbGate,
    MaxEntropy,
};

struct ScorerConfig {
    ScorerKind kind = ScorerKind::ProbGate;
    std::size_t bottom_k = 10; // number of lowest logprobs averaged
};

/// Bottom-k averaged log probability of the record's content tokens.
///
/// Reserved tokens are excluded first; when nothing remains the average
/// falls back to all tokens and used_fallback is set. The lowest
/// min(bottom_k, n) logprobs of what survives are averaged.
ConfidenceScore calc_log_bottom_k(const GenerationRecord& record,
                                  std::size_t bottom_k,
                                  const ReservedLexicon& lex);

/// Negated maximum per-token Shannon entropy, computed from each token's
/// renormalized alternative distribution. Negation keeps "higher = more
/// confident" so one gating path serves both scorers.
ConfidenceScore max_entropy_score(const GenerationRecord& record);

/// Scores every record in order. Records that cannot be scored (no tokens,
/// or missing alternatives under the entropy scorer) degrade to the
/// unscorable sentinel and a warning instead of failing the batch.
std::vector<ConfidenceScore> score_dataset(const std::vector<GenerationRecord>& records,
                                           const ScorerConfig& config,
                                           const ReservedLexicon& lex,
                                           std::vector<std::string>* warnings = nullptr);

} // namespace probgate::scoring
