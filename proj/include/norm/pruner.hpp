#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "norm/llm_client.hpp"
#include "norm/matchers.hpp"
#include "norm/ontology.hpp"
#include "norm/prompts.hpp"

namespace norm {

enum class PruneMode { MULTIPLE_CHOICE_CUI, MULTIPLE_CHOICE_INDEX, BINARY };

const char* prune_mode_name(PruneMode mode);
std::optional<PruneMode> prune_mode_from_name(const std::string& name);

struct PruneStrategy {
    PruneMode mode = PruneMode::MULTIPLE_CHOICE_INDEX;
    bool chain_of_thought = false;
    bool top1 = false;
};

struct PruneVerdict {
    PruneStrategy strategy;
    std::vector<Candidate> accepted;  // input-order subset
    std::vector<Candidate> rejected;
    std::vector<std::string> raw_responses;
    bool top1_applied = false;
    bool parse_fallback = false;  // at least one response was unparseable
};

struct PruneConfig {
    std::string model;
    double temperature = 0.0;
    int max_tokens = 512;
};

struct MentionContext {
    std::string text;
    std::string context;
};

/// One prompt for the multiple-choice modes, one per candidate for
/// binary. Candidates must be rendered in their ranked order; the
/// dictionary supplies preferred terms and semantic types.
std::vector<ChatRequest> build_prune_prompt(const MentionContext& mention,
                                            const std::vector<Candidate>& candidates,
                                            const PruneStrategy& strategy,
                                            const ConceptDictionary& dict,
                                            const PromptTemplates& prompts,
                                            const PruneConfig& cfg);

struct ParseFailure {};

/// Multiple-choice: indices or CUIs extracted from the answer region
/// (after "ANSWER:" under CoT). Binary: yes/no for candidates[0].
/// Returns ParseFailure when no valid answer token is found.
std::variant<std::vector<Candidate>, ParseFailure> parse_prune_response(
    const std::string& text, const PruneStrategy& strategy,
    const std::vector<Candidate>& candidates);

/// Runs the full pruning step. ParseFailure keeps the affected
/// candidates; Top1 promotes the first-ranked candidate when everything
/// was rejected.
PruneVerdict prune_candidates(ChatClient& client, const PruneConfig& cfg,
                              const PromptTemplates& prompts, const MentionContext& mention,
                              const std::vector<Candidate>& candidates,
                              const PruneStrategy& strategy, const ConceptDictionary& dict);

}  // namespace norm
