#pragma once

#include <string>
#include <vector>

#include "norm/llm_client.hpp"
#include "norm/prompts.hpp"

namespace norm {

struct AlternateSet {
    std::string original;
    std::vector<std::string> alternates;  // normalized-deduped, != original, <= k
    std::string raw_response;
};

struct AugmentConfig {
    int k = 5;
    std::string model;
    double temperature = 0.0;
    int max_tokens = 256;
};

/// Extracts alternate phrasings from raw LLM text. Tries, in order: a
/// JSON string array, numbered-list lines, bulleted lines, then plain
/// non-empty lines. Unusable text yields an empty list.
AlternateSet parse_alternates(const std::string& llm_text, int k, const std::string& original);

AlternateSet generate_alternates(ChatClient& client, const AugmentConfig& cfg,
                                 const PromptTemplates& prompts,
                                 const std::string& mention_text, const std::string& context);

}  // namespace norm
