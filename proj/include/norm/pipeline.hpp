#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "norm/augmenter.hpp"
#include "norm/llm_client.hpp"
#include "norm/matchers.hpp"
#include "norm/ontology.hpp"
#include "norm/pruner.hpp"

namespace norm {

struct Mention {
    std::string doc_id;
    size_t start = 0;
    size_t end = 0;  // > start
    std::string text;
    std::string context;  // ± window around the span
};

struct PipelineConfig {
    MatcherId matcher = MatcherId::BM25;
    Bm25Params bm25;
    NgramParams ngram;
    bool augment = false;
    AugmentConfig augment_cfg;
    std::optional<PruneStrategy> prune;
    PruneConfig prune_cfg;
    int context_window = 200;
    int max_candidates_for_prune = 10;
    int max_concurrent = 4;
};

struct Prediction {
    Mention mention;
    std::vector<ConceptId> final_cuis;
    std::vector<Candidate> candidates;  // merged, ranked, pre-prune
    std::optional<AlternateSet> alternates;
    std::optional<PruneVerdict> verdict;
    bool degraded = false;      // an LLM stage failed and was skipped
    std::string degrade_note;
};

/// Pre-built matcher indices over the active dictionary.
struct MatcherSet {
    MatcherSet(const ConceptDictionary& dict, const PipelineConfig& cfg);

    std::vector<Candidate> query(MatcherId id, const std::string& text) const;

    const ConceptDictionary& dict;
    std::optional<Bm25Index> bm25;
    std::optional<NgramIndex> ngram;
    std::optional<ExactIndex> exact;
};

struct CorpusRunStats {
    size_t mentions = 0;
    size_t degraded = 0;
    uint64_t llm_calls = 0;
    uint64_t cache_hits = 0;
};

Prediction normalize_mention(const PipelineConfig& cfg, const MatcherSet& matchers,
                             ChatClient* client, const PromptTemplates& prompts,
                             const Mention& mention);

/// Batch driver; output order always equals input order regardless of
/// worker count. Progress lines go to stderr when `progress` is set.
std::vector<Prediction> normalize_corpus(const PipelineConfig& cfg, const MatcherSet& matchers,
                                         ChatClient* client, const PromptTemplates& prompts,
                                         const std::vector<Mention>& mentions,
                                         CorpusRunStats* stats = nullptr,
                                         bool progress = false);

/// JSON Lines serialization consumed by the evaluator.
std::string prediction_to_json(const Prediction& pred);
void write_predictions(const std::vector<Prediction>& preds, const std::string& path);

}  // namespace norm
