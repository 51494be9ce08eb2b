#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "norm/ontology.hpp"
#include "norm/pipeline.hpp"

namespace norm {

struct GoldAnnotation {
    std::string doc_id;
    size_t start = 0;
    size_t end = 0;
    std::string text;
    std::set<std::string> semantic_types;
    ConceptId cui;
};

struct PubtatorDocument {
    std::string doc_id;
    std::string title;
    std::string abstract_text;
    std::string full_text() const { return title + "\n" + abstract_text; }
};

struct PubtatorCorpus {
    std::vector<PubtatorDocument> documents;
    std::vector<GoldAnnotation> annotations;
    size_t skipped_out_of_bounds = 0;
};

struct CorpusFormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// PubTator format: per document `id|t|title`, `id|a|abstract`, then
/// tab-separated mention lines, blank line between documents.
PubtatorCorpus load_pubtator(const std::string& path);

/// Mentions for the pipeline: gold spans plus a ±window context slice
/// clipped to document bounds.
std::vector<Mention> mentions_from_corpus(const PubtatorCorpus& corpus, int context_window);

struct EvalConfig {
    double beta = 2.0;
    std::optional<std::set<std::string>> semantic_type_filter;
};

struct EvalReport {
    long long tp = 0, fp = 0, fn = 0;
    double precision = 0, recall = 0, f1 = 0, f_beta = 0;
    double beta = 2.0;
    size_t n_mentions = 0;
    size_t missing_predictions = 0;  // gold mentions with no prediction record
    bool zero_division = false;

    std::string to_json() const;
    std::string to_table() const;
};

/// Fβ per the weighted harmonic mean; 0 when both inputs are 0.
double fbeta(double precision, double recall, double beta);

/// Per-mention micro-averaged scoring: join on (doc_id, start, end);
/// tp when the gold CUI is in the predicted set, each extra predicted
/// CUI is one fp, a missed gold CUI one fn.
EvalReport score_predictions(const std::vector<Prediction>& predictions,
                             const std::vector<GoldAnnotation>& gold, const EvalConfig& cfg);

/// Reads a predictions JSONL file written by write_predictions.
std::vector<Prediction> load_predictions(const std::string& path);

}  // namespace norm
