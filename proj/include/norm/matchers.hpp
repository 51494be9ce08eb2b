#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "norm/ontology.hpp"

namespace norm {

enum class MatcherId { BM25, NGRAM, EXACT };

const char* matcher_id_name(MatcherId id);

struct Candidate {
    ConceptId cui;
    double score = 0.0;       // matcher-specific scale, >= 0
    std::string matched_term; // dictionary term that matched
    std::string query_text;   // span or alternate that produced it
    MatcherId matcher_id = MatcherId::EXACT;
};

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
    int top_k = 5;
    bool include_synonyms = false;
};

struct NgramParams {
    int n = 3;
    double threshold = 0.7;
    int top_k = 5;
};

struct MatcherError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Jaccard coefficient over character n-gram sets. 0.0 when both
/// inputs are empty. Inputs are expected pre-normalized.
double ngram_similarity(const std::string& a, const std::string& b, int n);

/// Okapi BM25 over one document per concept (normalized preferred
/// term; synonyms appended when include_synonyms).
class Bm25Index {
public:
    Bm25Index(const ConceptDictionary& dict, Bm25Params params);

    std::vector<Candidate> query(const std::string& text, int top_k) const;
    std::vector<Candidate> query(const std::string& text) const { return query(text, params_.top_k); }

    const Bm25Params& params() const { return params_; }

private:
    struct Doc {
        ConceptId cui;
        std::string term;  // indexed text, pre-normalization source
        size_t length = 0;
    };

    Bm25Params params_;
    std::vector<Doc> docs_;
    double avgdl_ = 0.0;
    // token -> (doc index, term frequency)
    std::unordered_map<std::string, std::vector<std::pair<uint32_t, uint32_t>>> postings_;
};

/// Approximate match over all dictionary terms with n-gram-count
/// pruning; result sets are exactly those of an all-pairs Jaccard scan.
class NgramIndex {
public:
    NgramIndex(const ConceptDictionary& dict, NgramParams params);

    std::vector<Candidate> query(const std::string& text) const { return query(text, params_); }
    std::vector<Candidate> query(const std::string& text, const NgramParams& params) const;

    const NgramParams& params() const { return params_; }

private:
    struct Term {
        ConceptId cui;
        std::string raw;                    // verbatim dictionary term
        std::vector<std::string> gram_set;  // sorted unique n-grams of normalized form
    };

    NgramParams params_;
    std::vector<Term> terms_;
    std::unordered_map<std::string, std::vector<uint32_t>> gram_postings_;
};

/// Hash lookup from normalized term to owning concepts.
class ExactIndex {
public:
    explicit ExactIndex(const ConceptDictionary& dict);

    std::vector<Candidate> query(const std::string& text) const;

private:
    // normalized term -> (cui, verbatim term), cui-sorted
    std::unordered_map<std::string, std::vector<std::pair<ConceptId, std::string>>> map_;
};

/// Ranking shared by all matchers: score desc, then CUI asc.
void sort_candidates(std::vector<Candidate>& cands);

}  // namespace norm
