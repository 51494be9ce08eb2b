#include "norm/matchers.hpp"

#include <algorithm>
#include <cmath>

#include "norm/text.hpp"

namespace norm {

const char* matcher_id_name(MatcherId id) {
    switch (id) {
        case MatcherId::BM25: return "BM25";
        case MatcherId::NGRAM: return "NGRAM";
        case MatcherId::EXACT: return "EXACT";
    }
    return "?";
}

void sort_candidates(std::vector<Candidate>& cands) {
    std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.cui < b.cui;
    });
}

namespace {

std::vector<std::string> gram_set(const std::string& s, int n) {
    auto grams = char_ngrams(s, n);
    std::sort(grams.begin(), grams.end());
    grams.erase(std::unique(grams.begin(), grams.end()), grams.end());
    return grams;
}

size_t sorted_intersection_size(const std::vector<std::string>& a,
                                const std::vector<std::string>& b) {
    size_t count = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib) ++ia;
        else if (*ib < *ia) ++ib;
        else { ++count; ++ia; ++ib; }
    }
    return count;
}

}  // namespace

double ngram_similarity(const std::string& a, const std::string& b, int n) {
    auto ga = gram_set(a, n);
    auto gb = gram_set(b, n);
    if (ga.empty() && gb.empty()) return 0.0;
    size_t inter = sorted_intersection_size(ga, gb);
    size_t uni = ga.size() + gb.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

Bm25Index::Bm25Index(const ConceptDictionary& dict, Bm25Params params)
    : params_(params) {
    if (dict.concepts.empty()) throw MatcherError("BM25 index requires a non-empty dictionary");
    size_t total_len = 0;
    for (const auto& [cui, concept_entry] : dict.concepts) {
        std::string text = normalize_text(concept_entry.preferred_term);
        if (params_.include_synonyms) {
            for (const auto& syn : concept_entry.synonyms) {
                text += ' ';
                text += normalize_text(syn);
            }
        }
        auto tokens = tokenize(text);
        uint32_t doc_id = static_cast<uint32_t>(docs_.size());
        docs_.push_back({cui, concept_entry.preferred_term, tokens.size()});
        total_len += tokens.size();

        std::unordered_map<std::string, uint32_t> tf;
        for (const auto& tok : tokens) ++tf[tok];
        for (const auto& [tok, freq] : tf) postings_[tok].push_back({doc_id, freq});
    }
    avgdl_ = docs_.empty() ? 0.0 : static_cast<double>(total_len) / docs_.size();
}

std::vector<Candidate> Bm25Index::query(const std::string& text, int top_k) const {
    std::string q = normalize_text(text);
    if (q.empty()) throw MatcherError("empty query after normalization");
    auto qtokens = tokenize(q);

    const double N = static_cast<double>(docs_.size());
    std::unordered_map<uint32_t, double> scores;
    for (const auto& tok : qtokens) {
        auto it = postings_.find(tok);
        if (it == postings_.end()) continue;
        const auto& plist = it->second;
        // +1-inside-log IDF keeps every matching term's contribution positive.
        double idf = std::log(1.0 + (N - plist.size() + 0.5) / (plist.size() + 0.5));
        for (const auto& [doc_id, tf] : plist) {
            double dl = static_cast<double>(docs_[doc_id].length);
            double denom = tf + params_.k1 * (1.0 - params_.b + params_.b * dl / avgdl_);
            scores[doc_id] += idf * tf * (params_.k1 + 1.0) / denom;
        }
    }

    std::vector<Candidate> out;
    out.reserve(scores.size());
    for (const auto& [doc_id, score] : scores) {
        if (score <= 0.0) continue;
        out.push_back({docs_[doc_id].cui, score, docs_[doc_id].term, text, MatcherId::BM25});
    }
    sort_candidates(out);
    if (static_cast<int>(out.size()) > top_k) out.resize(top_k);
    return out;
}

NgramIndex::NgramIndex(const ConceptDictionary& dict, NgramParams params)
    : params_(params) {
    for (const auto& [cui, concept_entry] : dict.concepts) {
        for (const auto& term : concept_entry.all_terms()) {
            uint32_t term_id = static_cast<uint32_t>(terms_.size());
            terms_.push_back({cui, term, gram_set(normalize_text(term), params_.n)});
            for (const auto& g : terms_.back().gram_set) {
                gram_postings_[g].push_back(term_id);
            }
        }
    }
}

std::vector<Candidate> NgramIndex::query(const std::string& text, const NgramParams& params) const {
    std::string q = normalize_text(text);
    if (q.empty()) throw MatcherError("empty query after normalization");
    auto qgrams = gram_set(q, params_.n);
    const double t = params.threshold;
    const size_t qsize = qgrams.size();

    // Count-filter: Jaccard >= t needs |A∩B| >= t/(1+t)·(|A|+|B|) and
    // t·|A| <= |B| <= |A|/t. Candidates below the overlap bound are
    // skipped without computing the exact coefficient.
    std::unordered_map<uint32_t, uint32_t> overlap;
    for (const auto& g : qgrams) {
        auto it = gram_postings_.find(g);
        if (it == gram_postings_.end()) continue;
        for (uint32_t term_id : it->second) ++overlap[term_id];
    }

    // Best score per concept, and the term achieving it.
    std::map<ConceptId, std::pair<double, const Term*>> best;
    for (const auto& [term_id, count] : overlap) {
        const Term& term = terms_[term_id];
        const size_t tsize = term.gram_set.size();
        if (static_cast<double>(tsize) + 1e-9 < t * qsize ||
            static_cast<double>(tsize) * t > qsize + 1e-9)
            continue;
        double min_overlap = t / (1.0 + t) * static_cast<double>(qsize + tsize);
        if (static_cast<double>(count) < min_overlap - 1e-9) continue;
        size_t uni = qsize + tsize - count;
        double sim = static_cast<double>(count) / static_cast<double>(uni);
        if (sim < t) continue;  // exact check; the bounds above only prefilter
        auto it = best.find(term.cui);
        if (it == best.end() || sim > it->second.first) {
            best[term.cui] = {sim, &term};
        }
    }

    std::vector<Candidate> out;
    out.reserve(best.size());
    for (const auto& [cui, scored] : best) {
        out.push_back({cui, scored.first, scored.second->raw, text, MatcherId::NGRAM});
    }
    sort_candidates(out);
    if (static_cast<int>(out.size()) > params.top_k) out.resize(params.top_k);
    return out;
}

ExactIndex::ExactIndex(const ConceptDictionary& dict) {
    for (const auto& [cui, concept_entry] : dict.concepts) {
        for (const auto& term : concept_entry.all_terms()) {
            auto& owners = map_[normalize_text(term)];
            bool seen = false;
            for (const auto& [owner, raw] : owners) {
                if (owner == cui) { seen = true; break; }
            }
            if (!seen) owners.push_back({cui, term});
        }
    }
    for (auto& [key, owners] : map_) {
        std::sort(owners.begin(), owners.end());
    }
}

std::vector<Candidate> ExactIndex::query(const std::string& text) const {
    std::vector<Candidate> out;
    auto it = map_.find(normalize_text(text));
    if (it == map_.end()) return out;
    for (const auto& [cui, raw] : it->second) {
        out.push_back({cui, 1.0, raw, text, MatcherId::EXACT});
    }
    return out;
}

}  // namespace norm
