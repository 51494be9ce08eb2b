// Independent reference implementations used only by tests. These are
// deliberately written against the formulas directly, not against the
// indexed code paths they check.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "norm/matchers.hpp"
#include "norm/ontology.hpp"
#include "norm/text.hpp"

namespace oracle {

// Direct-formula Okapi BM25 over the concepts' normalized preferred
// terms (synonyms appended when include_synonyms).
inline std::vector<std::pair<norm::ConceptId, double>> bm25_scores(
    const norm::ConceptDictionary& dict, const std::string& query,
    const norm::Bm25Params& params) {
    struct Doc {
        norm::ConceptId cui;
        std::vector<std::string> tokens;
    };
    std::vector<Doc> docs;
    double total_len = 0;
    for (const auto& [cui, c] : dict.concepts) {
        std::string text = norm::normalize_text(c.preferred_term);
        if (params.include_synonyms) {
            for (const auto& s : c.synonyms) text += " " + norm::normalize_text(s);
        }
        docs.push_back({cui, norm::tokenize(text)});
        total_len += docs.back().tokens.size();
    }
    double avgdl = total_len / docs.size();
    double N = static_cast<double>(docs.size());

    auto qtokens = norm::tokenize(norm::normalize_text(query));
    std::vector<std::pair<norm::ConceptId, double>> out;
    for (const auto& doc : docs) {
        double score = 0;
        for (const auto& q : qtokens) {
            double tf = std::count(doc.tokens.begin(), doc.tokens.end(), q);
            if (tf == 0) continue;
            double nq = 0;
            for (const auto& d : docs) {
                if (std::count(d.tokens.begin(), d.tokens.end(), q) > 0) nq += 1;
            }
            double idf = std::log(1.0 + (N - nq + 0.5) / (nq + 0.5));
            double dl = static_cast<double>(doc.tokens.size());
            score += idf * tf * (params.k1 + 1.0) /
                     (tf + params.k1 * (1.0 - params.b + params.b * dl / avgdl));
        }
        if (score > 0) out.push_back({doc.cui, score});
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return out;
}

inline double jaccard(const std::string& a, const std::string& b, int n) {
    auto grams = [n](const std::string& s) {
        std::set<std::string> g;
        for (const auto& v : norm::char_ngrams(s, n)) g.insert(v);
        return g;
    };
    auto ga = grams(a);
    auto gb = grams(b);
    if (ga.empty() && gb.empty()) return 0.0;
    size_t inter = 0;
    for (const auto& g : ga) inter += gb.count(g);
    return static_cast<double>(inter) / static_cast<double>(ga.size() + gb.size() - inter);
}

// All-pairs scan: best Jaccard per concept over every dictionary term.
inline std::map<norm::ConceptId, double> ngram_scan(const norm::ConceptDictionary& dict,
                                                    const std::string& query,
                                                    const norm::NgramParams& params) {
    std::string q = norm::normalize_text(query);
    std::map<norm::ConceptId, double> best;
    for (const auto& [cui, c] : dict.concepts) {
        for (const auto& term : c.all_terms()) {
            double sim = jaccard(q, norm::normalize_text(term), params.n);
            if (sim >= params.threshold) {
                auto it = best.find(cui);
                if (it == best.end() || sim > it->second) best[cui] = sim;
            }
        }
    }
    return best;
}

// Random small dictionary: <= max_concepts concepts, vocabulary of
// <= 10 short tokens, terms of 1-4 tokens.
inline norm::ConceptDictionary random_dictionary(std::mt19937& rng, int max_concepts = 20) {
    static const std::vector<std::string> vocab = {
        "heart", "renal", "acute", "chronic", "failure",
        "disease", "lung", "pain", "syndrome", "injury"};
    std::uniform_int_distribution<int> n_concepts(1, max_concepts);
    std::uniform_int_distribution<int> n_tokens(1, 4);
    std::uniform_int_distribution<int> n_syns(0, 2);
    std::uniform_int_distribution<size_t> pick(0, vocab.size() - 1);

    auto make_term = [&] {
        int len = n_tokens(rng);
        std::string term;
        for (int i = 0; i < len; ++i) {
            if (i) term += ' ';
            term += vocab[pick(rng)];
        }
        return term;
    };

    norm::ConceptDictionary dict;
    int count = n_concepts(rng);
    for (int i = 0; i < count; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "C%07d", i + 1);
        auto cui = *norm::ConceptId::parse(buf);
        norm::Concept c;
        c.cui = cui;
        c.preferred_term = make_term();
        int syns = n_syns(rng);
        for (int s = 0; s < syns; ++s) {
            std::string syn = make_term();
            if (syn != c.preferred_term) c.synonyms.insert(syn);
        }
        c.semantic_types.insert("T047");
        dict.concepts.emplace(cui, std::move(c));
    }
    return dict;
}

inline std::string random_query(std::mt19937& rng) {
    static const std::vector<std::string> vocab = {
        "heart", "renal", "acute", "chronic", "failure",
        "disease", "lung", "pain", "syndrome", "injury", "zzz"};
    std::uniform_int_distribution<int> n_tokens(1, 3);
    std::uniform_int_distribution<size_t> pick(0, vocab.size() - 1);
    std::string q;
    int len = n_tokens(rng);
    for (int i = 0; i < len; ++i) {
        if (i) q += ' ';
        q += vocab[pick(rng)];
    }
    return q;
}

}  // namespace oracle
