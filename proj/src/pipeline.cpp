#include "norm/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

#include <json.hpp>

namespace norm {

using ordered_json = nlohmann::ordered_json;

MatcherSet::MatcherSet(const ConceptDictionary& d, const PipelineConfig& cfg) : dict(d) {
    switch (cfg.matcher) {
        case MatcherId::BM25: bm25.emplace(d, cfg.bm25); break;
        case MatcherId::NGRAM: ngram.emplace(d, cfg.ngram); break;
        case MatcherId::EXACT: exact.emplace(d); break;
    }
}

std::vector<Candidate> MatcherSet::query(MatcherId id, const std::string& text) const {
    try {
        switch (id) {
            case MatcherId::BM25: return bm25->query(text);
            case MatcherId::NGRAM: return ngram->query(text);
            case MatcherId::EXACT: return exact->query(text);
        }
    } catch (const MatcherError&) {
        // empty-after-normalization queries contribute nothing
    }
    return {};
}

namespace {

// Merge by CUI keeping max score; on score ties the original-span
// provenance wins over alternates.
std::vector<Candidate> merge_candidates(const std::vector<std::vector<Candidate>>& groups,
                                        const std::string& original_text) {
    std::map<ConceptId, Candidate> best;
    for (const auto& group : groups) {
        for (const auto& cand : group) {
            auto it = best.find(cand.cui);
            if (it == best.end()) {
                best.emplace(cand.cui, cand);
                continue;
            }
            Candidate& cur = it->second;
            bool replace = cand.score > cur.score;
            if (cand.score == cur.score && cur.query_text != original_text &&
                cand.query_text == original_text) {
                replace = true;
            }
            if (replace) cur = cand;
        }
    }
    std::vector<Candidate> merged;
    merged.reserve(best.size());
    for (const auto& [cui, cand] : best) merged.push_back(cand);
    sort_candidates(merged);
    return merged;
}

}  // namespace

Prediction normalize_mention(const PipelineConfig& cfg, const MatcherSet& matchers,
                             ChatClient* client, const PromptTemplates& prompts,
                             const Mention& mention) {
    Prediction pred;
    pred.mention = mention;

    std::vector<std::vector<Candidate>> groups;
    groups.push_back(matchers.query(cfg.matcher, mention.text));

    if (cfg.augment && client) {
        try {
            AlternateSet alts = generate_alternates(*client, cfg.augment_cfg, prompts,
                                                    mention.text, mention.context);
            for (const auto& alt : alts.alternates) {
                groups.push_back(matchers.query(cfg.matcher, alt));
            }
            pred.alternates = std::move(alts);
        } catch (const LlmError& e) {
            pred.degraded = true;
            pred.degrade_note = std::string("augment: ") + e.what();
        }
    }

    pred.candidates = merge_candidates(groups, mention.text);
    if (static_cast<int>(pred.candidates.size()) > cfg.max_candidates_for_prune) {
        pred.candidates.resize(cfg.max_candidates_for_prune);
    }

    if (cfg.prune && client && !pred.candidates.empty()) {
        try {
            MentionContext mc{mention.text, mention.context};
            pred.verdict = prune_candidates(*client, cfg.prune_cfg, prompts, mc,
                                            pred.candidates, *cfg.prune, matchers.dict);
            for (const auto& cand : pred.verdict->accepted) pred.final_cuis.push_back(cand.cui);
            return pred;
        } catch (const LlmError& e) {
            pred.degraded = true;
            if (!pred.degrade_note.empty()) pred.degrade_note += "; ";
            pred.degrade_note += std::string("prune: ") + e.what();
        }
    }
    for (const auto& cand : pred.candidates) pred.final_cuis.push_back(cand.cui);
    return pred;
}

std::vector<Prediction> normalize_corpus(const PipelineConfig& cfg, const MatcherSet& matchers,
                                         ChatClient* client, const PromptTemplates& prompts,
                                         const std::vector<Mention>& mentions,
                                         CorpusRunStats* stats, bool progress) {
    std::vector<Prediction> preds(mentions.size());
    std::atomic<size_t> next{0};
    std::atomic<size_t> done{0};

    int workers = std::max(1, cfg.max_concurrent);
    workers = std::min<int>(workers, std::max<size_t>(mentions.size(), 1));
    auto work = [&] {
        while (true) {
            size_t i = next.fetch_add(1);
            if (i >= mentions.size()) break;
            preds[i] = normalize_mention(cfg, matchers, client, prompts, mentions[i]);
            size_t d = done.fetch_add(1) + 1;
            if (progress && (d % 50 == 0 || d == mentions.size())) {
                std::cerr << "normalized " << d << "/" << mentions.size() << " mentions\n";
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    if (stats) {
        stats->mentions = mentions.size();
        for (const auto& p : preds) {
            if (p.degraded) ++stats->degraded;
        }
        if (client) {
            stats->llm_calls = client->stats().llm_calls.load();
            stats->cache_hits = client->stats().cache_hits.load();
        }
    }
    return preds;
}

std::string prediction_to_json(const Prediction& pred) {
    ordered_json j;
    j["doc_id"] = pred.mention.doc_id;
    j["start"] = pred.mention.start;
    j["end"] = pred.mention.end;
    j["text"] = pred.mention.text;
    j["final_cuis"] = ordered_json::array();
    for (const auto& cui : pred.final_cuis) j["final_cuis"].push_back(cui.str());
    j["candidates"] = ordered_json::array();
    for (const auto& cand : pred.candidates) {
        j["candidates"].push_back({{"cui", cand.cui.str()},
                                   {"score", cand.score},
                                   {"query_text", cand.query_text},
                                   {"matcher_id", matcher_id_name(cand.matcher_id)}});
    }
    if (pred.alternates) {
        j["alternates"] = pred.alternates->alternates;
    } else {
        j["alternates"] = nullptr;
    }
    if (pred.verdict) {
        ordered_json accepted = ordered_json::array();
        for (const auto& cand : pred.verdict->accepted) accepted.push_back(cand.cui.str());
        j["prune"] = {{"strategy", prune_mode_name(pred.verdict->strategy.mode)},
                      {"accepted", accepted},
                      {"top1_applied", pred.verdict->top1_applied}};
    } else {
        j["prune"] = nullptr;
    }
    j["degraded"] = pred.degraded;
    return j.dump();
}

void write_predictions(const std::vector<Prediction>& preds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write predictions file: " + path);
    for (const auto& p : preds) out << prediction_to_json(p) << '\n';
}

}  // namespace norm
