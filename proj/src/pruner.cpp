#include "norm/pruner.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <variant>

namespace norm {

const char* prune_mode_name(PruneMode mode) {
    switch (mode) {
        case PruneMode::MULTIPLE_CHOICE_CUI: return "mc_cui";
        case PruneMode::MULTIPLE_CHOICE_INDEX: return "mc_index";
        case PruneMode::BINARY: return "binary";
    }
    return "?";
}

std::optional<PruneMode> prune_mode_from_name(const std::string& name) {
    if (name == "mc_cui") return PruneMode::MULTIPLE_CHOICE_CUI;
    if (name == "mc_index") return PruneMode::MULTIPLE_CHOICE_INDEX;
    if (name == "binary") return PruneMode::BINARY;
    return std::nullopt;
}

namespace {

std::string render_candidate(const Candidate& cand, const ConceptDictionary& dict) {
    const Concept* c = dict.find(cand.cui);
    std::string term = c ? c->preferred_term : cand.matched_term;
    std::string types;
    if (c) {
        for (const auto& t : c->semantic_types) {
            if (!types.empty()) types += ',';
            types += t;
        }
    }
    return cand.cui.str() + " — " + term + " [" + types + "]";
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

// Region the final answer must be parsed from: after the last
// "ANSWER:" under CoT, the whole text otherwise. Missing sentinel
// under CoT is a parse failure (reasoning text is full of stray
// numbers).
std::optional<std::string> answer_region(const std::string& text, bool cot) {
    if (!cot) return text;
    std::string low = lower(text);
    size_t pos = low.rfind("answer:");
    if (pos == std::string::npos) return std::nullopt;
    return text.substr(pos + 7);
}

std::vector<int> extract_integers(const std::string& s) {
    std::vector<int> out;
    size_t i = 0;
    while (i < s.size()) {
        if (isdigit(static_cast<unsigned char>(s[i]))) {
            // skip digits embedded in CUI-like tokens
            bool preceded_by_alpha = i > 0 && isalpha(static_cast<unsigned char>(s[i - 1]));
            size_t j = i;
            while (j < s.size() && isdigit(static_cast<unsigned char>(s[j]))) ++j;
            if (!preceded_by_alpha && j - i <= 6) {
                out.push_back(std::stoi(s.substr(i, j - i)));
            }
            i = j;
        } else {
            ++i;
        }
    }
    return out;
}

std::vector<ConceptId> extract_cuis(const std::string& s) {
    std::vector<ConceptId> out;
    for (size_t i = 0; i + 8 <= s.size(); ++i) {
        if (s[i] != 'C') continue;
        if (i > 0 && isalnum(static_cast<unsigned char>(s[i - 1]))) continue;
        if (i + 8 < s.size() && isdigit(static_cast<unsigned char>(s[i + 8]))) continue;
        if (auto cui = ConceptId::parse(s.substr(i, 8))) out.push_back(*cui);
    }
    return out;
}

}  // namespace

std::vector<ChatRequest> build_prune_prompt(const MentionContext& mention,
                                            const std::vector<Candidate>& candidates,
                                            const PruneStrategy& strategy,
                                            const ConceptDictionary& dict,
                                            const PromptTemplates& prompts,
                                            const PruneConfig& cfg) {
    if (candidates.empty()) throw std::invalid_argument("prune prompt needs candidates");

    auto base_request = [&] {
        ChatRequest req;
        req.system_prompt = prompts.section("prune.system");
        req.temperature = cfg.temperature;
        req.max_tokens = cfg.max_tokens;
        req.model = cfg.model;
        req.kind = "prune";
        return req;
    };

    std::vector<ChatRequest> out;
    if (strategy.mode == PruneMode::BINARY) {
        for (const auto& cand : candidates) {
            ChatRequest req = base_request();
            std::string user = PromptTemplates::render(
                prompts.section("prune.binary.user"),
                {{"mention", mention.text},
                 {"context", mention.context},
                 {"candidate", render_candidate(cand, dict)}});
            if (strategy.chain_of_thought) {
                user += "\n\n";
                user += prompts.section("prune.cot_instruction");
            }
            req.user_prompt = user;
            out.push_back(std::move(req));
        }
        return out;
    }

    std::string listing;
    for (size_t i = 0; i < candidates.size(); ++i) {
        listing += std::to_string(i + 1) + ") " + render_candidate(candidates[i], dict) + "\n";
    }
    std::string instruction =
        strategy.mode == PruneMode::MULTIPLE_CHOICE_INDEX
            ? "Output the indices of the appropriate candidates as a comma-separated "
              "list (e.g. \"1, 3\")."
            : "Output the CUIs of the appropriate candidates as a comma-separated "
              "list (e.g. \"C0010674, C0011849\").";
    if (strategy.chain_of_thought) {
        instruction += "\n\n";
        instruction += prompts.section("prune.cot_instruction");
    }
    ChatRequest req = base_request();
    req.user_prompt = PromptTemplates::render(prompts.section("prune.multiple_choice.user"),
                                              {{"mention", mention.text},
                                               {"context", mention.context},
                                               {"candidates", listing},
                                               {"output_instruction", instruction}});
    out.push_back(std::move(req));
    return out;
}

std::variant<std::vector<Candidate>, ParseFailure> parse_prune_response(
    const std::string& text, const PruneStrategy& strategy,
    const std::vector<Candidate>& candidates) {
    auto region = answer_region(text, strategy.chain_of_thought);
    if (!region) return ParseFailure{};

    switch (strategy.mode) {
        case PruneMode::MULTIPLE_CHOICE_INDEX: {
            std::set<int> chosen;
            for (int v : extract_integers(*region)) {
                if (v >= 1 && v <= static_cast<int>(candidates.size())) chosen.insert(v);
            }
            if (chosen.empty()) return ParseFailure{};
            std::vector<Candidate> accepted;
            for (size_t i = 0; i < candidates.size(); ++i) {
                if (chosen.count(static_cast<int>(i + 1))) accepted.push_back(candidates[i]);
            }
            return accepted;
        }
        case PruneMode::MULTIPLE_CHOICE_CUI: {
            std::set<ConceptId> chosen;
            std::set<ConceptId> presented;
            for (const auto& c : candidates) presented.insert(c.cui);
            for (const auto& cui : extract_cuis(*region)) {
                if (presented.count(cui)) chosen.insert(cui);
            }
            if (chosen.empty()) return ParseFailure{};
            std::vector<Candidate> accepted;
            for (const auto& c : candidates) {
                if (chosen.count(c.cui)) accepted.push_back(c);
            }
            return accepted;
        }
        case PruneMode::BINARY: {
            // first yes/no token decides
            std::string low = lower(*region);
            for (size_t i = 0; i < low.size(); ++i) {
                auto bounded = [&](size_t start, size_t len) {
                    bool left_ok = start == 0 || !isalpha(static_cast<unsigned char>(low[start - 1]));
                    size_t end = start + len;
                    bool right_ok = end >= low.size() || !isalpha(static_cast<unsigned char>(low[end]));
                    return left_ok && right_ok;
                };
                if (low.compare(i, 3, "yes") == 0 && bounded(i, 3)) {
                    return std::vector<Candidate>{candidates[0]};
                }
                if (low.compare(i, 2, "no") == 0 && bounded(i, 2)) {
                    return std::vector<Candidate>{};
                }
            }
            return ParseFailure{};
        }
    }
    return ParseFailure{};
}

PruneVerdict prune_candidates(ChatClient& client, const PruneConfig& cfg,
                              const PromptTemplates& prompts, const MentionContext& mention,
                              const std::vector<Candidate>& candidates,
                              const PruneStrategy& strategy, const ConceptDictionary& dict) {
    if (candidates.empty()) throw std::invalid_argument("prune_candidates needs candidates");
    auto prompts_out = build_prune_prompt(mention, candidates, strategy, dict, prompts, cfg);

    PruneVerdict verdict;
    verdict.strategy = strategy;
    std::vector<bool> keep(candidates.size(), false);

    if (strategy.mode == PruneMode::BINARY) {
        for (size_t i = 0; i < candidates.size(); ++i) {
            ChatResponse resp = client.complete(prompts_out[i]);
            verdict.raw_responses.push_back(resp.text);
            PruneStrategy single = strategy;
            auto parsed = parse_prune_response(resp.text, single, {candidates[i]});
            if (std::holds_alternative<ParseFailure>(parsed)) {
                keep[i] = true;  // unparseable verdict keeps the candidate
                verdict.parse_fallback = true;
            } else {
                keep[i] = !std::get<std::vector<Candidate>>(parsed).empty();
            }
        }
    } else {
        ChatResponse resp = client.complete(prompts_out[0]);
        verdict.raw_responses.push_back(resp.text);
        auto parsed = parse_prune_response(resp.text, strategy, candidates);
        if (std::holds_alternative<ParseFailure>(parsed)) {
            std::fill(keep.begin(), keep.end(), true);  // recall-preserving fallback
            verdict.parse_fallback = true;
        } else {
            std::set<std::string> accepted_cuis;
            for (const auto& c : std::get<std::vector<Candidate>>(parsed)) {
                accepted_cuis.insert(c.cui.str());
            }
            for (size_t i = 0; i < candidates.size(); ++i) {
                keep[i] = accepted_cuis.count(candidates[i].cui.str()) > 0;
            }
        }
    }

    for (size_t i = 0; i < candidates.size(); ++i) {
        (keep[i] ? verdict.accepted : verdict.rejected).push_back(candidates[i]);
    }
    if (strategy.top1 && verdict.accepted.empty() && !candidates.empty()) {
        verdict.accepted.push_back(candidates[0]);
        verdict.rejected.erase(verdict.rejected.begin());
        verdict.top1_applied = true;
    }
    return verdict;
}

}  // namespace norm
