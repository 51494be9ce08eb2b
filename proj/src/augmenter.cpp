#include "norm/augmenter.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <json.hpp>

#include "norm/text.hpp"

namespace norm {

namespace {

std::string strip_item(std::string s) {
    auto trim = [](std::string& v) {
        size_t a = v.find_first_not_of(" \t\r\n");
        if (a == std::string::npos) { v.clear(); return; }
        size_t b = v.find_last_not_of(" \t\r\n");
        v = v.substr(a, b - a + 1);
    };
    // quote and punctuation stripping can expose each other, so run to
    // a fixpoint
    std::string prev;
    do {
        prev = s;
        trim(s);
        if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                              (s.front() == '\'' && s.back() == '\''))) {
            s = s.substr(1, s.size() - 2);
        }
        while (!s.empty() && (s.back() == '.' || s.back() == ',' || s.back() == ';' ||
                              s.back() == ':' || s.back() == '!' || s.back() == '?')) {
            s.pop_back();
        }
        trim(s);
    } while (s != prev);
    return s;
}

// "1. xxx" / "12) xxx" -> "xxx"; empty when the line is not numbered.
std::string numbered_item(const std::string& line) {
    size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    size_t d = i;
    while (d < line.size() && isdigit(static_cast<unsigned char>(line[d]))) ++d;
    if (d == i || d >= line.size()) return "";
    if (line[d] != '.' && line[d] != ')') return "";
    return line.substr(d + 1);
}

std::string bulleted_item(const std::string& line) {
    size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size() || (line[i] != '-' && line[i] != '*')) return "";
    return line.substr(i + 1);
}

// First parseable JSON array of strings anywhere in the text.
bool extract_json_array(const std::string& text, std::vector<std::string>& out) {
    for (size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '[') continue;
        for (size_t j = text.find(']', i); j != std::string::npos; j = text.find(']', j + 1)) {
            auto j_parsed = nlohmann::json::parse(text.substr(i, j - i + 1), nullptr, false);
            if (j_parsed.is_discarded() || !j_parsed.is_array()) continue;
            bool all_strings = !j_parsed.empty();
            std::vector<std::string> items;
            for (const auto& v : j_parsed) {
                if (!v.is_string()) { all_strings = false; break; }
                items.push_back(v.get<std::string>());
            }
            if (all_strings) {
                out = std::move(items);
                return true;
            }
        }
    }
    return false;
}

}  // namespace

AlternateSet parse_alternates(const std::string& llm_text, int k, const std::string& original) {
    AlternateSet result;
    result.original = original;
    result.raw_response = llm_text;

    std::vector<std::string> items;
    if (!extract_json_array(llm_text, items)) {
        std::vector<std::string> lines;
        std::stringstream ss(llm_text);
        std::string line;
        while (std::getline(ss, line)) lines.push_back(line);

        std::vector<std::string> numbered, bulleted, plain;
        for (const auto& l : lines) {
            if (auto v = numbered_item(l); !v.empty()) numbered.push_back(v);
            if (auto v = bulleted_item(l); !v.empty()) bulleted.push_back(v);
            if (!strip_item(l).empty()) plain.push_back(l);
        }
        if (!numbered.empty()) items = numbered;
        else if (!bulleted.empty()) items = bulleted;
        else items = plain;
    }

    std::string norm_original = normalize_text(original);
    std::set<std::string> seen;
    for (const auto& raw : items) {
        if (static_cast<int>(result.alternates.size()) >= k) break;
        std::string item = strip_item(raw);
        if (item.empty()) continue;
        std::string key = normalize_text(item);
        if (key.empty() || key == norm_original) continue;
        if (!seen.insert(key).second) continue;
        result.alternates.push_back(item);
    }
    return result;
}

AlternateSet generate_alternates(ChatClient& client, const AugmentConfig& cfg,
                                 const PromptTemplates& prompts,
                                 const std::string& mention_text, const std::string& context) {
    ChatRequest req;
    req.system_prompt = prompts.section("alternates.system");
    req.user_prompt = PromptTemplates::render(prompts.section("alternates.user"),
                                              {{"mention", mention_text},
                                               {"context", context},
                                               {"k", std::to_string(cfg.k)}});
    req.temperature = cfg.temperature;
    req.max_tokens = cfg.max_tokens;
    req.model = cfg.model;
    req.kind = "alternates";

    ChatResponse resp = client.complete(req);
    return parse_alternates(resp.text, cfg.k, mention_text);
}

}  // namespace norm
