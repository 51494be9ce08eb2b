#include "norm/prompts.hpp"

#include <fstream>
#include <stdexcept>

namespace norm {

namespace {

const char* kAlternatesSystem =
    "You are a biomedical terminology assistant.";

const char* kAlternatesUser =
    "Given a text span from a biomedical document, list up to {k} synonyms or "
    "alternate phrasings of the span. Output a numbered list only, one phrase "
    "per line, with no explanations.\n\n"
    "Span: \"{mention}\"\n"
    "Context: ...{context}...";

const char* kPruneSystem =
    "You are a biomedical concept normalization assistant.";

const char* kPruneMcUser =
    "A text span from a biomedical document has been matched to the candidate "
    "UMLS concepts below. Decide which candidates are appropriate concepts for "
    "the span in its context.\n\n"
    "Span: \"{mention}\"\n"
    "Context: ...{context}...\n\n"
    "Candidates:\n{candidates}\n"
    "{output_instruction}";

const char* kPruneBinaryUser =
    "A text span from a biomedical document has been matched to the candidate "
    "UMLS concept below. Decide whether the candidate is an appropriate "
    "concept for the span in its context.\n\n"
    "Span: \"{mention}\"\n"
    "Context: ...{context}...\n\n"
    "Candidate: {candidate}\n\n"
    "Answer \"yes\" or \"no\" only.";

const char* kCotInstruction =
    "First think step-by-step and provide your reasoning. Then give your "
    "final answer on a last line of the form \"ANSWER: ...\".";

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

PromptTemplates::PromptTemplates() {
    sections_ = {
        {"alternates.system", kAlternatesSystem},
        {"alternates.user", kAlternatesUser},
        {"prune.system", kPruneSystem},
        {"prune.multiple_choice.user", kPruneMcUser},
        {"prune.binary.user", kPruneBinaryUser},
        {"prune.cot_instruction", kCotInstruction},
    };
}

PromptTemplates PromptTemplates::load(const std::string& path) {
    PromptTemplates t;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open prompt templates file: " + path);
    std::string line, current, body;
    auto flush = [&] {
        if (!current.empty()) t.sections_[current] = trim(body);
        body.clear();
    };
    while (std::getline(in, line)) {
        if (!line.empty() && line.front() == '[' && line.back() == ']') {
            flush();
            current = line.substr(1, line.size() - 2);
        } else if (!current.empty()) {
            body += line;
            body += '\n';
        }
    }
    flush();
    return t;
}

const std::string& PromptTemplates::section(const std::string& name) const {
    auto it = sections_.find(name);
    if (it == sections_.end()) throw std::runtime_error("unknown prompt section: " + name);
    return it->second;
}

std::string PromptTemplates::render(const std::string& tmpl,
                                    const std::map<std::string, std::string>& vars) {
    std::string out;
    out.reserve(tmpl.size());
    size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            size_t j = tmpl.find('}', i);
            if (j != std::string::npos) {
                auto it = vars.find(tmpl.substr(i + 1, j - i - 1));
                if (it != vars.end()) {
                    out += it->second;
                    i = j + 1;
                    continue;
                }
            }
        }
        out.push_back(tmpl[i++]);
    }
    return out;
}

}  // namespace norm
