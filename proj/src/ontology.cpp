#include "norm/ontology.hpp"

#include <fstream>
#include <sstream>

namespace norm {

namespace {

std::vector<std::string> split_tab(const std::string& line) {
    std::vector<std::string> fields;
    size_t i = 0;
    while (true) {
        size_t j = line.find('\t', i);
        if (j == std::string::npos) {
            fields.push_back(line.substr(i));
            break;
        }
        fields.push_back(line.substr(i, j - i));
        i = j + 1;
    }
    return fields;
}

std::set<std::string> split_comma(const std::string& s) {
    std::set<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.insert(item);
    }
    return out;
}

[[noreturn]] void load_fail(const std::string& path, size_t lineno, const std::string& why) {
    throw DictionaryLoadError(path + ":" + std::to_string(lineno) + ": " + why);
}

}  // namespace

std::optional<ConceptId> ConceptId::parse(const std::string& raw) {
    std::string v = raw;
    if (v.rfind("UMLS:", 0) == 0) v = v.substr(5);
    if (v.size() != 8 || v[0] != 'C') return std::nullopt;
    for (size_t i = 1; i < 8; ++i) {
        if (v[i] < '0' || v[i] > '9') return std::nullopt;
    }
    return ConceptId(std::move(v));
}

std::vector<std::string> Concept::all_terms() const {
    std::vector<std::string> terms;
    terms.reserve(1 + synonyms.size());
    terms.push_back(preferred_term);
    terms.insert(terms.end(), synonyms.begin(), synonyms.end());
    return terms;
}

const Concept* ConceptDictionary::find(const ConceptId& cui) const {
    auto it = concepts.find(cui);
    return it == concepts.end() ? nullptr : &it->second;
}

ConceptDictionary load_dictionary(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DictionaryLoadError("cannot open dictionary file: " + path);

    ConceptDictionary dict;
    dict.source_path = path;
    std::map<ConceptId, bool> has_preferred;

    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;

        auto fields = split_tab(line);
        if (fields.size() != 4) {
            load_fail(path, lineno, "expected 4 tab-separated fields, got " +
                                        std::to_string(fields.size()));
        }
        auto cui = ConceptId::parse(fields[0]);
        if (!cui) load_fail(path, lineno, "invalid CUI: " + fields[0]);
        if (fields[1].empty()) load_fail(path, lineno, "empty term");
        if (fields[2] != "0" && fields[2] != "1") {
            load_fail(path, lineno, "is_preferred must be 0 or 1, got: " + fields[2]);
        }
        bool preferred = fields[2] == "1";
        auto types = split_comma(fields[3]);
        if (types.empty()) load_fail(path, lineno, "empty semantic_types");

        auto& concept_entry = dict.concepts[*cui];
        concept_entry.cui = *cui;
        concept_entry.semantic_types.insert(types.begin(), types.end());
        if (preferred) {
            if (has_preferred[*cui]) {
                load_fail(path, lineno, "duplicate preferred term for " + cui->str());
            }
            has_preferred[*cui] = true;
            concept_entry.preferred_term = fields[1];
        } else {
            concept_entry.synonyms.insert(fields[1]);
        }
    }

    for (auto& [cui, concept_entry] : dict.concepts) {
        if (!has_preferred[cui]) {
            throw DictionaryLoadError(path + ": no preferred term for " + cui.str());
        }
        concept_entry.synonyms.erase(concept_entry.preferred_term);
    }
    return dict;
}

void save_dictionary(const ConceptDictionary& dict, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DictionaryLoadError("cannot write dictionary file: " + path);
    for (const auto& [cui, concept_entry] : dict.concepts) {
        std::string types;
        for (const auto& t : concept_entry.semantic_types) {
            if (!types.empty()) types += ',';
            types += t;
        }
        out << cui.str() << '\t' << concept_entry.preferred_term << "\t1\t" << types << '\n';
        for (const auto& syn : concept_entry.synonyms) {
            out << cui.str() << '\t' << syn << "\t0\t" << types << '\n';
        }
    }
}

ConceptDictionary filter_by_semantic_types(const ConceptDictionary& dict,
                                           const std::set<std::string>& allowed) {
    ConceptDictionary out;
    out.source_path = dict.source_path;
    for (const auto& [cui, concept_entry] : dict.concepts) {
        for (const auto& t : concept_entry.semantic_types) {
            if (allowed.count(t)) {
                out.concepts.emplace(cui, concept_entry);
                break;
            }
        }
    }
    return out;
}

DictionaryStats dictionary_stats(const ConceptDictionary& dict) {
    DictionaryStats stats;
    stats.concept_count = dict.loaded_count();
    for (const auto& [cui, concept_entry] : dict.concepts) {
        stats.term_count += 1 + concept_entry.synonyms.size();
        for (const auto& t : concept_entry.semantic_types) {
            ++stats.semantic_type_histogram[t];
        }
    }
    return stats;
}

}  // namespace norm
