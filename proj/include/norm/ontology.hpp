#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace norm {

/// UMLS-style concept identifier: "C" followed by 7 decimal digits.
class ConceptId {
public:
    ConceptId() = default;

    /// Parses a CUI, stripping an optional "UMLS:" prefix. Returns
    /// nullopt when the remainder does not match C[0-9]{7}.
    static std::optional<ConceptId> parse(const std::string& raw);

    const std::string& str() const { return value_; }

    bool operator==(const ConceptId& o) const = default;
    auto operator<=>(const ConceptId& o) const = default;

private:
    explicit ConceptId(std::string v) : value_(std::move(v)) {}
    std::string value_;
};

struct Concept {
    ConceptId cui;
    std::string preferred_term;
    std::set<std::string> synonyms;       // never contains preferred_term
    std::set<std::string> semantic_types;

    /// preferred_term followed by synonyms.
    std::vector<std::string> all_terms() const;
};

struct ConceptDictionary {
    std::map<ConceptId, Concept> concepts;
    std::string source_path;

    size_t loaded_count() const { return concepts.size(); }
    const Concept* find(const ConceptId& cui) const;
};

struct DictionaryStats {
    size_t concept_count = 0;
    size_t term_count = 0;  // preferred terms + synonyms
    std::map<std::string, size_t> semantic_type_histogram;
};

struct DictionaryLoadError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Loads the TSV dictionary format:
///   CUI<TAB>term<TAB>is_preferred<TAB>semantic_types
/// Lines starting with '#' are comments. Rows with the same CUI merge;
/// exactly one preferred row per CUI is required.
ConceptDictionary load_dictionary(const std::string& path);

/// Writes a dictionary back out in the same TSV format.
void save_dictionary(const ConceptDictionary& dict, const std::string& path);

/// Keeps exactly the concepts whose semantic types intersect `allowed`.
ConceptDictionary filter_by_semantic_types(const ConceptDictionary& dict,
                                           const std::set<std::string>& allowed);

DictionaryStats dictionary_stats(const ConceptDictionary& dict);

}  // namespace norm
