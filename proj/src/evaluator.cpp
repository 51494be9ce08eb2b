#include "norm/evaluator.hpp"

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <tuple>

#include <json.hpp>

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

[[noreturn]] void format_fail(const std::string& path, size_t lineno, const std::string& why) {
    throw CorpusFormatError(path + ":" + std::to_string(lineno) + ": " + why);
}

}  // namespace

PubtatorCorpus load_pubtator(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CorpusFormatError("cannot open corpus file: " + path);

    PubtatorCorpus corpus;
    std::map<std::string, size_t> doc_index;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        // title/abstract lines: <docid>|t|... / <docid>|a|...
        size_t p1 = line.find('|');
        size_t tab = line.find('\t');
        if (p1 != std::string::npos && (tab == std::string::npos || p1 < tab) &&
            p1 + 2 < line.size() && (line[p1 + 1] == 't' || line[p1 + 1] == 'a') &&
            line[p1 + 2] == '|') {
            std::string doc_id = line.substr(0, p1);
            char kind = line[p1 + 1];
            std::string text = line.substr(p1 + 3);
            auto it = doc_index.find(doc_id);
            if (it == doc_index.end()) {
                doc_index[doc_id] = corpus.documents.size();
                corpus.documents.push_back({doc_id, "", ""});
                it = doc_index.find(doc_id);
            }
            auto& doc = corpus.documents[it->second];
            if (kind == 't') doc.title = text;
            else doc.abstract_text = text;
            continue;
        }

        auto fields = split_tab(line);
        if (fields.size() != 6) {
            format_fail(path, lineno,
                        "expected 6 tab-separated fields in mention line, got " +
                            std::to_string(fields.size()));
        }
        GoldAnnotation ann;
        ann.doc_id = fields[0];
        try {
            ann.start = std::stoull(fields[1]);
            ann.end = std::stoull(fields[2]);
        } catch (const std::exception&) {
            format_fail(path, lineno, "non-numeric offset");
        }
        if (ann.end <= ann.start) format_fail(path, lineno, "end offset <= start offset");
        ann.text = fields[3];
        {
            std::stringstream ss(fields[4]);
            std::string t;
            while (std::getline(ss, t, ',')) {
                if (!t.empty()) ann.semantic_types.insert(t);
            }
        }
        auto cui = ConceptId::parse(fields[5]);
        if (!cui) format_fail(path, lineno, "invalid CUI: " + fields[5]);
        ann.cui = *cui;

        auto it = doc_index.find(ann.doc_id);
        if (it == doc_index.end()) {
            format_fail(path, lineno, "mention for unknown document " + ann.doc_id);
        }
        std::string text = corpus.documents[it->second].full_text();
        if (ann.end > text.size()) {
            ++corpus.skipped_out_of_bounds;
            std::cerr << path << ":" << lineno << ": warning: offsets ["
                      << ann.start << "," << ann.end << ") out of bounds, skipping\n";
            continue;
        }
        corpus.annotations.push_back(std::move(ann));
    }
    return corpus;
}

std::vector<Mention> mentions_from_corpus(const PubtatorCorpus& corpus, int context_window) {
    std::map<std::string, const PubtatorDocument*> by_id;
    for (const auto& doc : corpus.documents) by_id[doc.doc_id] = &doc;

    std::vector<Mention> mentions;
    mentions.reserve(corpus.annotations.size());
    for (const auto& ann : corpus.annotations) {
        Mention m;
        m.doc_id = ann.doc_id;
        m.start = ann.start;
        m.end = ann.end;
        m.text = ann.text;
        const std::string text = by_id.at(ann.doc_id)->full_text();
        size_t ctx_begin = ann.start > static_cast<size_t>(context_window)
                               ? ann.start - context_window
                               : 0;
        size_t ctx_end = std::min(text.size(), ann.end + context_window);
        m.context = text.substr(ctx_begin, ctx_end - ctx_begin);
        mentions.push_back(std::move(m));
    }
    return mentions;
}

double fbeta(double precision, double recall, double beta) {
    double b2 = beta * beta;
    double denom = b2 * precision + recall;
    if (denom == 0.0) return 0.0;
    return (1.0 + b2) * precision * recall / denom;
}

EvalReport score_predictions(const std::vector<Prediction>& predictions,
                             const std::vector<GoldAnnotation>& gold, const EvalConfig& cfg) {
    using Key = std::tuple<std::string, size_t, size_t>;
    std::map<Key, const Prediction*> by_span;
    for (const auto& p : predictions) {
        Key key{p.mention.doc_id, p.mention.start, p.mention.end};
        if (by_span.count(key)) {
            throw std::runtime_error("duplicate prediction record for mention " +
                                     p.mention.doc_id + " [" + std::to_string(p.mention.start) +
                                     "," + std::to_string(p.mention.end) + ")");
        }
        by_span[key] = &p;
    }

    EvalReport report;
    report.beta = cfg.beta;
    for (const auto& ann : gold) {
        if (cfg.semantic_type_filter) {
            bool keep = false;
            for (const auto& t : ann.semantic_types) {
                if (cfg.semantic_type_filter->count(t)) { keep = true; break; }
            }
            if (!keep) continue;
        }
        ++report.n_mentions;

        std::set<ConceptId> predicted;
        auto it = by_span.find(Key{ann.doc_id, ann.start, ann.end});
        if (it == by_span.end()) {
            ++report.missing_predictions;  // treated as an empty prediction
        } else {
            for (const auto& cui : it->second->final_cuis) predicted.insert(cui);
        }

        if (predicted.count(ann.cui)) {
            ++report.tp;
            report.fp += static_cast<long long>(predicted.size()) - 1;
        } else {
            ++report.fn;
            report.fp += static_cast<long long>(predicted.size());
        }
    }

    if (report.tp + report.fp > 0) {
        report.precision = static_cast<double>(report.tp) / (report.tp + report.fp);
    } else {
        report.zero_division = true;
    }
    if (report.tp + report.fn > 0) {
        report.recall = static_cast<double>(report.tp) / (report.tp + report.fn);
    } else {
        report.zero_division = true;
    }
    report.f1 = fbeta(report.precision, report.recall, 1.0);
    report.f_beta = fbeta(report.precision, report.recall, cfg.beta);
    return report;
}

std::string EvalReport::to_json() const {
    nlohmann::ordered_json j = {
        {"tp", tp},
        {"fp", fp},
        {"fn", fn},
        {"precision", precision},
        {"recall", recall},
        {"f1", f1},
        {"f_beta", f_beta},
        {"beta", beta},
        {"n_mentions", n_mentions},
        {"missing_predictions", missing_predictions},
        {"zero_division", zero_division},
    };
    return j.dump(2);
}

std::string EvalReport::to_table() const {
    std::ostringstream out;
    out << std::fixed << std::setprecision(4);
    out << "mentions   " << n_mentions << "\n"
        << "tp/fp/fn   " << tp << " / " << fp << " / " << fn << "\n"
        << "precision  " << precision << (zero_division ? "  (zero denominator)" : "") << "\n"
        << "recall     " << recall << "\n"
        << "F1         " << f1 << "\n"
        << "F(beta=" << std::setprecision(1) << beta << std::setprecision(4) << ")  "
        << f_beta << "\n";
    if (missing_predictions > 0) {
        out << "missing prediction records: " << missing_predictions << "\n";
    }
    return out.str();
}

std::vector<Prediction> load_predictions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open predictions file: " + path);
    std::vector<Prediction> preds;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": not valid JSON");
        }
        Prediction p;
        p.mention.doc_id = j.at("doc_id");
        p.mention.start = j.at("start");
        p.mention.end = j.at("end");
        p.mention.text = j.value("text", "");
        for (const auto& c : j.at("final_cuis")) {
            auto cui = ConceptId::parse(c.get<std::string>());
            if (!cui) {
                throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                         ": invalid CUI in final_cuis");
            }
            p.final_cuis.push_back(*cui);
        }
        p.degraded = j.value("degraded", false);
        preds.push_back(std::move(p));
    }
    return preds;
}

}  // namespace norm
