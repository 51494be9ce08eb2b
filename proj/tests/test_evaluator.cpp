#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "norm/evaluator.hpp"

using namespace norm;
namespace fs = std::filesystem;

namespace {

const std::string kData = NORM_DATA_DIR;

std::string write_temp(const std::string& name, const std::string& content) {
    fs::path p = fs::temp_directory_path() / name;
    std::ofstream out(p);
    out << content;
    return p.string();
}

Prediction make_pred(const std::string& doc, size_t start, size_t end,
                     std::vector<std::string> cuis) {
    Prediction p;
    p.mention.doc_id = doc;
    p.mention.start = start;
    p.mention.end = end;
    for (const auto& c : cuis) p.final_cuis.push_back(*ConceptId::parse(c));
    return p;
}

GoldAnnotation make_gold(const std::string& doc, size_t start, size_t end,
                         const std::string& cui) {
    GoldAnnotation g;
    g.doc_id = doc;
    g.start = start;
    g.end = end;
    g.cui = *ConceptId::parse(cui);
    g.semantic_types.insert("T047");
    return g;
}

}  // namespace

TEST_CASE("fbeta formula") {
    CHECK(fbeta(1.0, 1.0, 2.0) == doctest::Approx(1.0));
    CHECK(fbeta(0.5, 1.0, 2.0) == doctest::Approx(5.0 * 0.5 / (4.0 * 0.5 + 1.0)));  // 0.8333
    CHECK(fbeta(1.0, 0.5, 2.0) == doctest::Approx(5.0 * 0.5 / (4.0 + 0.5)));        // 0.5556
    CHECK(fbeta(0.0, 0.0, 2.0) == 0.0);
}

TEST_CASE("fbeta with beta=1 equals F1; beta=2 weights recall") {
    std::mt19937 rng(21);
    std::uniform_real_distribution<double> unit(0.001, 1.0);
    for (int i = 0; i < 1000; ++i) {
        double p = unit(rng);
        double r = unit(rng);
        double f1 = 2.0 * p * r / (p + r);
        CHECK(fbeta(p, r, 1.0) == doctest::Approx(f1).epsilon(1e-12));
        if (r > p) CHECK(fbeta(p, r, 2.0) > fbeta(r, p, 2.0));
    }
}

TEST_CASE("pubtator loader on the fixture") {
    auto corpus = load_pubtator(kData + "/corpus.pubtator");
    REQUIRE(corpus.documents.size() == 2);
    REQUIRE(corpus.annotations.size() == 12);
    CHECK(corpus.skipped_out_of_bounds == 0);

    const auto& first = corpus.annotations[0];
    CHECK(first.doc_id == "1001");
    CHECK(first.start == 72);
    CHECK(first.end == 78);
    CHECK(first.text == "asthma");
    CHECK(first.cui.str() == "C0004096");

    // offsets resolve against title\nabstract
    const auto& doc = corpus.documents[0];
    CHECK(doc.full_text().substr(first.start, first.end - first.start) == "asthma");
}

TEST_CASE("pubtator loader errors and warnings") {
    SUBCASE("malformed mention line reports its line number") {
        auto path = write_temp("bad_corpus.txt",
                               "1|t|Title\n"
                               "1|a|Abstract text\n"
                               "1\t0\t5\n");
        CHECK_THROWS_WITH_AS(load_pubtator(path), doctest::Contains(":3:"),
                             CorpusFormatError);
    }
    SUBCASE("bad CUI reports line number") {
        auto path = write_temp("bad_cui_corpus.txt",
                               "1|t|Title\n"
                               "1|a|Abstract\n"
                               "1\t0\t5\tTitle\tT047\tNOTACUI\n");
        CHECK_THROWS_WITH_AS(load_pubtator(path), doctest::Contains(":3:"),
                             CorpusFormatError);
    }
    SUBCASE("UMLS: prefix is accepted") {
        auto path = write_temp("prefix_corpus.txt",
                               "1|t|Title\n"
                               "1|a|Abstract\n"
                               "1\t0\t5\tTitle\tT047\tUMLS:C0004096\n");
        auto corpus = load_pubtator(path);
        REQUIRE(corpus.annotations.size() == 1);
        CHECK(corpus.annotations[0].cui.str() == "C0004096");
    }
    SUBCASE("out-of-bounds offsets are skipped and counted") {
        auto path = write_temp("oob_corpus.txt",
                               "1|t|Tiny\n"
                               "1|a|Text\n"
                               "1\t100\t110\tmissing\tT047\tC0004096\n");
        auto corpus = load_pubtator(path);
        CHECK(corpus.annotations.empty());
        CHECK(corpus.skipped_out_of_bounds == 1);
    }
}

TEST_CASE("score_predictions hand-counted example") {
    std::vector<GoldAnnotation> gold{make_gold("d", 0, 2, "C0000001"),
                                     make_gold("d", 3, 5, "C0000002")};
    std::vector<Prediction> preds{make_pred("d", 0, 2, {"C0000001", "C0000009"}),
                                  make_pred("d", 3, 5, {})};
    auto report = score_predictions(preds, gold, {});
    CHECK(report.tp == 1);
    CHECK(report.fp == 1);
    CHECK(report.fn == 1);
    CHECK(report.precision == doctest::Approx(0.5));
    CHECK(report.recall == doctest::Approx(0.5));
    CHECK(report.f1 == doctest::Approx(0.5));
    CHECK(report.f_beta == doctest::Approx(0.5));
    CHECK(report.tp + report.fn == static_cast<long long>(gold.size()));
}

TEST_CASE("degenerate cases") {
    std::vector<GoldAnnotation> gold{make_gold("d", 0, 2, "C0000001"),
                                     make_gold("d", 3, 5, "C0000002")};
    SUBCASE("perfect predictions") {
        std::vector<Prediction> preds{make_pred("d", 0, 2, {"C0000001"}),
                                      make_pred("d", 3, 5, {"C0000002"})};
        auto report = score_predictions(preds, gold, {});
        CHECK(report.precision == 1.0);
        CHECK(report.recall == 1.0);
        CHECK(report.f1 == 1.0);
        CHECK(report.f_beta == 1.0);
    }
    SUBCASE("all-empty predictions use the zero-denominator convention") {
        std::vector<Prediction> preds{make_pred("d", 0, 2, {}), make_pred("d", 3, 5, {})};
        auto report = score_predictions(preds, gold, {});
        CHECK(report.precision == 0.0);
        CHECK(report.recall == 0.0);
        CHECK(report.f1 == 0.0);
        CHECK(report.f_beta == 0.0);
        CHECK(report.zero_division);
    }
    SUBCASE("missing prediction records count as empty") {
        std::vector<Prediction> preds{make_pred("d", 0, 2, {"C0000001"})};
        auto report = score_predictions(preds, gold, {});
        CHECK(report.missing_predictions == 1);
        CHECK(report.tp == 1);
        CHECK(report.fn == 1);
    }
    SUBCASE("duplicate prediction records are an error") {
        std::vector<Prediction> preds{make_pred("d", 0, 2, {"C0000001"}),
                                      make_pred("d", 0, 2, {"C0000002"})};
        CHECK_THROWS(score_predictions(preds, gold, {}));
    }
}

TEST_CASE("mention-order permutation invariance") {
    std::vector<GoldAnnotation> gold;
    std::vector<Prediction> preds;
    for (int i = 0; i < 10; ++i) {
        char cui[16];
        std::snprintf(cui, sizeof(cui), "C%07d", i + 1);
        gold.push_back(make_gold("d", i * 10, i * 10 + 5, cui));
        preds.push_back(make_pred("d", i * 10, i * 10 + 5, {i % 2 ? cui : "C0009999"}));
    }
    auto base = score_predictions(preds, gold, {});
    std::mt19937 rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        std::shuffle(gold.begin(), gold.end(), rng);
        std::shuffle(preds.begin(), preds.end(), rng);
        auto shuffled = score_predictions(preds, gold, {});
        CHECK(shuffled.tp == base.tp);
        CHECK(shuffled.fp == base.fp);
        CHECK(shuffled.fn == base.fn);
        CHECK(shuffled.f_beta == base.f_beta);
    }
}

TEST_CASE("adding a wrong CUI never helps precision and never changes recall") {
    std::vector<GoldAnnotation> gold;
    std::vector<Prediction> preds;
    for (int i = 0; i < 8; ++i) {
        char cui[16];
        std::snprintf(cui, sizeof(cui), "C%07d", i + 1);
        gold.push_back(make_gold("d", i * 10, i * 10 + 5, cui));
        preds.push_back(make_pred("d", i * 10, i * 10 + 5,
                                  i % 3 ? std::vector<std::string>{cui}
                                        : std::vector<std::string>{}));
    }
    auto base = score_predictions(preds, gold, {});
    std::mt19937 rng(17);
    std::uniform_int_distribution<size_t> pick(0, preds.size() - 1);
    for (int trial = 0; trial < 200; ++trial) {
        auto mutated = preds;
        mutated[pick(rng)].final_cuis.push_back(*ConceptId::parse("C0777777"));
        auto report = score_predictions(mutated, gold, {});
        CHECK(report.precision <= base.precision);
        CHECK(report.recall == base.recall);
    }
}

TEST_CASE("semantic type filter restricts the gold set") {
    std::vector<GoldAnnotation> gold{make_gold("d", 0, 2, "C0000001"),
                                     make_gold("d", 3, 5, "C0000002")};
    gold[1].semantic_types = {"T048"};
    std::vector<Prediction> preds{make_pred("d", 0, 2, {"C0000001"})};
    EvalConfig cfg;
    cfg.semantic_type_filter = std::set<std::string>{"T047"};
    auto report = score_predictions(preds, gold, cfg);
    CHECK(report.n_mentions == 1);
    CHECK(report.tp == 1);
    CHECK(report.fn == 0);
}

TEST_CASE("report serialization carries the contract fields") {
    std::vector<GoldAnnotation> gold{make_gold("d", 0, 2, "C0000001")};
    std::vector<Prediction> preds{make_pred("d", 0, 2, {"C0000001"})};
    auto report = score_predictions(preds, gold, {});
    auto j = nlohmann::json::parse(report.to_json());
    for (const char* key : {"tp", "fp", "fn", "precision", "recall", "f1", "f_beta",
                            "beta", "n_mentions"}) {
        CHECK(j.contains(key));
    }
    CHECK(report.to_table().find("precision") != std::string::npos);
}
