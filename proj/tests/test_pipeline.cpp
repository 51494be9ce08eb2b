#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <memory>
#include <set>

#include "norm/evaluator.hpp"
#include "norm/pipeline.hpp"

using namespace norm;
namespace fs = std::filesystem;

namespace {

const std::string kData = NORM_DATA_DIR;

PipelineConfig exact_config() {
    PipelineConfig cfg;
    cfg.matcher = MatcherId::EXACT;
    cfg.augment_cfg.model = "mock";
    cfg.prune_cfg.model = "mock";
    return cfg;
}

std::unique_ptr<ChatClient> fixture_mock() {
    return make_mock_client(kData + "/mock_rules.json");
}

std::vector<Mention> fixture_mentions() {
    auto corpus = load_pubtator(kData + "/corpus.pubtator");
    return mentions_from_corpus(corpus, 200);
}

std::set<std::string> cui_set(const Prediction& p) {
    std::set<std::string> out;
    for (const auto& c : p.candidates) out.insert(c.cui.str());
    return out;
}

// Always-failing transport for degradation tests.
struct FailingClient : ChatClient {
    ChatResponse complete(const ChatRequest&) override {
        throw LlmError(LlmErrorKind::Timeout, "synthetic failure");
    }
};

}  // namespace

TEST_CASE("exact match composition without augment or prune") {
    auto dict = load_dictionary(kData + "/dictionary.tsv");
    auto cfg = exact_config();
    MatcherSet matchers(dict, cfg);
    PromptTemplates prompts;

    Mention m{"doc", 0, 6, "asthma", "asthma in context"};
    auto pred = normalize_mention(cfg, matchers, nullptr, prompts, m);
    REQUIRE(pred.final_cuis.size() == 1);
    CHECK(pred.final_cuis[0].str() == "C0004096");
    CHECK_FALSE(pred.degraded);
}

TEST_CASE("augmentation recovers an exact-miss via a mock alternate") {
    auto dict = load_dictionary(kData + "/dictionary.tsv");
    auto cfg = exact_config();
    cfg.augment = true;
    MatcherSet matchers(dict, cfg);
    auto client = fixture_mock();
    auto prompts = PromptTemplates::load(kData + "/prompts.txt");

    Mention m{"doc", 0, 14, "kidney failure", "progressive kidney failure was observed"};

    auto off_cfg = cfg;
    off_cfg.augment = false;
    auto without = normalize_mention(off_cfg, matchers, nullptr, prompts, m);
    CHECK(without.final_cuis.empty());

    auto with = normalize_mention(cfg, matchers, client.get(), prompts, m);
    REQUIRE(with.final_cuis.size() == 1);
    CHECK(with.final_cuis[0].str() == "C0035078");
    REQUIRE(with.alternates.has_value());
    CHECK(with.alternates->alternates ==
          std::vector<std::string>{"renal failure", "renal insufficiency"});
    // audit: the hit traces back to the alternate that produced it
    REQUIRE(with.candidates.size() == 1);
    CHECK(with.candidates[0].query_text == "renal failure");
}

TEST_CASE("prune rejection with top1 keeps the top-ranked candidate") {
    auto dict = load_dictionary(kData + "/dictionary.tsv");
    auto cfg = exact_config();
    cfg.prune = PruneStrategy{PruneMode::BINARY, false, true};
    MatcherSet matchers(dict, cfg);
    auto prompts = PromptTemplates::load(kData + "/prompts.txt");

    fs::path rules = fs::temp_directory_path() / "reject_all_rules.json";
    {
        std::ofstream out(rules);
        out << R"({"rules": [{"kind": "prune", "contains": "", "response": "no"}],
                   "default_response": ""})";
    }
    auto client = make_mock_client(rules.string());

    Mention m{"doc", 0, 12, "pump failure", "pump failure noted"};
    auto pred = normalize_mention(cfg, matchers, client.get(), prompts, m);
    REQUIRE(pred.verdict.has_value());
    CHECK(pred.verdict->top1_applied);
    REQUIRE(pred.final_cuis.size() == 1);
    CHECK(pred.final_cuis[0].str() == "C0018801");  // lowest CUI wins the 1.0-score tie
}

TEST_CASE("LLM failure degrades gracefully to original-span candidates") {
    auto dict = load_dictionary(kData + "/dictionary.tsv");
    auto cfg = exact_config();
    cfg.augment = true;
    cfg.prune = PruneStrategy{PruneMode::MULTIPLE_CHOICE_INDEX, false, false};
    MatcherSet matchers(dict, cfg);
    PromptTemplates prompts;
    FailingClient failing;

    Mention m{"doc", 0, 6, "asthma", "asthma in context"};
    auto pred = normalize_mention(cfg, matchers, &failing, prompts, m);
    CHECK(pred.degraded);
    REQUIRE(pred.final_cuis.size() == 1);
    CHECK(pred.final_cuis[0].str() == "C0004096");
    CHECK(pred.degrade_note.find("augment") != std::string::npos);
    CHECK(pred.degrade_note.find("prune") != std::string::npos);
}

TEST_CASE("normalize_corpus on the fixture") {
    auto dict = load_dictionary(kData + "/dictionary.tsv");
    auto cfg = exact_config();
    cfg.augment = true;
    MatcherSet matchers(dict, cfg);
    auto prompts = PromptTemplates::load(kData + "/prompts.txt");
    auto mentions = fixture_mentions();
    REQUIRE(mentions.size() == 12);

    SUBCASE("empty input") {
        auto client = fixture_mock();
        CorpusRunStats stats;
        auto preds = normalize_corpus(cfg, matchers, client.get(), prompts, {}, &stats);
        CHECK(preds.empty());
        CHECK(stats.llm_calls == 0);
    }

    SUBCASE("deterministic across runs and worker counts") {
        auto client1 = fixture_mock();
        auto client2 = fixture_mock();
        auto cfg1 = cfg;
        cfg1.max_concurrent = 1;
        auto cfg8 = cfg;
        cfg8.max_concurrent = 8;
        auto p1 = normalize_corpus(cfg1, matchers, client1.get(), prompts, mentions);
        auto p8 = normalize_corpus(cfg8, matchers, client2.get(), prompts, mentions);
        REQUIRE(p1.size() == p8.size());
        for (size_t i = 0; i < p1.size(); ++i) {
            CHECK(prediction_to_json(p1[i]) == prediction_to_json(p8[i]));
        }
    }

    SUBCASE("augmented candidate sets are supersets of unaugmented ones") {
        auto client = fixture_mock();
        auto off = cfg;
        off.augment = false;
        auto with = normalize_corpus(cfg, matchers, client.get(), prompts, mentions);
        auto without = normalize_corpus(off, matchers, nullptr, prompts, mentions);
        bool strictly_larger_somewhere = false;
        for (size_t i = 0; i < mentions.size(); ++i) {
            auto a = cui_set(with[i]);
            auto b = cui_set(without[i]);
            for (const auto& cui : b) CHECK(a.count(cui) == 1);
            if (a.size() > b.size()) strictly_larger_somewhere = true;
        }
        CHECK(strictly_larger_somewhere);
    }
}

TEST_CASE("prediction JSONL contract fields") {
    auto dict = load_dictionary(kData + "/dictionary.tsv");
    auto cfg = exact_config();
    MatcherSet matchers(dict, cfg);
    PromptTemplates prompts;
    Mention m{"1001", 72, 78, "asthma", "ctx"};
    auto pred = normalize_mention(cfg, matchers, nullptr, prompts, m);

    auto j = nlohmann::json::parse(prediction_to_json(pred));
    CHECK(j["doc_id"] == "1001");
    CHECK(j["start"] == 72);
    CHECK(j["end"] == 78);
    CHECK(j["text"] == "asthma");
    CHECK(j["final_cuis"] == nlohmann::json::array({"C0004096"}));
    REQUIRE(j["candidates"].size() == 1);
    CHECK(j["candidates"][0]["cui"] == "C0004096");
    CHECK(j["candidates"][0]["score"] == 1.0);
    CHECK(j["candidates"][0]["query_text"] == "asthma");
    CHECK(j["candidates"][0]["matcher_id"] == "EXACT");
    CHECK(j["alternates"].is_null());
    CHECK(j["prune"].is_null());
    CHECK(j["degraded"] == false);

    // round trip through the file reader used by the evaluator
    fs::path p = fs::temp_directory_path() / "preds_roundtrip.jsonl";
    write_predictions({pred}, p.string());
    auto loaded = load_predictions(p.string());
    REQUIRE(loaded.size() == 1);
    CHECK(loaded[0].mention.doc_id == "1001");
    REQUIRE(loaded[0].final_cuis.size() == 1);
    CHECK(loaded[0].final_cuis[0].str() == "C0004096");
}
