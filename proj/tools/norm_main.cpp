#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "norm/evaluator.hpp"
#include "norm/pipeline.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitLlm = 3;

struct RunConfig {
    std::string dictionary;
    std::string corpus;
    std::string prompts;
    std::string mock_rules;
    std::string cache_dir = "cache";
    std::string predictions_out = "predictions.jsonl";
    std::string report_out = "report.json";
    std::vector<std::string> semantic_types;  // empty = no filter

    std::string llm_backend = "mock";  // mock | cache | live
    norm::EndpointConfig endpoint;
    std::string model = "gpt-3.5-turbo-0125";
    double temperature = 0.0;
    int max_tokens = 512;

    norm::PipelineConfig pipeline;
    bool prune_enabled = false;
    norm::PruneStrategy prune_strategy;
    norm::EvalConfig eval;
    double max_degraded_fraction = 1.0;
};

void check_known_keys(const json& obj, const std::set<std::string>& known,
                      const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        if (!known.count(key)) {
            throw std::runtime_error("unknown config key \"" + key + "\" in " + where);
        }
    }
}

RunConfig load_config(const std::string& path) {
    RunConfig cfg;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    json j = json::parse(in);

    check_known_keys(j, {"dictionary", "corpus", "prompts", "mock_rules", "cache_dir",
                         "predictions_out", "report_out", "semantic_types", "llm",
                         "matcher", "augment", "prune", "pipeline", "eval"},
                     "top level");

    cfg.dictionary = j.value("dictionary", cfg.dictionary);
    cfg.corpus = j.value("corpus", cfg.corpus);
    cfg.prompts = j.value("prompts", cfg.prompts);
    cfg.mock_rules = j.value("mock_rules", cfg.mock_rules);
    cfg.cache_dir = j.value("cache_dir", cfg.cache_dir);
    cfg.predictions_out = j.value("predictions_out", cfg.predictions_out);
    cfg.report_out = j.value("report_out", cfg.report_out);
    if (j.contains("semantic_types")) {
        cfg.semantic_types = j["semantic_types"].get<std::vector<std::string>>();
    }

    if (j.contains("llm")) {
        const auto& l = j["llm"];
        check_known_keys(l, {"backend", "base_url", "api_key_env", "timeout_ms", "max_retries",
                             "retry_backoff_ms", "max_concurrent_requests", "model",
                             "temperature", "max_tokens"},
                         "llm");
        cfg.llm_backend = l.value("backend", cfg.llm_backend);
        cfg.endpoint.base_url = l.value("base_url", cfg.endpoint.base_url);
        cfg.endpoint.api_key_env = l.value("api_key_env", cfg.endpoint.api_key_env);
        cfg.endpoint.timeout_ms = l.value("timeout_ms", cfg.endpoint.timeout_ms);
        cfg.endpoint.max_retries = l.value("max_retries", cfg.endpoint.max_retries);
        cfg.endpoint.retry_backoff_ms = l.value("retry_backoff_ms", cfg.endpoint.retry_backoff_ms);
        cfg.endpoint.max_concurrent_requests =
            l.value("max_concurrent_requests", cfg.endpoint.max_concurrent_requests);
        cfg.model = l.value("model", cfg.model);
        cfg.temperature = l.value("temperature", cfg.temperature);
        cfg.max_tokens = l.value("max_tokens", cfg.max_tokens);
    }

    if (j.contains("matcher")) {
        const auto& m = j["matcher"];
        check_known_keys(m, {"engine", "k1", "b", "top_k", "include_synonyms", "ngram_n",
                             "threshold"},
                         "matcher");
        std::string engine = m.value("engine", "bm25");
        if (engine == "bm25") cfg.pipeline.matcher = norm::MatcherId::BM25;
        else if (engine == "ngram") cfg.pipeline.matcher = norm::MatcherId::NGRAM;
        else if (engine == "exact") cfg.pipeline.matcher = norm::MatcherId::EXACT;
        else throw std::runtime_error("unknown matcher engine: " + engine);
        cfg.pipeline.bm25.k1 = m.value("k1", cfg.pipeline.bm25.k1);
        cfg.pipeline.bm25.b = m.value("b", cfg.pipeline.bm25.b);
        cfg.pipeline.bm25.top_k = m.value("top_k", cfg.pipeline.bm25.top_k);
        cfg.pipeline.bm25.include_synonyms =
            m.value("include_synonyms", cfg.pipeline.bm25.include_synonyms);
        cfg.pipeline.ngram.n = m.value("ngram_n", cfg.pipeline.ngram.n);
        cfg.pipeline.ngram.threshold = m.value("threshold", cfg.pipeline.ngram.threshold);
        cfg.pipeline.ngram.top_k = m.value("top_k", cfg.pipeline.ngram.top_k);
    }

    if (j.contains("augment")) {
        const auto& a = j["augment"];
        check_known_keys(a, {"enabled", "k"}, "augment");
        cfg.pipeline.augment = a.value("enabled", false);
        cfg.pipeline.augment_cfg.k = a.value("k", cfg.pipeline.augment_cfg.k);
    }

    if (j.contains("prune")) {
        const auto& p = j["prune"];
        check_known_keys(p, {"enabled", "mode", "chain_of_thought", "top1"}, "prune");
        cfg.prune_enabled = p.value("enabled", false);
        std::string mode = p.value("mode", "mc_index");
        auto parsed = norm::prune_mode_from_name(mode);
        if (!parsed) throw std::runtime_error("unknown prune mode: " + mode);
        cfg.prune_strategy.mode = *parsed;
        cfg.prune_strategy.chain_of_thought = p.value("chain_of_thought", false);
        cfg.prune_strategy.top1 = p.value("top1", false);
    }

    if (j.contains("pipeline")) {
        const auto& p = j["pipeline"];
        check_known_keys(p, {"context_window", "max_candidates_for_prune", "max_concurrent",
                             "max_degraded_fraction"},
                         "pipeline");
        cfg.pipeline.context_window = p.value("context_window", cfg.pipeline.context_window);
        cfg.pipeline.max_candidates_for_prune =
            p.value("max_candidates_for_prune", cfg.pipeline.max_candidates_for_prune);
        cfg.pipeline.max_concurrent = p.value("max_concurrent", cfg.pipeline.max_concurrent);
        cfg.max_degraded_fraction = p.value("max_degraded_fraction", cfg.max_degraded_fraction);
    }

    if (j.contains("eval")) {
        const auto& e = j["eval"];
        check_known_keys(e, {"beta"}, "eval");
        cfg.eval.beta = e.value("beta", cfg.eval.beta);
    }

    // input paths resolve relative to the config file's directory
    fs::path base = fs::path(path).parent_path();
    auto resolve = [&](std::string& p) {
        if (!p.empty() && fs::path(p).is_relative() && !base.empty()) {
            p = (base / p).string();
        }
    };
    resolve(cfg.dictionary);
    resolve(cfg.corpus);
    resolve(cfg.prompts);
    resolve(cfg.mock_rules);
    return cfg;
}

void finalize(RunConfig& cfg) {
    cfg.pipeline.augment_cfg.model = cfg.model;
    cfg.pipeline.augment_cfg.temperature = cfg.temperature;
    cfg.pipeline.augment_cfg.max_tokens = cfg.max_tokens;
    cfg.pipeline.prune_cfg.model = cfg.model;
    cfg.pipeline.prune_cfg.temperature = cfg.temperature;
    cfg.pipeline.prune_cfg.max_tokens = cfg.max_tokens;
    if (cfg.prune_enabled) cfg.pipeline.prune = cfg.prune_strategy;
    else cfg.pipeline.prune.reset();
    if (!cfg.semantic_types.empty()) {
        cfg.eval.semantic_type_filter =
            std::set<std::string>(cfg.semantic_types.begin(), cfg.semantic_types.end());
    }
}

std::unique_ptr<norm::ChatClient> make_client(const RunConfig& cfg) {
    if (cfg.llm_backend == "mock") {
        if (cfg.mock_rules.empty()) {
            throw std::runtime_error("mock backend selected but no mock_rules file configured");
        }
        return norm::make_mock_client(cfg.mock_rules);
    }
    if (cfg.llm_backend == "live") {
        return norm::make_live_client(cfg.endpoint);
    }
    if (cfg.llm_backend == "cache") {
        // cache over live: re-runs are free; live is only consulted on miss
        return norm::make_cached_client(norm::make_live_client(cfg.endpoint), cfg.cache_dir);
    }
    if (cfg.llm_backend == "cache-only") {
        return norm::make_cached_client(nullptr, cfg.cache_dir);
    }
    throw std::runtime_error("unknown llm backend: " + cfg.llm_backend);
}

norm::ConceptDictionary load_active_dictionary(const RunConfig& cfg) {
    if (cfg.dictionary.empty()) throw std::runtime_error("no dictionary configured");
    auto dict = norm::load_dictionary(cfg.dictionary);
    if (!cfg.semantic_types.empty()) {
        dict = norm::filter_by_semantic_types(
            dict, std::set<std::string>(cfg.semantic_types.begin(), cfg.semantic_types.end()));
    }
    return dict;
}

norm::PromptTemplates load_prompts(const RunConfig& cfg) {
    if (cfg.prompts.empty()) return norm::PromptTemplates();
    return norm::PromptTemplates::load(cfg.prompts);
}

int cmd_dict_stats(const RunConfig& cfg) {
    auto dict = load_active_dictionary(cfg);
    auto stats = norm::dictionary_stats(dict);
    std::cout << "concepts   " << stats.concept_count << "\n"
              << "terms      " << stats.term_count << "\n"
              << "semantic types:\n";
    for (const auto& [type, count] : stats.semantic_type_histogram) {
        std::cout << "  " << type << "  " << count << "\n";
    }
    return kExitOk;
}

int run_normalize(RunConfig& cfg, norm::CorpusRunStats& stats) {
    auto dict = load_active_dictionary(cfg);
    auto prompts = load_prompts(cfg);
    norm::MatcherSet matchers(dict, cfg.pipeline);
    auto corpus = norm::load_pubtator(cfg.corpus);
    auto mentions = norm::mentions_from_corpus(corpus, cfg.pipeline.context_window);

    std::unique_ptr<norm::ChatClient> client;
    bool needs_llm = cfg.pipeline.augment || cfg.pipeline.prune.has_value();
    if (needs_llm) client = make_client(cfg);

    auto preds = norm::normalize_corpus(cfg.pipeline, matchers, client.get(), prompts,
                                        mentions, &stats, true);
    norm::write_predictions(preds, cfg.predictions_out);
    std::cerr << "wrote " << preds.size() << " predictions to " << cfg.predictions_out
              << " (llm calls " << stats.llm_calls << ", cache hits " << stats.cache_hits
              << ", degraded " << stats.degraded << ")\n";

    if (stats.mentions > 0 &&
        static_cast<double>(stats.degraded) / stats.mentions > cfg.max_degraded_fraction) {
        std::cerr << "error: " << stats.degraded << "/" << stats.mentions
                  << " mentions degraded by LLM transport failures (budget "
                  << cfg.max_degraded_fraction << ")\n";
        return kExitLlm;
    }
    return kExitOk;
}

int cmd_evaluate(const RunConfig& cfg, const std::string& predictions_path) {
    auto corpus = norm::load_pubtator(cfg.corpus);
    auto preds = norm::load_predictions(predictions_path);
    auto report = norm::score_predictions(preds, corpus.annotations, cfg.eval);
    std::cout << report.to_table();
    if (!cfg.report_out.empty()) {
        std::ofstream out(cfg.report_out);
        out << report.to_json() << "\n";
        std::cerr << "wrote report to " << cfg.report_out << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"LLM-augmented biomedical concept normalization"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("-c,--config", config_path, "JSON config file");

    // flag overrides; flag beats config beats default
    std::string opt_dictionary, opt_corpus, opt_predictions, opt_report, opt_matcher,
        opt_llm, opt_prune_mode, opt_mock_rules, opt_cache_dir;
    std::vector<std::string> opt_semantic_types;
    double opt_beta = -1;
    int opt_max_concurrent = -1, opt_top_k = -1, opt_k_alternates = -1;
    double opt_threshold = -1;
    bool flag_augment = false, flag_no_augment = false;
    bool flag_prune = false, flag_no_prune = false;
    bool flag_cot = false, flag_top1 = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--dictionary", opt_dictionary, "Dictionary TSV path");
        sub->add_option("--corpus", opt_corpus, "PubTator corpus path");
        sub->add_option("--matcher", opt_matcher, "Matcher engine: bm25|ngram|exact");
        sub->add_option("--llm", opt_llm, "LLM backend: live|cache|cache-only|mock");
        sub->add_option("--mock-rules", opt_mock_rules, "Mock LLM rules JSON");
        sub->add_option("--cache-dir", opt_cache_dir, "Response cache directory");
        sub->add_option("--semantic-types", opt_semantic_types,
                        "Semantic type filter (repeatable)");
        sub->add_option("--predictions", opt_predictions, "Predictions JSONL path");
        sub->add_option("--report", opt_report, "Evaluation report JSON path");
        sub->add_option("--beta", opt_beta, "F-beta weight");
        sub->add_option("--max-concurrent", opt_max_concurrent, "Worker/request concurrency");
        sub->add_option("--top-k", opt_top_k, "Matcher top-k");
        sub->add_option("--threshold", opt_threshold, "N-gram similarity threshold");
        sub->add_option("--k-alternates", opt_k_alternates, "Alternate phrasings per mention");
        sub->add_flag("--augment", flag_augment, "Enable alternate-phrasing generation");
        sub->add_flag("--no-augment", flag_no_augment, "Disable alternate-phrasing generation");
        sub->add_flag("--prune", flag_prune, "Enable candidate pruning");
        sub->add_flag("--no-prune", flag_no_prune, "Disable candidate pruning");
        sub->add_option("--prune-mode", opt_prune_mode, "mc_index|mc_cui|binary");
        sub->add_flag("--cot", flag_cot, "Chain-of-thought pruning prompts");
        sub->add_flag("--top1", flag_top1, "Always keep the top-ranked candidate");
    };

    auto* sub_stats = app.add_subcommand("dict-stats", "Summarize the concept dictionary");
    auto* sub_norm = app.add_subcommand("normalize", "Normalize a corpus to predictions JSONL");
    auto* sub_aug = app.add_subcommand("augment", "Generate alternates for one mention (debug)");
    auto* sub_prune = app.add_subcommand("prune", "Prune candidates for one mention (debug)");
    auto* sub_eval = app.add_subcommand("evaluate", "Score a predictions file against gold");
    auto* sub_run = app.add_subcommand("run", "normalize then evaluate");
    for (auto* sub : {sub_stats, sub_norm, sub_aug, sub_prune, sub_eval, sub_run}) {
        add_common(sub);
        sub->fallthrough();  // lets --config appear after the subcommand
    }

    std::string aug_mention, aug_context;
    sub_aug->add_option("--mention", aug_mention, "Mention text")->required();
    sub_aug->add_option("--context", aug_context, "Surrounding context");

    std::string prune_mention, prune_context;
    std::vector<std::string> prune_cuis;
    sub_prune->add_option("--mention", prune_mention, "Mention text")->required();
    sub_prune->add_option("--context", prune_context, "Surrounding context");
    sub_prune->add_option("--cui", prune_cuis, "Candidate CUIs in rank order")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg;
        if (!config_path.empty()) cfg = load_config(config_path);

        if (!opt_dictionary.empty()) cfg.dictionary = opt_dictionary;
        if (!opt_corpus.empty()) cfg.corpus = opt_corpus;
        if (!opt_predictions.empty()) cfg.predictions_out = opt_predictions;
        if (!opt_report.empty()) cfg.report_out = opt_report;
        if (!opt_mock_rules.empty()) cfg.mock_rules = opt_mock_rules;
        if (!opt_cache_dir.empty()) cfg.cache_dir = opt_cache_dir;
        if (!opt_llm.empty()) cfg.llm_backend = opt_llm;
        if (!opt_semantic_types.empty()) cfg.semantic_types = opt_semantic_types;
        if (opt_beta > 0) cfg.eval.beta = opt_beta;
        if (opt_max_concurrent > 0) {
            cfg.pipeline.max_concurrent = opt_max_concurrent;
            cfg.endpoint.max_concurrent_requests = opt_max_concurrent;
        }
        if (opt_top_k > 0) {
            cfg.pipeline.bm25.top_k = opt_top_k;
            cfg.pipeline.ngram.top_k = opt_top_k;
        }
        if (opt_threshold > 0) cfg.pipeline.ngram.threshold = opt_threshold;
        if (opt_k_alternates > 0) cfg.pipeline.augment_cfg.k = opt_k_alternates;
        if (!opt_matcher.empty()) {
            if (opt_matcher == "bm25") cfg.pipeline.matcher = norm::MatcherId::BM25;
            else if (opt_matcher == "ngram") cfg.pipeline.matcher = norm::MatcherId::NGRAM;
            else if (opt_matcher == "exact") cfg.pipeline.matcher = norm::MatcherId::EXACT;
            else throw CLI::ValidationError("--matcher", "unknown engine " + opt_matcher);
        }
        if (flag_augment) cfg.pipeline.augment = true;
        if (flag_no_augment) cfg.pipeline.augment = false;
        if (flag_prune) cfg.prune_enabled = true;
        if (flag_no_prune) cfg.prune_enabled = false;
        if (!opt_prune_mode.empty()) {
            auto mode = norm::prune_mode_from_name(opt_prune_mode);
            if (!mode) throw CLI::ValidationError("--prune-mode", "unknown mode " + opt_prune_mode);
            cfg.prune_strategy.mode = *mode;
            cfg.prune_enabled = true;
        }
        if (flag_cot) cfg.prune_strategy.chain_of_thought = true;
        if (flag_top1) cfg.prune_strategy.top1 = true;
        finalize(cfg);

        if (sub_stats->parsed()) return cmd_dict_stats(cfg);

        if (sub_norm->parsed()) {
            norm::CorpusRunStats stats;
            return run_normalize(cfg, stats);
        }

        if (sub_aug->parsed()) {
            auto client = make_client(cfg);
            auto prompts = load_prompts(cfg);
            auto alts = norm::generate_alternates(*client, cfg.pipeline.augment_cfg, prompts,
                                                  aug_mention, aug_context);
            json out = {{"original", alts.original},
                        {"alternates", alts.alternates},
                        {"raw_response", alts.raw_response}};
            std::cout << out.dump(2) << "\n";
            return kExitOk;
        }

        if (sub_prune->parsed()) {
            auto dict = load_active_dictionary(cfg);
            auto client = make_client(cfg);
            auto prompts = load_prompts(cfg);
            std::vector<norm::Candidate> candidates;
            double rank_score = static_cast<double>(prune_cuis.size());
            for (const auto& raw : prune_cuis) {
                auto cui = norm::ConceptId::parse(raw);
                if (!cui) throw std::runtime_error("invalid CUI: " + raw);
                const norm::Concept* c = dict.find(*cui);
                if (!c) throw std::runtime_error("CUI not in dictionary: " + raw);
                candidates.push_back({*cui, rank_score--, c->preferred_term, prune_mention,
                                      cfg.pipeline.matcher});
            }
            norm::MentionContext mc{prune_mention, prune_context};
            auto verdict = norm::prune_candidates(*client, cfg.pipeline.prune_cfg, prompts, mc,
                                                  candidates,
                                                  cfg.prune_enabled ? cfg.prune_strategy
                                                                    : norm::PruneStrategy{},
                                                  dict);
            json accepted = json::array(), rejected = json::array();
            for (const auto& c : verdict.accepted) accepted.push_back(c.cui.str());
            for (const auto& c : verdict.rejected) rejected.push_back(c.cui.str());
            json out = {{"accepted", accepted},
                        {"rejected", rejected},
                        {"top1_applied", verdict.top1_applied},
                        {"raw_responses", verdict.raw_responses}};
            std::cout << out.dump(2) << "\n";
            return kExitOk;
        }

        if (sub_eval->parsed()) {
            return cmd_evaluate(cfg, cfg.predictions_out);
        }

        if (sub_run->parsed()) {
            norm::CorpusRunStats stats;
            int rc = run_normalize(cfg, stats);
            if (rc != kExitOk) return rc;
            return cmd_evaluate(cfg, cfg.predictions_out);
        }
    } catch (const norm::LlmError& e) {
        std::cerr << "LLM error: " << e.what() << "\n";
        return kExitLlm;
    } catch (const norm::DictionaryLoadError& e) {
        std::cerr << "dictionary error: " << e.what() << "\n";
        return kExitData;
    } catch (const norm::CorpusFormatError& e) {
        std::cerr << "corpus error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
