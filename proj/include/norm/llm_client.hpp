#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <vector>

namespace norm {

struct ChatRequest {
    std::string system_prompt;
    std::string user_prompt;  // non-empty
    double temperature = 0.0;
    int max_tokens = 512;
    std::string model;
    // Prompt-kind hint for mock rule matching; excluded from cache_key.
    std::string kind;
};

enum class Backend { LIVE, CACHE, MOCK };

struct ChatResponse {
    std::string text;
    int prompt_tokens = 0;
    int completion_tokens = 0;
    Backend backend = Backend::LIVE;
};

struct EndpointConfig {
    std::string base_url = "http://localhost:8000";
    std::string api_key_env = "LLM_API_KEY";
    int timeout_ms = 30000;
    int max_retries = 3;
    int retry_backoff_ms = 500;  // doubled per attempt
    int max_concurrent_requests = 4;
};

enum class LlmErrorKind { Auth, RateLimited, Timeout, MalformedResponse, Transport };

struct LlmError : std::runtime_error {
    LlmErrorKind kind;
    LlmError(LlmErrorKind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

/// SHA-256 hex over (model, system_prompt, user_prompt, temperature,
/// max_tokens); stable across runs and platforms.
std::string cache_key(const ChatRequest& req);

class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual ChatResponse complete(const ChatRequest& req) = 0;

    struct Stats {
        std::atomic<uint64_t> llm_calls{0};
        std::atomic<uint64_t> cache_hits{0};
        std::atomic<uint64_t> retries{0};
    };
    Stats& stats() { return stats_; }

protected:
    Stats stats_;
};

/// Chat-completions HTTP backend. Retries 429/5xx/timeouts with
/// exponential backoff; other 4xx fail immediately.
std::unique_ptr<ChatClient> make_live_client(const EndpointConfig& cfg);

/// Deterministic backend driven by a JSON rules file:
///   {"rules": [{"kind": "...", "contains": "...", "response": "..."}],
///    "default_response": "..."}
/// First rule whose kind (empty = any) and substring both match wins.
std::unique_ptr<ChatClient> make_mock_client(const std::string& rules_path);

/// Wraps another client with an on-disk response cache keyed by
/// cache_key; layout cache/<first-2-hex>/<key>.json, atomic writes.
/// `inner` may be null, in which case a miss is an error.
std::unique_ptr<ChatClient> make_cached_client(std::unique_ptr<ChatClient> inner,
                                               const std::string& cache_dir);

}  // namespace norm
