#include "norm/llm_client.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace norm {

namespace fs = std::filesystem;
using nlohmann::json;

std::string cache_key(const ChatRequest& req) {
    // Length-prefixed field framing so no two distinct requests can
    // serialize to the same byte string.
    std::ostringstream buf;
    auto field = [&buf](const std::string& s) { buf << s.size() << ':' << s << ';'; };
    field(req.model);
    field(req.system_prompt);
    field(req.user_prompt);
    std::ostringstream temp;
    temp.precision(17);
    temp << req.temperature;
    field(temp.str());
    field(std::to_string(req.max_tokens));
    std::string data = buf.str();

    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

namespace {

class LiveClient : public ChatClient {
public:
    explicit LiveClient(EndpointConfig cfg) : cfg_(std::move(cfg)) {
        in_flight_limit_ = std::max(1, cfg_.max_concurrent_requests);
    }

    ChatResponse complete(const ChatRequest& req) override {
        SlotGuard slot(*this);

        json body = {
            {"model", req.model},
            {"messages", json::array()},
            {"temperature", req.temperature},
            {"max_tokens", req.max_tokens},
        };
        if (!req.system_prompt.empty()) {
            body["messages"].push_back({{"role", "system"}, {"content", req.system_prompt}});
        }
        body["messages"].push_back({{"role", "user"}, {"content", req.user_prompt}});
        std::string payload = body.dump();

        httplib::Headers headers;
        const char* key = std::getenv(cfg_.api_key_env.c_str());
        if (key && *key) headers.insert({"Authorization", std::string("Bearer ") + key});

        int backoff_ms = cfg_.retry_backoff_ms;
        std::string last_error;
        for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
            if (attempt > 0) {
                ++stats_.retries;
                std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
                backoff_ms *= 2;
            }
            ++stats_.llm_calls;

            httplib::Client http(cfg_.base_url);
            http.set_connection_timeout(std::chrono::milliseconds(cfg_.timeout_ms));
            http.set_read_timeout(std::chrono::milliseconds(cfg_.timeout_ms));
            http.set_write_timeout(std::chrono::milliseconds(cfg_.timeout_ms));

            auto res = http.Post("/v1/chat/completions", headers, payload, "application/json");
            if (!res) {
                last_error = "transport: " + httplib::to_string(res.error());
                continue;  // connection failure / timeout: retryable
            }
            if (res->status == 401 || res->status == 403) {
                throw LlmError(LlmErrorKind::Auth,
                               "authentication failed (HTTP " + std::to_string(res->status) + ")");
            }
            if (res->status == 429 || res->status >= 500) {
                last_error = "HTTP " + std::to_string(res->status);
                continue;
            }
            if (res->status >= 400) {
                throw LlmError(LlmErrorKind::Transport,
                               "HTTP " + std::to_string(res->status) + ": " + res->body);
            }
            return parse_response(res->body);
        }
        if (last_error.rfind("HTTP 429", 0) == 0) {
            throw LlmError(LlmErrorKind::RateLimited, "rate limited after retries: " + last_error);
        }
        if (last_error.rfind("transport", 0) == 0) {
            throw LlmError(LlmErrorKind::Timeout, "request failed after retries: " + last_error);
        }
        throw LlmError(LlmErrorKind::Transport, "request failed after retries: " + last_error);
    }

private:
    static ChatResponse parse_response(const std::string& body) {
        json j = json::parse(body, nullptr, false);
        if (j.is_discarded() || !j.contains("choices") || j["choices"].empty() ||
            !j["choices"][0].contains("message")) {
            throw LlmError(LlmErrorKind::MalformedResponse,
                           "response body is not a chat completion: " + body.substr(0, 200));
        }
        ChatResponse resp;
        resp.text = j["choices"][0]["message"].value("content", "");
        if (j.contains("usage")) {
            resp.prompt_tokens = j["usage"].value("prompt_tokens", 0);
            resp.completion_tokens = j["usage"].value("completion_tokens", 0);
        }
        resp.backend = Backend::LIVE;
        return resp;
    }

    // Bounds concurrent in-flight requests to max_concurrent_requests.
    struct SlotGuard {
        LiveClient& c;
        explicit SlotGuard(LiveClient& client) : c(client) {
            std::unique_lock lk(c.mu_);
            c.cv_.wait(lk, [&] { return c.in_flight_ < c.in_flight_limit_; });
            ++c.in_flight_;
        }
        ~SlotGuard() {
            {
                std::lock_guard lk(c.mu_);
                --c.in_flight_;
            }
            c.cv_.notify_one();
        }
    };

    EndpointConfig cfg_;
    std::mutex mu_;
    std::condition_variable cv_;
    int in_flight_ = 0;
    int in_flight_limit_ = 1;
};

class MockClient : public ChatClient {
public:
    explicit MockClient(const std::string& rules_path) {
        std::ifstream in(rules_path);
        if (!in) throw std::runtime_error("cannot open mock rules file: " + rules_path);
        json j = json::parse(in);
        for (const auto& r : j.value("rules", json::array())) {
            rules_.push_back({r.value("kind", ""), r.value("contains", ""),
                              r.value("response", "")});
        }
        default_response_ = j.value("default_response", "");
    }

    ChatResponse complete(const ChatRequest& req) override {
        ++stats_.llm_calls;
        ChatResponse resp;
        resp.backend = Backend::MOCK;
        resp.text = default_response_;
        for (const auto& rule : rules_) {
            if (!rule.kind.empty() && rule.kind != req.kind) continue;
            if (!rule.contains.empty() &&
                req.user_prompt.find(rule.contains) == std::string::npos)
                continue;
            resp.text = rule.response;
            break;
        }
        return resp;
    }

private:
    struct Rule {
        std::string kind;
        std::string contains;
        std::string response;
    };
    std::vector<Rule> rules_;
    std::string default_response_;
};

class CachedClient : public ChatClient {
public:
    CachedClient(std::unique_ptr<ChatClient> inner, std::string dir)
        : inner_(std::move(inner)), dir_(std::move(dir)) {}

    ChatResponse complete(const ChatRequest& req) override {
        std::string key = cache_key(req);
        fs::path path = fs::path(dir_) / key.substr(0, 2) / (key + ".json");

        if (fs::exists(path)) {
            std::ifstream in(path);
            json j = json::parse(in);
            ChatResponse resp;
            resp.text = j["response"]["text"];
            resp.prompt_tokens = j["response"].value("prompt_tokens", 0);
            resp.completion_tokens = j["response"].value("completion_tokens", 0);
            resp.backend = Backend::CACHE;
            ++stats_.cache_hits;
            return resp;
        }

        if (!inner_) {
            throw LlmError(LlmErrorKind::Transport,
                           "cache miss with no upstream backend (key " + key + ")");
        }
        ChatResponse resp = inner_->complete(req);
        ++stats_.llm_calls;

        json record = {
            {"request",
             {{"model", req.model},
              {"system_prompt", req.system_prompt},
              {"user_prompt", req.user_prompt},
              {"temperature", req.temperature},
              {"max_tokens", req.max_tokens}}},
            {"response",
             {{"text", resp.text},
              {"prompt_tokens", resp.prompt_tokens},
              {"completion_tokens", resp.completion_tokens}}},
        };
        fs::create_directories(path.parent_path());
        fs::path tmp = path;
        tmp += ".tmp." + std::to_string(
                   std::hash<std::thread::id>{}(std::this_thread::get_id()));
        {
            std::ofstream out(tmp);
            out << record.dump(2) << '\n';
        }
        fs::rename(tmp, path);  // atomic publish
        return resp;
    }

private:
    std::unique_ptr<ChatClient> inner_;
    std::string dir_;
};

}  // namespace

std::unique_ptr<ChatClient> make_live_client(const EndpointConfig& cfg) {
    return std::make_unique<LiveClient>(cfg);
}

std::unique_ptr<ChatClient> make_mock_client(const std::string& rules_path) {
    return std::make_unique<MockClient>(rules_path);
}

std::unique_ptr<ChatClient> make_cached_client(std::unique_ptr<ChatClient> inner,
                                               const std::string& cache_dir) {
    return std::make_unique<CachedClient>(std::move(inner), cache_dir);
}

}  // namespace norm
