#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace forge::backend {

enum class Role { generator, target, judge };

std::string_view role_name(Role role);
Role parse_role(std::string_view name);

struct PromptRequest {
    Role role = Role::generator;
    std::string system_prompt;
    std::string user_prompt;
    double temperature = 0.7;
    int max_tokens = 1024;
    std::optional<std::int64_t> seed;

    // Throws PreconditionViolation on an empty user prompt, a temperature
    // outside [0, 1] or a non-positive token budget.
    void validate() const;
};

struct CompletionText {
    std::string text;
    std::string backend_id;
    bool cached = false;
};

struct BackendConfig {
    std::string endpoint_url;
    std::string api_key_env;
    std::string model_name = "mock";
    std::size_t max_concurrency = 4;
    int retry_limit = 3;
    std::filesystem::path cache_dir;  // empty: in-memory cache only
    std::chrono::milliseconds initial_backoff{1000};
    std::chrono::milliseconds max_backoff{30000};

    void validate() const;
};

// Content address of a request: lowercase hex SHA-256 over the canonical JSON
// array [role, system_prompt, user_prompt, temperature, seed|null, model_name].
std::string request_key(const PromptRequest& request, std::string_view model_name);

// Raised by transports for failures worth retrying (timeouts, 429, 5xx).
class TransientFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Transport {
public:
    virtual ~Transport() = default;
    virtual std::string send(const PromptRequest& request, const BackendConfig& config) = 0;
    virtual std::string id() const = 0;
};

// OpenAI-compatible POST {endpoint_url}/chat/completions.
class HttpTransport : public Transport {
public:
    std::string send(const PromptRequest& request, const BackendConfig& config) override;
    std::string id() const override { return "http"; }
};

// Optional programmatic fallback consulted when the script has no entry.
using Responder = std::function<std::optional<std::string>(const PromptRequest&, std::string_view key)>;

struct MockRule {
    std::optional<Role> role;
    std::string contains;  // substring of the user prompt; empty matches all
    std::string reply;
};

// Deterministic, network-free transport. Lookup order: exact request key,
// responder, rules (first match). No hit raises BackendUnavailable.
class MockTransport : public Transport {
public:
    explicit MockTransport(std::map<std::string, std::string> script = {}, Responder responder = {},
                           std::vector<MockRule> rules = {});

    // {"responses": {key: text}, "rules": [{"role","contains","reply"}]}
    static std::shared_ptr<MockTransport> from_file(const std::filesystem::path& path);

    std::string send(const PromptRequest& request, const BackendConfig& config) override;
    std::string id() const override { return "mock"; }

    void set_latency(std::chrono::milliseconds latency) { latency_ = latency; }

    std::size_t calls() const { return calls_.load(); }
    std::size_t max_in_flight() const { return max_in_flight_.load(); }
    std::vector<PromptRequest> captured() const;

private:
    std::map<std::string, std::string> script_;
    Responder responder_;
    std::vector<MockRule> rules_;
    std::chrono::milliseconds latency_{0};
    std::atomic<std::size_t> calls_{0};
    std::atomic<std::size_t> in_flight_{0};
    std::atomic<std::size_t> max_in_flight_{0};
    mutable std::mutex capture_mutex_;
    std::vector<PromptRequest> captured_;
};

// Response cache: concurrent reads, serialized writes. With a directory, each
// entry is also persisted as <dir>/<key> holding the raw completion text.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir = {});

    std::optional<std::string> get(const std::string& key) const;
    void put(const std::string& key, const std::string& text);

private:
    std::filesystem::path dir_;
    mutable std::shared_mutex mutex_;
    mutable std::unordered_map<std::string, std::string> memory_;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

class Backend {
public:
    Backend(BackendConfig config, std::shared_ptr<Transport> transport, Sleeper sleeper = {});

    // Cache lookup, then up to 1 + retry_limit transport attempts with
    // exponential backoff (initial, doubling, capped). Blank text raises
    // EmptyCompletion; exhausted retries raise BackendUnavailable.
    CompletionText complete(const PromptRequest& request);

    const BackendConfig& config() const { return config_; }
    std::string id() const;

private:
    class Slot;

    BackendConfig config_;
    std::shared_ptr<Transport> transport_;
    Sleeper sleeper_;
    ResponseCache cache_;
    std::mutex slots_mutex_;
    std::condition_variable slots_cv_;
    std::size_t in_flight_ = 0;
};

// Convenience for tests and dry runs: a Backend over a MockTransport.
std::shared_ptr<Backend> mock_backend(std::map<std::string, std::string> script, Responder responder = {},
                                      BackendConfig config = {});

// The three model roles used by the pipeline. Roles may share one Backend.
struct BackendSet {
    std::shared_ptr<Backend> generator;
    std::shared_ptr<Backend> target;
    std::shared_ptr<Backend> judge;

    Backend& for_role(Role role) const;
};

}  // namespace forge::backend
