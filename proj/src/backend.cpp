#include "forge/backend.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "forge/error.hpp"
#include "forge/text.hpp"

namespace forge::backend {

using nlohmann::json;

std::string_view role_name(Role role) {
    switch (role) {
        case Role::generator: return "generator";
        case Role::target: return "target";
        case Role::judge: return "judge";
    }
    return "generator";
}

Role parse_role(std::string_view name) {
    if (name == "generator") return Role::generator;
    if (name == "target") return Role::target;
    if (name == "judge") return Role::judge;
    throw Error(ErrorKind::ConfigError, "unknown backend role '" + std::string(name) + "'");
}

void PromptRequest::validate() const {
    if (text::is_blank(user_prompt)) throw Error(ErrorKind::PreconditionViolation, "user prompt is empty");
    if (!(temperature >= 0.0 && temperature <= 1.0))
        throw Error(ErrorKind::PreconditionViolation, "temperature must lie in [0,1]");
    if (max_tokens <= 0) throw Error(ErrorKind::PreconditionViolation, "max_tokens must be positive");
}

void BackendConfig::validate() const {
    if (max_concurrency < 1) throw Error(ErrorKind::ConfigError, "max_concurrency must be >= 1");
    if (retry_limit < 0) throw Error(ErrorKind::ConfigError, "retry_limit must be >= 0");
}

std::string request_key(const PromptRequest& request, std::string_view model_name) {
    json canonical = json::array({role_name(request.role), request.system_prompt, request.user_prompt,
                                  request.temperature, request.seed ? json(*request.seed) : json(nullptr),
                                  model_name});
    return text::sha256_hex(canonical.dump());
}

// ---------------------------------------------------------------------------
// MockTransport

MockTransport::MockTransport(std::map<std::string, std::string> script, Responder responder,
                             std::vector<MockRule> rules)
    : script_(std::move(script)), responder_(std::move(responder)), rules_(std::move(rules)) {}

std::shared_ptr<MockTransport> MockTransport::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::FileUnreadable, "cannot open mock script " + path.string());
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object())
        throw Error(ErrorKind::ConfigError, "mock script is not a JSON object: " + path.string());

    std::map<std::string, std::string> script;
    if (auto it = doc.find("responses"); it != doc.end()) {
        for (auto& [key, value] : it->items()) {
            if (!value.is_string()) throw Error(ErrorKind::ConfigError, "mock response for " + key + " is not a string");
            script.emplace(key, value.get<std::string>());
        }
    }
    std::vector<MockRule> rules;
    if (auto it = doc.find("rules"); it != doc.end()) {
        for (const auto& r : *it) {
            MockRule rule;
            if (r.contains("role")) rule.role = parse_role(r.at("role").get<std::string>());
            rule.contains = r.value("contains", "");
            rule.reply = r.at("reply").get<std::string>();
            rules.push_back(std::move(rule));
        }
    }
    return std::make_shared<MockTransport>(std::move(script), Responder{}, std::move(rules));
}

std::string MockTransport::send(const PromptRequest& request, const BackendConfig& config) {
    ++calls_;
    const auto now = ++in_flight_;
    auto prev = max_in_flight_.load();
    while (now > prev && !max_in_flight_.compare_exchange_weak(prev, now)) {
    }
    struct Leave {
        std::atomic<std::size_t>& n;
        ~Leave() { --n; }
    } leave{in_flight_};
    {
        std::lock_guard lock(capture_mutex_);
        captured_.push_back(request);
    }
    if (latency_.count() > 0) std::this_thread::sleep_for(latency_);

    const auto key = request_key(request, config.model_name);
    if (auto it = script_.find(key); it != script_.end()) return it->second;
    if (responder_) {
        if (auto reply = responder_(request, key)) return *reply;
    }
    for (const auto& rule : rules_) {
        if (rule.role && *rule.role != request.role) continue;
        if (request.user_prompt.find(rule.contains) == std::string::npos) continue;
        return rule.reply;
    }
    throw Error(ErrorKind::BackendUnavailable, "mock has no entry for request " + key);
}

std::vector<PromptRequest> MockTransport::captured() const {
    std::lock_guard lock(capture_mutex_);
    return captured_;
}

// ---------------------------------------------------------------------------
// ResponseCache

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    if (!dir_.empty()) std::filesystem::create_directories(dir_);
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
    {
        std::shared_lock lock(mutex_);
        if (auto it = memory_.find(key); it != memory_.end()) return it->second;
    }
    if (dir_.empty()) return std::nullopt;
    std::ifstream in(dir_ / key, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    std::unique_lock lock(mutex_);
    return memory_.emplace(key, buf.str()).first->second;
}

void ResponseCache::put(const std::string& key, const std::string& text) {
    std::unique_lock lock(mutex_);
    memory_[key] = text;
    if (dir_.empty()) return;
    const auto final_path = dir_ / key;
    const auto tmp_path = dir_ / (key + ".tmp");
    {
        std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::FileUnwritable, "cannot write cache entry " + tmp_path.string());
        out << text;
    }
    std::filesystem::rename(tmp_path, final_path);
}

// ---------------------------------------------------------------------------
// Backend

class Backend::Slot {
public:
    explicit Slot(Backend& b) : b_(b) {
        std::unique_lock lock(b_.slots_mutex_);
        b_.slots_cv_.wait(lock, [&] { return b_.in_flight_ < b_.config_.max_concurrency; });
        ++b_.in_flight_;
    }
    ~Slot() {
        {
            std::lock_guard lock(b_.slots_mutex_);
            --b_.in_flight_;
        }
        b_.slots_cv_.notify_one();
    }
    Slot(const Slot&) = delete;
    Slot& operator=(const Slot&) = delete;

private:
    Backend& b_;
};

Backend::Backend(BackendConfig config, std::shared_ptr<Transport> transport, Sleeper sleeper)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      sleeper_(sleeper ? std::move(sleeper) : Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })),
      cache_(config_.cache_dir) {
    config_.validate();
    if (!transport_) throw Error(ErrorKind::ConfigError, "backend has no transport");
}

std::string Backend::id() const { return config_.model_name + "@" + transport_->id(); }

CompletionText Backend::complete(const PromptRequest& request) {
    request.validate();
    const auto key = request_key(request, config_.model_name);
    if (auto hit = cache_.get(key)) return {*hit, id(), true};

    auto delay = config_.initial_backoff;
    std::string last_error;
    for (int attempt = 0; attempt <= config_.retry_limit; ++attempt) {
        if (attempt > 0) {
            sleeper_(delay);
            delay = std::min(delay * 2, config_.max_backoff);
        }
        std::string reply;
        try {
            Slot slot(*this);
            reply = transport_->send(request, config_);
        } catch (const TransientFailure& e) {
            last_error = e.what();
            continue;
        }
        if (text::is_blank(reply))
            throw Error(ErrorKind::EmptyCompletion, "backend " + id() + " returned blank text");
        cache_.put(key, reply);
        return {std::move(reply), id(), false};
    }
    throw Error(ErrorKind::BackendUnavailable, "backend " + id() + " failed after " +
                                                   std::to_string(config_.retry_limit + 1) + " attempts: " + last_error);
}

std::shared_ptr<Backend> mock_backend(std::map<std::string, std::string> script, Responder responder,
                                      BackendConfig config) {
    return std::make_shared<Backend>(std::move(config),
                                     std::make_shared<MockTransport>(std::move(script), std::move(responder)));
}

Backend& BackendSet::for_role(Role role) const {
    const std::shared_ptr<Backend>* slot = nullptr;
    switch (role) {
        case Role::generator: slot = &generator; break;
        case Role::target: slot = &target; break;
        case Role::judge: slot = &judge; break;
    }
    if (!slot || !*slot) throw Error(ErrorKind::ConfigError, "no backend configured for role " + std::string(role_name(role)));
    return **slot;
}

}  // namespace forge::backend
