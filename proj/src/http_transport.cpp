#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>

#include <json.hpp>

#include "forge/backend.hpp"
#include "forge/error.hpp"

namespace forge::backend {

namespace {

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string prefix;  // path prefix without trailing slash
};

Endpoint split_endpoint(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw Error(ErrorKind::ConfigError, "endpoint_url lacks a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    Endpoint ep;
    ep.origin = url.substr(0, path_start);
    ep.prefix = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!ep.prefix.empty() && ep.prefix.back() == '/') ep.prefix.pop_back();
    return ep;
}

bool is_transient_status(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

std::string HttpTransport::send(const PromptRequest& request, const BackendConfig& config) {
    if (config.endpoint_url.empty()) throw Error(ErrorKind::ConfigError, "endpoint_url is not set");
    const auto ep = split_endpoint(config.endpoint_url);

    nlohmann::json messages = nlohmann::json::array();
    if (!request.system_prompt.empty()) messages.push_back({{"role", "system"}, {"content", request.system_prompt}});
    messages.push_back({{"role", "user"}, {"content", request.user_prompt}});
    nlohmann::json body = {{"model", config.model_name},
                           {"messages", messages},
                           {"temperature", request.temperature},
                           {"max_tokens", request.max_tokens}};
    if (request.seed) body["seed"] = *request.seed;

    httplib::Headers headers;
    if (!config.api_key_env.empty()) {
        const char* key = std::getenv(config.api_key_env.c_str());
        if (!key) throw Error(ErrorKind::ConfigError, "environment variable " + config.api_key_env + " is not set");
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    httplib::Client client(ep.origin);
    client.set_connection_timeout(30);
    client.set_read_timeout(300);
    auto res = client.Post(ep.prefix + "/chat/completions", headers, body.dump(), "application/json");
    if (!res) throw TransientFailure("request to " + config.endpoint_url + " failed: " + httplib::to_string(res.error()));
    if (is_transient_status(res->status))
        throw TransientFailure("HTTP " + std::to_string(res->status) + " from " + config.endpoint_url);
    if (res->status != 200)
        throw Error(ErrorKind::BackendUnavailable, "HTTP " + std::to_string(res->status) + ": " + res->body);

    auto doc = nlohmann::json::parse(res->body, nullptr, false);
    if (doc.is_discarded()) throw Error(ErrorKind::BackendUnavailable, "response body is not JSON");
    try {
        const auto& content = doc.at("choices").at(0).at("message").at("content");
        return content.is_string() ? content.get<std::string>() : std::string();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::BackendUnavailable, std::string("unexpected response shape: ") + e.what());
    }
}

}  // namespace forge::backend
