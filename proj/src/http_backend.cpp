#include <httplib.h>

#include "wayfarer/model_gateway.hpp"

#include <spdlog/spdlog.h>

#include <cstdlib>

namespace wayfarer {

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_endpoint(const std::string& url) {
    auto scheme = url.find("://");
    if (scheme == std::string::npos) throw ModelError(ModelErrorKind::Config, "endpoint is not a URL: " + url);
    auto slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) return {url, "/"};
    return {url.substr(0, slash), url.substr(slash)};
}

bool transient_status(int status) { return status == 429 || status >= 500; }

std::string image_data_url(const Raster& raster) {
    auto png = encode_png(raster);
    return "data:image/png;base64," + base64_encode(png);
}

}  // namespace

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) throw ModelError(ModelErrorKind::Config, "http backend needs an endpoint");
    if (config_.adapter != "openai" && config_.adapter != "anthropic")
        throw ModelError(ModelErrorKind::Config, "unknown http adapter '" + config_.adapter + "'");
    split_endpoint(config_.endpoint);
    if (!config_.credential_env.empty()) {
        const char* key = std::getenv(config_.credential_env.c_str());
        if (!key || !*key)
            throw ModelError(ModelErrorKind::Config, "credential variable " + config_.credential_env + " is not set");
        api_key_ = key;
    }
}

std::string HttpBackend::describe() const { return "http:" + config_.adapter + ":" + config_.model; }

Json HttpBackend::build_body(const ModelRequest& request) const {
    int max_tokens = request.max_tokens > 0 ? request.max_tokens : config_.max_tokens;
    if (config_.adapter == "anthropic") {
        Json content = Json::array();
        for (const auto& img : request.images) {
            if (!img) continue;
            content.push_back({{"type", "image"},
                               {"source",
                                {{"type", "base64"}, {"media_type", "image/png"}, {"data", base64_encode(encode_png(*img))}}}});
        }
        content.push_back({{"type", "text"}, {"text", request.user}});
        return Json{{"model", config_.model},
                    {"max_tokens", max_tokens},
                    {"system", request.system},
                    {"messages", Json::array({{{"role", "user"}, {"content", content}}})}};
    }
    Json user_content = Json::array();
    user_content.push_back({{"type", "text"}, {"text", request.user}});
    for (const auto& img : request.images) {
        if (!img) continue;
        user_content.push_back({{"type", "image_url"}, {"image_url", {{"url", image_data_url(*img)}}}});
    }
    return Json{{"model", config_.model},
                {"max_tokens", max_tokens},
                {"messages",
                 Json::array({{{"role", "system"}, {"content", request.system}},
                              {{"role", "user"}, {"content", user_content}}})}};
}

ModelResponse HttpBackend::parse_body(const Json& body) const {
    ModelResponse out;
    if (config_.adapter == "anthropic") {
        for (const auto& block : body.value("content", Json::array())) {
            if (block.value("type", std::string{}) == "text") out.text += block.value("text", std::string{});
        }
        if (body.contains("usage")) {
            out.usage.prompt_tokens = body["usage"].value("input_tokens", 0L);
            out.usage.completion_tokens = body["usage"].value("output_tokens", 0L);
        }
    } else {
        const auto& choices = body.value("choices", Json::array());
        if (!choices.empty()) {
            const auto& content = choices[0].value("message", Json::object()).value("content", Json());
            if (content.is_string()) out.text = content.get<std::string>();
        }
        if (body.contains("usage")) {
            out.usage.prompt_tokens = body["usage"].value("prompt_tokens", 0L);
            out.usage.completion_tokens = body["usage"].value("completion_tokens", 0L);
        }
    }
    if (out.text.empty()) throw ModelError(ModelErrorKind::BackendUnavailable, "response carried no text");
    return out;
}

ModelResponse HttpBackend::complete(const ModelRequest& request) {
    auto payload = build_body(request).dump();
    if (payload.size() > config_.max_request_bytes)
        throw ModelError(ModelErrorKind::Oversize, "request of " + std::to_string(payload.size()) + " bytes");

    auto [origin, path] = split_endpoint(config_.endpoint);
    httplib::Client client(origin);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    client.set_write_timeout(config_.timeout_seconds, 0);

    httplib::Headers headers;
    if (config_.adapter == "anthropic") {
        headers.emplace("anthropic-version", "2023-06-01");
        if (!api_key_.empty()) headers.emplace("x-api-key", api_key_);
    } else if (!api_key_.empty()) {
        headers.emplace("Authorization", "Bearer " + api_key_);
    }

    std::string last_error;
    for (int attempt = 0; attempt < 2; ++attempt) {
        auto res = client.Post(path, headers, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
        } else if (transient_status(res->status)) {
            last_error = "HTTP " + std::to_string(res->status);
        } else if (res->status != 200) {
            throw ModelError(ModelErrorKind::BackendUnavailable,
                             "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
        } else {
            Json body = Json::parse(res->body, nullptr, false);
            if (body.is_discarded()) throw ModelError(ModelErrorKind::BackendUnavailable, "response is not JSON");
            return parse_body(body);
        }
        spdlog::warn("{} attempt {} failed: {}", describe(), attempt + 1, last_error);
    }
    throw ModelError(ModelErrorKind::BackendUnavailable, last_error);
}

}  // namespace wayfarer
