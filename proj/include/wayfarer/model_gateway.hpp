#pragma once

#include "wayfarer/domain.hpp"

#include <array>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace wayfarer {

enum class ModelRole { action, planner, checklist, summarizer };
inline constexpr std::array<ModelRole, 4> kAllRoles = {ModelRole::action, ModelRole::planner, ModelRole::checklist,
                                                      ModelRole::summarizer};
std::string_view to_string(ModelRole role);
std::optional<ModelRole> model_role_from_string(std::string_view name);

struct ModelRequest {
    std::string system;
    std::string user;
    std::vector<RasterHandle> images;
    // Plain-text stand-in for what the screenshot shows. Network backends ignore
    // it; scripted backends may match on it.
    std::string observation;
    int max_tokens = 0;  // 0 = backend default
};

struct TokenUsage {
    long prompt_tokens = 0;
    long completion_tokens = 0;
};

struct ModelResponse {
    std::string text;
    TokenUsage usage;
    std::chrono::milliseconds latency{0};
};

enum class ModelErrorKind { BackendUnavailable, ScriptExhausted, Oversize, Config };
std::string_view to_string(ModelErrorKind kind);

class ModelError : public std::runtime_error {
public:
    ModelError(ModelErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}
    ModelErrorKind kind() const { return kind_; }

private:
    ModelErrorKind kind_;
};

class ModelBackend {
public:
    virtual ~ModelBackend() = default;
    virtual ModelResponse complete(const ModelRequest& request) = 0;
    virtual std::string describe() const = 0;
};

struct ScriptEntry {
    std::vector<std::string> match;  // all substrings must occur in the request
    std::string response;
    bool repeat = false;             // reusable entries are never consumed
};

// Deterministic backend replaying canned responses.
//
// A request is answered by the first unconsumed entry, in declaration order,
// whose substrings all occur in system + user + observation text. Entries are
// consumed on use unless marked `repeat`. The placeholders {{user}} and
// {{observation}} in a response are replaced by the request's fields.
class ScriptedBackend final : public ModelBackend {
public:
    explicit ScriptedBackend(std::vector<ScriptEntry> entries, std::string label = "scripted");

    // Script file: JSON array of {"match": [substrings], "response": string, "repeat"?: bool}.
    static std::shared_ptr<ScriptedBackend> from_file(const std::filesystem::path& path);
    static std::shared_ptr<ScriptedBackend> from_json(const Json& script, std::string label = "scripted");

    ModelResponse complete(const ModelRequest& request) override;
    std::string describe() const override { return label_; }

    std::size_t remaining() const;

private:
    std::vector<ScriptEntry> entries_;
    std::vector<bool> consumed_;
    std::string label_;
    mutable std::mutex mutex_;
};

struct HttpBackendConfig {
    std::string adapter = "openai";  // "openai" (chat completions) or "anthropic" (messages)
    std::string endpoint;            // full URL of the completion endpoint
    std::string model;
    std::string credential_env;      // environment variable holding the API key
    int max_tokens = 1024;
    int timeout_seconds = 60;
    std::size_t max_request_bytes = 20u << 20;
};

// Provider-neutral chat backend over HTTP(S). One retry on transient failure
// (connection error, 429, or 5xx).
class HttpBackend final : public ModelBackend {
public:
    explicit HttpBackend(HttpBackendConfig config);
    ModelResponse complete(const ModelRequest& request) override;
    std::string describe() const override;

    // Request body as sent on the wire; exposed for adapter tests.
    Json build_body(const ModelRequest& request) const;
    ModelResponse parse_body(const Json& body) const;

private:
    HttpBackendConfig config_;
    std::string api_key_;
};

struct BackendSpec {
    std::string kind;  // "scripted" | "http"
    std::filesystem::path script;
    Json inline_script;  // used when `script` is empty
    HttpBackendConfig http;
};

// Role bindings as written in a models configuration file:
// {"roles": {"action": {"kind": "scripted", "script": "..."}, "planner": {...}, ...}}
// Relative script paths resolve against the file's directory.
struct ModelsConfig {
    std::map<ModelRole, BackendSpec> roles;

    static ModelsConfig from_json(const Json& j, const std::filesystem::path& base_dir);
    static ModelsConfig load(const std::filesystem::path& path);
};

class ModelGateway {
public:
    // The summarizer role falls back to the checklist binding when unbound.
    explicit ModelGateway(std::map<ModelRole, std::shared_ptr<ModelBackend>> bindings);
    // Builds fresh backends (and fresh script cursors) for one session.
    static std::shared_ptr<ModelGateway> from_config(const ModelsConfig& config);

    // Throws ModelError(Config) naming the first unbound role.
    void require(std::initializer_list<ModelRole> roles) const;
    bool bound(ModelRole role) const;

    // Counts every invocation, including ones that fail.
    ModelResponse complete(ModelRole role, const ModelRequest& request);

    long calls(ModelRole role) const { return counters_[static_cast<std::size_t>(role)].load(); }
    long total_calls() const;
    std::string describe(ModelRole role) const;

private:
    std::map<ModelRole, std::shared_ptr<ModelBackend>> bindings_;
    std::array<std::atomic<long>, 4> counters_{};
};

}  // namespace wayfarer
