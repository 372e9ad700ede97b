#include "wayfarer/model_gateway.hpp"

#include <spdlog/spdlog.h>

#include <fstream>

namespace wayfarer {

namespace {

void replace_all(std::string& s, std::string_view from, std::string_view to) {
    for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size()) {
        s.replace(pos, from.size(), to);
    }
}

std::shared_ptr<ModelBackend> make_backend(const BackendSpec& spec, ModelRole role) {
    if (spec.kind == "scripted") {
        if (!spec.script.empty()) return ScriptedBackend::from_file(spec.script);
        return ScriptedBackend::from_json(spec.inline_script, "scripted:" + std::string(to_string(role)));
    }
    if (spec.kind == "http") return std::make_shared<HttpBackend>(spec.http);
    throw ModelError(ModelErrorKind::Config, "unknown backend kind '" + spec.kind + "'");
}

}  // namespace

std::string_view to_string(ModelRole role) {
    switch (role) {
        case ModelRole::action: return "action";
        case ModelRole::planner: return "planner";
        case ModelRole::checklist: return "checklist";
        case ModelRole::summarizer: return "summarizer";
    }
    return "unknown";
}

std::optional<ModelRole> model_role_from_string(std::string_view name) {
    for (auto r : kAllRoles) {
        if (to_string(r) == name) return r;
    }
    return std::nullopt;
}

std::string_view to_string(ModelErrorKind kind) {
    switch (kind) {
        case ModelErrorKind::BackendUnavailable: return "BackendUnavailable";
        case ModelErrorKind::ScriptExhausted: return "ScriptExhausted";
        case ModelErrorKind::Oversize: return "Oversize";
        case ModelErrorKind::Config: return "Config";
    }
    return "Unknown";
}

// ---- scripted ----

ScriptedBackend::ScriptedBackend(std::vector<ScriptEntry> entries, std::string label)
    : entries_(std::move(entries)), consumed_(entries_.size(), false), label_(std::move(label)) {}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_json(const Json& script, std::string label) {
    if (!script.is_array()) throw ModelError(ModelErrorKind::Config, "script must be a JSON array");
    std::vector<ScriptEntry> entries;
    for (const auto& item : script) {
        ScriptEntry e;
        if (item.contains("match")) {
            const auto& m = item["match"];
            if (m.is_string()) {
                e.match.push_back(m.get<std::string>());
            } else {
                e.match = m.get<std::vector<std::string>>();
            }
        }
        const auto& r = item.at("response");
        e.response = r.is_string() ? r.get<std::string>() : r.dump();
        e.repeat = item.value("repeat", false);
        entries.push_back(std::move(e));
    }
    return std::make_shared<ScriptedBackend>(std::move(entries), std::move(label));
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ModelError(ModelErrorKind::Config, "cannot open script " + path.string());
    Json j = Json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ModelError(ModelErrorKind::Config, "script is not valid JSON: " + path.string());
    return from_json(j, "scripted:" + path.filename().string());
}

ModelResponse ScriptedBackend::complete(const ModelRequest& request) {
    std::lock_guard lock(mutex_);
    const std::string haystack = request.system + "\n" + request.user + "\n" + request.observation;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (consumed_[i]) continue;
        const auto& e = entries_[i];
        bool all = true;
        for (const auto& needle : e.match) {
            if (haystack.find(needle) == std::string::npos) {
                all = false;
                break;
            }
        }
        if (!all) continue;
        if (!e.repeat) consumed_[i] = true;
        ModelResponse out;
        out.text = e.response;
        replace_all(out.text, "{{user}}", request.user);
        replace_all(out.text, "{{observation}}", request.observation);
        out.usage.prompt_tokens = static_cast<long>(haystack.size() / 4);
        out.usage.completion_tokens = static_cast<long>(out.text.size() / 4);
        return out;
    }
    throw ModelError(ModelErrorKind::ScriptExhausted, label_ + ": no script entry matches the request");
}

std::size_t ScriptedBackend::remaining() const {
    std::lock_guard lock(mutex_);
    std::size_t n = 0;
    for (std::size_t i = 0; i < entries_.size(); ++i) n += consumed_[i] ? 0 : 1;
    return n;
}

// ---- configuration ----

ModelsConfig ModelsConfig::from_json(const Json& j, const std::filesystem::path& base_dir) {
    ModelsConfig config;
    const auto& roles = j.at("roles");
    for (auto it = roles.begin(); it != roles.end(); ++it) {
        auto role = model_role_from_string(it.key());
        if (!role) throw ModelError(ModelErrorKind::Config, "unknown model role '" + it.key() + "'");
        const auto& r = it.value();
        BackendSpec spec;
        spec.kind = r.value("kind", std::string("scripted"));
        if (spec.kind == "scripted") {
            if (r.contains("script") && r["script"].is_string()) {
                std::filesystem::path p = r["script"].get<std::string>();
                spec.script = p.is_absolute() ? p : base_dir / p;
            } else if (r.contains("script")) {
                spec.inline_script = r["script"];
            } else {
                spec.inline_script = Json::array();
            }
        } else {
            spec.http.adapter = r.value("adapter", std::string("openai"));
            spec.http.endpoint = r.value("endpoint", std::string{});
            spec.http.model = r.value("model", std::string{});
            spec.http.credential_env = r.value("credential_env", std::string{});
            spec.http.max_tokens = r.value("max_tokens", 1024);
            spec.http.timeout_seconds = r.value("timeout_seconds", 60);
        }
        config.roles[*role] = std::move(spec);
    }
    return config;
}

ModelsConfig ModelsConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ModelError(ModelErrorKind::Config, "cannot open models config " + path.string());
    Json j = Json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ModelError(ModelErrorKind::Config, "models config is not valid JSON: " + path.string());
    return from_json(j, path.parent_path());
}

// ---- gateway ----

ModelGateway::ModelGateway(std::map<ModelRole, std::shared_ptr<ModelBackend>> bindings)
    : bindings_(std::move(bindings)) {
    for (auto it = bindings_.begin(); it != bindings_.end();) {
        it = it->second ? std::next(it) : bindings_.erase(it);
    }
    if (!bindings_.count(ModelRole::summarizer) && bindings_.count(ModelRole::checklist)) {
        bindings_[ModelRole::summarizer] = bindings_[ModelRole::checklist];
    }
}

std::shared_ptr<ModelGateway> ModelGateway::from_config(const ModelsConfig& config) {
    std::map<ModelRole, std::shared_ptr<ModelBackend>> bindings;
    for (const auto& [role, spec] : config.roles) bindings[role] = make_backend(spec, role);
    return std::make_shared<ModelGateway>(std::move(bindings));
}

void ModelGateway::require(std::initializer_list<ModelRole> roles) const {
    for (auto r : roles) {
        if (!bound(r)) throw ModelError(ModelErrorKind::Config, "model role '" + std::string(to_string(r)) + "' is not bound");
    }
}

bool ModelGateway::bound(ModelRole role) const { return bindings_.count(role) != 0; }

ModelResponse ModelGateway::complete(ModelRole role, const ModelRequest& request) {
    auto it = bindings_.find(role);
    if (it == bindings_.end())
        throw ModelError(ModelErrorKind::Config, "model role '" + std::string(to_string(role)) + "' is not bound");
    counters_[static_cast<std::size_t>(role)].fetch_add(1);
    auto start = std::chrono::steady_clock::now();
    auto response = it->second->complete(request);
    response.latency =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
    spdlog::debug("model[{}] {} chars -> {} chars", to_string(role), request.user.size(), response.text.size());
    return response;
}

long ModelGateway::total_calls() const {
    long n = 0;
    for (const auto& c : counters_) n += c.load();
    return n;
}

std::string ModelGateway::describe(ModelRole role) const {
    auto it = bindings_.find(role);
    return it == bindings_.end() ? "unbound" : it->second->describe();
}

}  // namespace wayfarer
