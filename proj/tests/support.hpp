#pragma once

#include "wayfarer/browser.hpp"
#include "wayfarer/grounding.hpp"
#include "wayfarer/session.hpp"

#include <doctest.h>

#include <filesystem>
#include <random>
#include <string>

namespace wayfarer::test {

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(WAYFARER_FIXTURE_DIR) / name; }

inline std::string tool_call(const Json& arguments) {
    return "<tool_call>\n" + Json{{"name", "browser_use"}, {"arguments", arguments}}.dump() + "\n</tool_call>";
}

// Scripted backend from (match, response) pairs; every entry is reusable.
inline std::shared_ptr<ScriptedBackend> repeating(const std::vector<std::pair<std::vector<std::string>, std::string>>& pairs) {
    std::vector<ScriptEntry> entries;
    for (const auto& [match, response] : pairs) entries.push_back({match, response, true});
    return std::make_shared<ScriptedBackend>(std::move(entries));
}

// Backend answering every request with the same text.
inline std::shared_ptr<ScriptedBackend> constant(const std::string& response) { return repeating({{{}, response}}); }

// Returns replies from a queue in order; throws ScriptExhausted after.
class QueueBackend final : public ModelBackend {
public:
    explicit QueueBackend(std::vector<std::string> replies) : replies_(std::move(replies)) {}
    ModelResponse complete(const ModelRequest& request) override {
        requests.push_back(request);
        if (next_ >= replies_.size()) throw ModelError(ModelErrorKind::ScriptExhausted, "queue empty");
        return {replies_[next_++], {}, {}};
    }
    std::string describe() const override { return "queue"; }
    std::vector<ModelRequest> requests;

private:
    std::vector<std::string> replies_;
    std::size_t next_ = 0;
};

inline ElementRecord element(std::string key, ElementRole role, Rect box, std::string label = "") {
    ElementRecord e;
    e.key = std::move(key);
    e.role = role;
    e.bbox = box;
    e.label = label.empty() ? e.key : std::move(label);
    return e;
}

inline Action click(int x, int y, std::string description = "click") {
    Action a;
    a.kind = ActionKind::left_click;
    a.coordinate = Point{x, y};
    a.description = std::move(description);
    return a;
}

inline Action type_action(int x, int y, std::string text, std::string description = "type") {
    Action a;
    a.kind = ActionKind::type;
    a.coordinate = Point{x, y};
    a.text = std::move(text);
    a.description = std::move(description);
    return a;
}

inline Action select_action(int x, int y, std::string option, std::string description = "select") {
    Action a;
    a.kind = ActionKind::select;
    a.coordinate = Point{x, y};
    a.text = std::move(option);
    a.description = std::move(description);
    return a;
}

inline Json element_json(const std::string& key, const std::string& role, std::array<int, 4> box,
                         const std::string& label = "") {
    return Json{{"key", key}, {"role", role}, {"label", label.empty() ? key : label}, {"bbox", box}};
}

// Single-page pack ("home") plus optional extra page objects.
inline Json pack_json(Json elements, Json transitions = Json::array(), Json extra_pages = Json::array()) {
    Json pages = Json::array();
    pages.push_back(Json{{"id", "home"}, {"url", "https://example.test/"}, {"initial", true}, {"text", "Home page"},
                         {"elements", elements}});
    for (const auto& p : extra_pages) pages.push_back(p);
    return Json{{"site_id", "example"}, {"pages", pages}, {"transitions", transitions}};
}

inline SimulatedSite site(const Json& pack) { return SimulatedSite(SitePack::from_json(pack)); }

inline std::vector<Json> env_log(const Environment& env) {
    std::vector<Json> out;
    for (const auto& op : env.op_log()) out.push_back(to_json(op));
    return out;
}

}  // namespace wayfarer::test
