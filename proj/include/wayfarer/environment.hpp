#pragma once

// The world the agent acts in. Implementations: SimulatedSite (declarative site
// packs, deterministic) and BrowserEnvironment (remote-debugging protocol).

#include "wayfarer/domain.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace wayfarer {

enum class EnvOpKind {
    click_at,
    click_element,
    hover_at,
    focus_element,
    key_press,
    type_text,
    set_value,
    scroll,
    navigate,
    go_back,
    go_forward,
    new_tab,
    close_tab,
    wait,
};
std::string_view to_string(EnvOpKind kind);
std::optional<EnvOpKind> env_op_kind_from_string(std::string_view name);

// Key chord understood by both environments for "select the whole field".
inline constexpr std::string_view kSelectAllChord = "Control+KeyA";

struct EnvOp {
    EnvOpKind kind = EnvOpKind::wait;
    std::optional<Point> point;  // normalized; click_at, hover_at, optional for scroll
    std::string element;         // element key; click_element, focus_element, set_value
    std::string text;            // key code, typed text, value, url, or scroll direction
    double seconds = 0;          // wait

    static EnvOp click_at(Point p) { return {EnvOpKind::click_at, p, {}, {}, 0}; }
    static EnvOp click_element(std::string key) { return {EnvOpKind::click_element, std::nullopt, std::move(key), {}, 0}; }
    static EnvOp hover_at(Point p) { return {EnvOpKind::hover_at, p, {}, {}, 0}; }
    static EnvOp focus_element(std::string key) { return {EnvOpKind::focus_element, std::nullopt, std::move(key), {}, 0}; }
    static EnvOp key(std::string code) { return {EnvOpKind::key_press, std::nullopt, {}, std::move(code), 0}; }
    static EnvOp type(std::string text) { return {EnvOpKind::type_text, std::nullopt, {}, std::move(text), 0}; }
    static EnvOp set_value(std::string key, std::string value) {
        return {EnvOpKind::set_value, std::nullopt, std::move(key), std::move(value), 0};
    }
    // direction: up | down | top | bottom
    static EnvOp scroll(std::string direction, std::optional<Point> at = std::nullopt) {
        return {EnvOpKind::scroll, at, {}, std::move(direction), 0};
    }
    static EnvOp navigate(std::string url) { return {EnvOpKind::navigate, std::nullopt, {}, std::move(url), 0}; }
    static EnvOp simple(EnvOpKind kind) { return {kind, std::nullopt, {}, {}, 0}; }
    static EnvOp wait(double seconds) { return {EnvOpKind::wait, std::nullopt, {}, {}, seconds}; }

    friend bool operator==(const EnvOp&, const EnvOp&) = default;
};

Json to_json(const EnvOp& op);
EnvOp env_op_from_json(const Json& j);

struct Capabilities {
    bool raster_screenshots = false;
    bool script_level_select = false;
};

class Environment {
public:
    virtual ~Environment() = default;

    virtual Capabilities capabilities() const = 0;
    // Complete snapshot: every channel populated or listed as unavailable.
    virtual PageSnapshot snapshot() = 0;
    // Executes and logs one operation. Unmatched operations are legal no-ops.
    std::optional<ExecError> apply(const EnvOp& op);
    // Current value of an element, read back from the page.
    virtual std::optional<std::string> read_value(const std::string& key) = 0;
    // Infrastructure blocking (bot walls and the like); never true in simulation.
    virtual bool blocked() { return false; }

    const std::vector<EnvOp>& op_log() const { return log_; }
    void clear_op_log() { log_.clear(); }

protected:
    virtual std::optional<ExecError> execute(const EnvOp& op) = 0;

private:
    std::vector<EnvOp> log_;
};

// ---- site packs ----

class PackInvalid : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ModalDef {
    std::string key;
    std::string text;
    Rect bbox{250, 250, 750, 750};
    std::vector<ElementRecord> elements;
};

struct PageDef {
    std::string id;
    std::string url;
    bool initial = false;
    std::string text;
    std::vector<ElementRecord> elements;  // later entries are on top for hit-testing
    std::map<std::string, ModalDef> modals;
    int max_scroll = 0;  // normalized units; 0 = page fits the viewport
};

// Which operations a transition reacts to. Unset fields match anything.
struct TransitionMatch {
    std::string op;                          // click | hover | key | type | set_value | scroll | navigate
    std::optional<std::string> element;      // resolved target (click/hover/set_value) or focused element (key/type)
    std::optional<std::string> code;         // key
    std::optional<std::string> value;        // set_value: exact value
    std::optional<std::string> value_contains;  // key/type: focused field contains this (case-insensitive)
    std::optional<std::string> direction;    // scroll
    std::optional<std::string> url;          // navigate
    std::optional<std::string> modal;        // required open modal key ("" = none open)
};

struct ElementMutation {
    std::string key;
    std::optional<std::string> label;
    std::optional<std::string> value;
    std::optional<bool> enabled;
};

struct TransitionEffect {
    std::optional<std::string> to_page;
    std::optional<std::string> open_modal;
    bool close_modal = false;
    std::optional<std::string> set_text;
    std::vector<ElementMutation> mutations;
    std::vector<ElementRecord> add_elements;
    std::vector<std::string> remove_elements;
};

struct Transition {
    std::string from;
    TransitionMatch match;
    TransitionEffect effect;
    int delay_ms = 0;  // accepted for documentation; applied synchronously
};

struct SitePack {
    std::string site_id;
    int viewport_width = 1280;
    int viewport_height = 800;
    bool raster = true;
    std::map<std::string, PageDef> pages;
    std::vector<Transition> transitions;
    std::optional<Task> task;        // default task for `run --pack`
    std::optional<std::filesystem::path> models;  // default models config, resolved against the pack file
    std::optional<std::filesystem::path> corpus;  // default knowledge corpus directory

    // Throws PackInvalid naming the first problem.
    static SitePack from_json(const Json& j, const std::filesystem::path& base_dir = {});
    static SitePack load(const std::filesystem::path& path);
    void validate() const;
    const PageDef& initial_page() const;
};

class SimulatedSite final : public Environment {
public:
    explicit SimulatedSite(SitePack pack);

    Capabilities capabilities() const override { return {pack_.raster, true}; }
    PageSnapshot snapshot() override;
    std::optional<std::string> read_value(const std::string& key) override;

    const SitePack& pack() const { return pack_; }
    const std::string& current_page() const { return tabs_.back().page.page.id; }

protected:
    std::optional<ExecError> execute(const EnvOp& op) override;

private:
    struct PageState {
        PageDef page;
        std::optional<std::string> modal;
        std::optional<std::string> focused;
        bool select_all = false;
        Point scroll;
    };
    struct Tab {
        PageState page;
        std::vector<PageState> back;
        std::vector<PageState> forward;
    };

    PageState fresh(const std::string& page_id) const;
    PageState& state() { return tabs_.back().page; }
    const PageState& state() const { return tabs_.back().page; }
    std::vector<const ElementRecord*> live_elements() const;
    ElementRecord* find_mutable(const std::string& key);
    const ElementRecord* hit_test(Point p) const;
    bool reachable(const std::string& key) const;
    void fire_transitions(const std::string& op, const std::optional<std::string>& element, const EnvOp& raw);
    void apply_effect(const TransitionEffect& effect);
    RasterHandle render() const;

    SitePack pack_;
    std::vector<Tab> tabs_;
};

}  // namespace wayfarer
