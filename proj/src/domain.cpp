#include "wayfarer/domain.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>
#include <stdexcept>

namespace wayfarer {

namespace {

constexpr std::array<std::string_view, 16> kActionNames = {
    "left_click", "hover",      "keyboard",  "type",     "select",  "press_enter", "scroll_up", "scroll_down",
    "scroll_top", "scroll_bottom", "new_tab", "close_tab", "go_back", "go_forward", "wait",      "terminate",
};

constexpr std::array<std::string_view, 9> kRoleNames = {
    "button", "link", "input", "select", "option", "image", "container", "iframe_boundary", "other",
};

constexpr std::array<std::string_view, 6> kChannelNames = {"text", "elements", "focus", "url", "scroll", "modal"};

ValidationError violation(ActionErrorCode code, std::string field, std::string message) {
    return ValidationError{code, std::move(field), std::move(message)};
}

bool in_range(int v) { return v >= 0 && v <= kNormalizedMax; }

}  // namespace

std::string url_host(std::string_view url) {
    auto scheme = url.find("://");
    if (scheme == std::string_view::npos) return {};
    auto rest = url.substr(scheme + 3);
    auto end = rest.find_first_of("/?#");
    auto host = to_lower(rest.substr(0, end));
    if (auto at = host.rfind('@'); at != std::string::npos) host = host.substr(at + 1);
    if (auto colon = host.find(':'); colon != std::string::npos) host = host.substr(0, colon);
    if (host.rfind("www.", 0) == 0) host = host.substr(4);
    return host;
}

bool looks_like_url(std::string_view url) {
    auto scheme = url.find("://");
    if (scheme == std::string_view::npos || scheme == 0) return false;
    for (char c : url.substr(0, scheme)) {
        if (!std::isalpha(static_cast<unsigned char>(c)) && c != '+' && c != '-' && c != '.') return false;
    }
    if (url.find_first_of(" \t\n") != std::string_view::npos) return false;
    return !url_host(url).empty() || url.substr(0, scheme) == "file";
}

void validate_task(const Task& task) {
    if (normalize_whitespace(task.instruction).empty()) throw std::invalid_argument("task instruction is empty");
    if (!looks_like_url(task.target_url))
        throw std::invalid_argument("task target_url is not a URL: '" + task.target_url + "'");
}

std::string_view to_string(ActionKind kind) { return kActionNames[static_cast<std::size_t>(kind)]; }

std::optional<ActionKind> action_kind_from_string(std::string_view name) {
    for (std::size_t i = 0; i < kActionNames.size(); ++i) {
        if (kActionNames[i] == name) return static_cast<ActionKind>(i);
    }
    return std::nullopt;
}

bool is_scroll(ActionKind kind) {
    return kind == ActionKind::scroll_up || kind == ActionKind::scroll_down || kind == ActionKind::scroll_top ||
           kind == ActionKind::scroll_bottom;
}

std::string_view to_string(TerminateStatus status) {
    return status == TerminateStatus::success ? "success" : "failure";
}

std::size_t utf8_length(std::string_view s) {
    std::size_t n = 0;
    for (unsigned char c : s) {
        if ((c & 0xC0) != 0x80) ++n;
    }
    return n;
}

std::string utf8_prefix(std::string_view s, std::size_t max_code_points) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) {
            if (n == max_code_points) return std::string(s.substr(0, i));
            ++n;
        }
    }
    return std::string(s);
}

std::string_view to_string(ActionErrorCode code) {
    switch (code) {
        case ActionErrorCode::NoToolCallTag: return "NoToolCallTag";
        case ActionErrorCode::MalformedJson: return "MalformedJson";
        case ActionErrorCode::WrongFunctionName: return "WrongFunctionName";
        case ActionErrorCode::InvalidArgumentType: return "InvalidArgumentType";
        case ActionErrorCode::UnknownKind: return "UnknownKind";
        case ActionErrorCode::MissingCoordinate: return "MissingCoordinate";
        case ActionErrorCode::CoordinateOutOfRange: return "CoordinateOutOfRange";
        case ActionErrorCode::MissingStatus: return "MissingStatus";
        case ActionErrorCode::MissingTime: return "MissingTime";
        case ActionErrorCode::MissingText: return "MissingText";
        case ActionErrorCode::MissingDescription: return "MissingDescription";
        case ActionErrorCode::FieldTooLong: return "FieldTooLong";
    }
    return "Unknown";
}

Expected<Action, ValidationError> validate_action(const Action& a) {
    if (!is_scroll(a.kind) && !a.coordinate) {
        return violation(ActionErrorCode::MissingCoordinate, "coordinate",
                         std::string(to_string(a.kind)) + " requires 'coordinate'");
    }
    if (a.coordinate && (!in_range(a.coordinate->x) || !in_range(a.coordinate->y))) {
        return violation(ActionErrorCode::CoordinateOutOfRange, "coordinate", "coordinate outside [0,1000]");
    }
    if (a.kind == ActionKind::terminate && !a.status) {
        return violation(ActionErrorCode::MissingStatus, "status", "terminate requires 'status'");
    }
    if (a.kind == ActionKind::wait && (!a.time || !(*a.time >= 0.0))) {
        return violation(ActionErrorCode::MissingTime, "time", "wait requires 'time' >= 0");
    }
    if ((a.kind == ActionKind::type || a.kind == ActionKind::select) && !a.text) {
        return violation(ActionErrorCode::MissingText, "text", std::string(to_string(a.kind)) + " requires 'text'");
    }
    if (a.text && utf8_length(*a.text) > kMaxTextLength) {
        return violation(ActionErrorCode::FieldTooLong, "text", "'text' exceeds 200 characters");
    }
    if (a.code && utf8_length(*a.code) > kMaxCodeLength) {
        return violation(ActionErrorCode::FieldTooLong, "code", "'code' exceeds 50 characters");
    }
    if (a.field && utf8_length(*a.field) > kMaxFieldLength) {
        return violation(ActionErrorCode::FieldTooLong, "field", "'field' exceeds 100 characters");
    }
    if (utf8_length(a.description) > kMaxDescriptionLength) {
        return violation(ActionErrorCode::FieldTooLong, "description", "'description' exceeds 200 characters");
    }
    if (a.description.empty()) {
        return violation(ActionErrorCode::MissingDescription, "description", "'description' is required");
    }
    return a;
}

Json action_to_arguments(const Action& a) {
    Json args = Json::object();
    args["action"] = std::string(to_string(a.kind));
    if (a.coordinate) args["coordinate"] = Json::array({a.coordinate->x, a.coordinate->y});
    if (a.text) args["text"] = *a.text;
    if (a.code) args["code"] = *a.code;
    if (a.clear_first) args["clear_first"] = *a.clear_first;
    if (a.press_enter_after) args["press_enter_after"] = *a.press_enter_after;
    if (a.field) args["field"] = *a.field;
    if (a.time) args["time"] = *a.time;
    if (a.status) args["status"] = std::string(to_string(*a.status));
    args["description"] = a.description;
    return args;
}

std::string describe_action(const Action& a) {
    std::ostringstream out;
    out << to_string(a.kind);
    if (a.coordinate) out << " at [" << a.coordinate->x << "," << a.coordinate->y << "]";
    if (a.text) out << " text=\"" << *a.text << "\"";
    if (a.code) out << " code=" << *a.code;
    if (a.press_enter_after.value_or(false)) out << " +enter";
    if (a.status) out << " status=" << to_string(*a.status);
    if (!a.description.empty()) out << " (" << a.description << ")";
    return out.str();
}

std::string_view to_string(ElementRole role) { return kRoleNames[static_cast<std::size_t>(role)]; }

std::optional<ElementRole> element_role_from_string(std::string_view name) {
    for (std::size_t i = 0; i < kRoleNames.size(); ++i) {
        if (kRoleNames[i] == name) return static_cast<ElementRole>(i);
    }
    return std::nullopt;
}

std::string_view to_string(Channel c) { return kChannelNames[static_cast<std::size_t>(c)]; }

std::optional<Channel> channel_from_string(std::string_view name) {
    for (std::size_t i = 0; i < kChannelNames.size(); ++i) {
        if (kChannelNames[i] == name) return static_cast<Channel>(i);
    }
    return std::nullopt;
}

std::size_t ChannelSet::size() const {
    std::size_t n = 0;
    for (auto c : kAllChannels) n += contains(c) ? 1 : 0;
    return n;
}

std::vector<Channel> ChannelSet::members() const {
    std::vector<Channel> out;
    for (auto c : kAllChannels) {
        if (contains(c)) out.push_back(c);
    }
    return out;
}

const ElementRecord* PageSnapshot::find(std::string_view key) const {
    for (const auto& e : interactive_elements) {
        if (e.key == key) return &e;
    }
    return nullptr;
}

void validate_snapshot(const PageSnapshot& s) {
    std::set<std::string> keys;
    for (const auto& e : s.interactive_elements) {
        if (!keys.insert(e.key).second) throw std::invalid_argument("duplicate element key '" + e.key + "'");
        if (!e.bbox.within_viewport()) throw std::invalid_argument("element '" + e.key + "' bbox outside viewport");
        if ((e.role == ElementRole::select) != !e.options.empty())
            throw std::invalid_argument("element '" + e.key + "': options must be present iff role is select");
    }
}

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::NoStateChange: return "NoStateChange";
        case ErrorCode::ReadbackMismatch: return "ReadbackMismatch";
        case ErrorCode::NoElementNearPoint: return "NoElementNearPoint";
        case ErrorCode::NoInputFound: return "NoInputFound";
        case ErrorCode::AmbiguityUnresolved: return "AmbiguityUnresolved";
        case ErrorCode::OptionNotFound: return "OptionNotFound";
        case ErrorCode::VerificationFailed: return "VerificationFailed";
        case ErrorCode::ElementNotFound: return "ElementNotFound";
        case ErrorCode::EnvironmentError: return "EnvironmentError";
        case ErrorCode::ProtocolError: return "ProtocolError";
        case ErrorCode::Timeout: return "Timeout";
        case ErrorCode::ModelOutputInvalid: return "ModelOutputInvalid";
        case ErrorCode::ModelUnavailable: return "ModelUnavailable";
    }
    return "Unknown";
}

std::string_view to_string(GroundingTier tier) {
    switch (tier) {
        case GroundingTier::coordinate: return "coordinate";
        case GroundingTier::structural: return "structural";
        case GroundingTier::global_search: return "global_search";
        case GroundingTier::script_level: return "script_level";
        case GroundingTier::semantic_search: return "semantic_search";
    }
    return "unknown";
}

// ---- JSON ----

Json to_json(const Point& p) { return Json::array({p.x, p.y}); }
Json to_json(const Rect& r) { return Json::array({r.x0, r.y0, r.x1, r.y1}); }

Json to_json(const Task& t) {
    return Json{{"instruction", t.instruction},
                {"target_url", t.target_url},
                {"task_id", t.task_id},
                {"constraints", t.constraints}};
}

Task task_from_json(const Json& j) {
    Task t;
    t.instruction = j.at("instruction").get<std::string>();
    t.target_url = j.at("target_url").get<std::string>();
    t.task_id = j.value("task_id", std::string{});
    t.constraints = j.value("constraints", std::vector<std::string>{});
    return t;
}

Json to_json(ChannelSet channels) {
    Json out = Json::array();
    for (auto c : channels.members()) out.push_back(std::string(to_string(c)));
    return out;
}

Json to_json(const ElementRecord& e) {
    Json j{{"key", e.key},
           {"role", std::string(to_string(e.role))},
           {"label", e.label},
           {"bbox", to_json(e.bbox)},
           {"enabled", e.enabled}};
    if (e.value) j["value"] = *e.value;
    if (!e.options.empty()) j["options"] = e.options;
    if (!e.frame_path.empty()) j["frame_path"] = e.frame_path;
    if (!e.name.empty()) j["name"] = e.name;
    return j;
}

ElementRecord element_from_json(const Json& j) {
    ElementRecord e;
    e.key = j.at("key").get<std::string>();
    auto role_name = j.value("role", std::string("other"));
    auto role = element_role_from_string(role_name);
    if (!role) throw std::invalid_argument("unknown element role '" + role_name + "'");
    e.role = *role;
    e.label = j.value("label", std::string{});
    const auto& b = j.at("bbox");
    if (!b.is_array() || b.size() != 4) throw std::invalid_argument("bbox must be [x0,y0,x1,y1]");
    e.bbox = Rect{b[0].get<int>(), b[1].get<int>(), b[2].get<int>(), b[3].get<int>()};
    if (j.contains("value") && !j["value"].is_null()) e.value = j["value"].get<std::string>();
    e.options = j.value("options", std::vector<std::string>{});
    e.frame_path = j.value("frame_path", std::vector<std::string>{});
    e.enabled = j.value("enabled", true);
    e.name = j.value("name", std::string{});
    return e;
}

Json to_json(const PageSnapshot& s) {
    Json elements = Json::array();
    for (const auto& e : s.interactive_elements) elements.push_back(to_json(e));
    Json j{{"url", s.url},
           {"visible_text", s.visible_text},
           {"elements", elements},
           {"focused_element", s.focused_element ? Json(*s.focused_element) : Json(nullptr)},
           {"scroll", to_json(s.scroll_position)},
           {"modal_open", s.modal_open},
           {"modal_element", s.modal_element ? Json(*s.modal_element) : Json(nullptr)},
           {"unavailable", to_json(s.unavailable)}};
    if (s.screenshot) j["screenshot"] = Json::array({s.screenshot->width, s.screenshot->height});
    return j;
}

PageSnapshot snapshot_from_json(const Json& j) {
    PageSnapshot s;
    s.url = j.at("url").get<std::string>();
    s.visible_text = j.value("visible_text", std::string{});
    for (const auto& e : j.value("elements", Json::array())) s.interactive_elements.push_back(element_from_json(e));
    if (j.contains("focused_element") && !j["focused_element"].is_null())
        s.focused_element = j["focused_element"].get<std::string>();
    if (j.contains("scroll")) s.scroll_position = Point{j["scroll"][0].get<int>(), j["scroll"][1].get<int>()};
    s.modal_open = j.value("modal_open", false);
    if (j.contains("modal_element") && !j["modal_element"].is_null())
        s.modal_element = j["modal_element"].get<std::string>();
    for (const auto& c : j.value("unavailable", Json::array())) {
        if (auto ch = channel_from_string(c.get<std::string>())) s.unavailable.insert(*ch);
    }
    return s;
}

Json to_json(const Outcome& o) {
    Json j{{"success", o.success}, {"changed_channels", to_json(o.changed_channels)}};
    if (o.error) j["error"] = Json{{"code", std::string(to_string(o.error->code))}, {"message", o.error->message}};
    if (o.readback_mismatch)
        j["readback_mismatch"] = Json{{"expected", o.readback_mismatch->expected}, {"actual", o.readback_mismatch->actual}};
    if (!o.success) j["annotated_screenshot"] = o.annotated_screenshot != nullptr;
    return j;
}

Json to_json(const GroundingAttempt& a) {
    Json target = Json::object();
    if (a.target_point) target["point"] = to_json(*a.target_point);
    if (a.target_element) target["element"] = *a.target_element;
    return Json{{"tier", std::string(to_string(a.tier))},
                {"target", target},
                {"verdict", a.result.success ? "success" : "failure"},
                {"error", a.result.error ? Json(std::string(to_string(a.result.error->code))) : Json(nullptr)},
                {"model_calls", a.model_calls_used}};
}

Json to_json(const StepRecord& r) {
    Json attempts = Json::array();
    for (const auto& a : r.attempts) attempts.push_back(to_json(a));
    return Json{{"type", "step"},
                {"index", r.index},
                {"action", r.action ? action_to_arguments(*r.action) : Json(nullptr)},
                {"outcome", to_json(r.outcome)},
                {"snapshot_before", to_json(r.snapshot_before)},
                {"snapshot_after", to_json(r.snapshot_after)},
                {"attempts", attempts},
                {"model_calls",
                 Json{{"action", r.model_calls.action},
                      {"checklist", r.model_calls.checklist},
                      {"summarizer", r.model_calls.summarizer},
                      {"planner", r.model_calls.planner},
                      {"total", r.model_calls.total()}}},
                {"user_prompt", r.user_prompt},
                {"env_ops", r.env_ops},
                {"warning", r.warning ? Json(*r.warning) : Json(nullptr)}};
}

// ---- text helpers ----

Json extract_json_object(std::string_view text) {
    for (std::size_t start = text.find('{'); start != std::string_view::npos; start = text.find('{', start + 1)) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < text.size(); ++i) {
            char c = text[i];
            if (in_string) {
                if (escaped) escaped = false;
                else if (c == '\\') escaped = true;
                else if (c == '"') in_string = false;
                continue;
            }
            if (c == '"') in_string = true;
            else if (c == '{') ++depth;
            else if (c == '}' && --depth == 0) {
                Json j = Json::parse(text.substr(start, i - start + 1), nullptr, false);
                if (!j.is_discarded() && j.is_object()) return j;
                break;
            }
        }
    }
    return Json(Json::value_t::discarded);
}


std::string normalize_whitespace(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out.push_back(' ');
            pending_space = false;
            out.push_back(c);
        }
    }
    return out;
}

std::string to_lower(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> words;
    std::istringstream in{std::string(text)};
    std::string w;
    while (in >> w) words.push_back(w);
    return words;
}

}  // namespace wayfarer
