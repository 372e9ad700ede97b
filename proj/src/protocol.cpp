#include "wayfarer/protocol.hpp"

#include "wayfarer/templates.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <set>

namespace wayfarer {

namespace {

constexpr std::string_view kOpenTag = "<tool_call>";
constexpr std::string_view kCloseTag = "</tool_call>";

const std::set<std::string, std::less<>> kKnownKeys = {"action", "coordinate", "text",   "code", "clear_first",
                                                       "press_enter_after", "field", "time", "status",
                                                       "description"};

ValidationError error(ActionErrorCode code, std::string field, std::string message) {
    return ValidationError{code, std::move(field), std::move(message)};
}

std::string join_lines(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) {
        if (!out.empty()) out += "\n";
        out += l;
    }
    return out;
}

std::optional<int> coordinate_component(const Json& v) {
    double d = 0;
    if (v.is_number_integer()) {
        auto i = v.get<long long>();
        d = static_cast<double>(i);
    } else if (v.is_number_unsigned()) {
        d = static_cast<double>(v.get<unsigned long long>());
    } else if (v.is_number_float()) {
        d = v.get<double>();
        if (!std::isfinite(d) || std::floor(d) != d) return std::nullopt;
    } else {
        return std::nullopt;
    }
    // Out-of-range values are kept out of range (validation reports them) without overflowing int.
    if (d < 0) return -1;
    if (d > kNormalizedMax) return kNormalizedMax + 1;
    return static_cast<int>(d);
}

Expected<Action, ValidationError> decode_arguments(const Json& args, std::vector<std::string>& dropped) {
    if (!args.is_object()) return error(ActionErrorCode::InvalidArgumentType, "arguments", "'arguments' must be an object");
    Action a;
    auto present = [&](const char* key) { return args.contains(key) && !args[key].is_null(); };
    auto string_arg = [&](const char* key, std::optional<std::string>& out) -> std::optional<ValidationError> {
        if (!present(key)) return std::nullopt;
        if (!args[key].is_string())
            return error(ActionErrorCode::InvalidArgumentType, key, std::string("'") + key + "' must be a string");
        out = args[key].get<std::string>();
        return std::nullopt;
    };
    auto bool_arg = [&](const char* key, std::optional<bool>& out) -> std::optional<ValidationError> {
        if (!present(key)) return std::nullopt;
        if (!args[key].is_boolean())
            return error(ActionErrorCode::InvalidArgumentType, key, std::string("'") + key + "' must be a boolean");
        out = args[key].get<bool>();
        return std::nullopt;
    };

    if (!present("action") || !args["action"].is_string())
        return error(ActionErrorCode::InvalidArgumentType, "action", "'action' must be a string");
    auto kind = action_kind_from_string(args["action"].get<std::string>());
    if (!kind) return error(ActionErrorCode::UnknownKind, "action", "unknown action '" + args["action"].get<std::string>() + "'");
    a.kind = *kind;

    if (present("coordinate")) {
        const auto& c = args["coordinate"];
        if (!c.is_array() || c.size() != 2)
            return error(ActionErrorCode::InvalidArgumentType, "coordinate", "'coordinate' must be [x, y]");
        auto x = coordinate_component(c[0]);
        auto y = coordinate_component(c[1]);
        if (!x || !y)
            return error(ActionErrorCode::InvalidArgumentType, "coordinate", "'coordinate' entries must be integers");
        a.coordinate = Point{*x, *y};
    }
    std::optional<std::string> description;
    std::optional<std::string> status;
    for (auto check : {string_arg("text", a.text), string_arg("code", a.code), string_arg("field", a.field),
                       string_arg("description", description), string_arg("status", status),
                       bool_arg("clear_first", a.clear_first), bool_arg("press_enter_after", a.press_enter_after)}) {
        if (check) return *check;
    }
    if (description) a.description = *description;
    if (status) {
        if (*status == "success") a.status = TerminateStatus::success;
        else if (*status == "failure") a.status = TerminateStatus::failure;
        else return error(ActionErrorCode::InvalidArgumentType, "status", "'status' must be success or failure");
    }
    if (present("time")) {
        if (!args["time"].is_number())
            return error(ActionErrorCode::InvalidArgumentType, "time", "'time' must be a number");
        a.time = args["time"].get<double>();
    }
    for (auto it = args.begin(); it != args.end(); ++it) {
        if (!kKnownKeys.count(it.key())) dropped.push_back(it.key());
    }
    return validate_action(a);
}

}  // namespace

std::string build_system_prompt(std::string_view strategic_reasoning) {
    return templates::fill(templates::system_prompt(), {{"strategic_reasoning", std::string(strategic_reasoning)}});
}

std::string build_user_prompt(const Task& task, const Plan& plan, std::string_view history_digest,
                              std::string_view checklist_context, const std::vector<std::string>& constraints) {
    std::vector<std::string> policy;
    for (const auto& c : task.constraints) {
        if (c == kLoginProhibited) {
            auto block = std::string(templates::task_constraints());
            while (!block.empty() && block.back() == '\n') block.pop_back();
            policy.push_back(block);
        } else {
            policy.push_back("- " + c);
        }
    }
    for (const auto& c : constraints) policy.push_back(c);
    return templates::fill(templates::user_prompt(), {{"task", task.instruction},
                                                      {"strategic_reasoning", render_strategic_reasoning(plan)},
                                                      {"policy_constraints", join_lines(policy)},
                                                      {"previous_actions", std::string(history_digest)},
                                                      {"checklist_context", std::string(checklist_context)}});
}

ToolCallEnvelope parse_tool_call(std::string_view raw) {
    ToolCallEnvelope env;
    env.raw_text = std::string(raw);
    auto open = raw.find(kOpenTag);
    if (open == std::string_view::npos) {
        env.parse_error = error(ActionErrorCode::NoToolCallTag, "", "no <tool_call> tag in model output");
        return env;
    }
    auto body = raw.substr(open + kOpenTag.size());
    auto close = body.find(kCloseTag);
    if (close != std::string_view::npos) body = body.substr(0, close);

    Json call = Json::parse(body, nullptr, false);
    if (call.is_discarded() || !call.is_object()) {
        env.parse_error = error(ActionErrorCode::MalformedJson, "", "tool call body is not a JSON object");
        return env;
    }
    if (!call.contains("name") || !call["name"].is_string() || call["name"].get<std::string>() != kToolName) {
        env.parse_error = error(ActionErrorCode::WrongFunctionName, "name", "function name must be 'browser_use'");
        return env;
    }
    Json args = call.contains("arguments") ? call["arguments"] : Json();
    if (args.is_string()) {
        args = Json::parse(args.get<std::string>(), nullptr, false);
        if (args.is_discarded()) {
            env.parse_error = error(ActionErrorCode::MalformedJson, "arguments", "'arguments' string is not JSON");
            return env;
        }
    }
    auto decoded = decode_arguments(args, env.dropped_keys);
    for (const auto& k : env.dropped_keys) spdlog::info("dropping unknown tool argument '{}'", k);
    if (decoded) env.parsed = std::move(decoded).value();
    else env.parse_error = decoded.error();
    return env;
}

std::string render_tool_call(const Action& action) {
    Json call{{"name", std::string(kToolName)}, {"arguments", action_to_arguments(action)}};
    return std::string(kOpenTag) + "\n" + call.dump() + "\n" + std::string(kCloseTag);
}

std::string reprompt_notice(const ValidationError& e) {
    return "\n\nYour previous reply could not be executed (" + std::string(to_string(e.code)) + ": " + e.message +
           "). Reply with exactly one <tool_call> block that follows the browser_use schema.";
}

}  // namespace wayfarer
