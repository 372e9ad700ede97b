#pragma once

// Prompt assembly for the action model and decoding of its <tool_call> replies.

#include "wayfarer/domain.hpp"
#include "wayfarer/planner.hpp"

#include <optional>
#include <string>
#include <vector>

namespace wayfarer {

inline constexpr std::string_view kToolName = "browser_use";
// Task constraint keyword that expands to the login-prohibition block.
inline constexpr std::string_view kLoginProhibited = "login_prohibited";

struct PromptBundle {
    std::string system_prompt;
    std::string user_prompt;
    std::vector<RasterHandle> images;
};

std::string build_system_prompt(std::string_view strategic_reasoning);

// `constraints` are extra lines (pattern warnings and the like) appended after the
// task's own constraints.
std::string build_user_prompt(const Task& task, const Plan& plan, std::string_view history_digest,
                              std::string_view checklist_context, const std::vector<std::string>& constraints);

struct ToolCallEnvelope {
    std::string raw_text;
    std::optional<Action> parsed;
    std::optional<ValidationError> parse_error;
    std::vector<std::string> dropped_keys;  // unknown argument keys ignored while decoding
};

// Never throws. Exactly one of parsed / parse_error is set on the result.
ToolCallEnvelope parse_tool_call(std::string_view raw);

// Canonical wire form: "<tool_call>\n{json with sorted keys}\n</tool_call>".
std::string render_tool_call(const Action& action);

// Appended to the user prompt for the single retry after an undecodable reply.
std::string reprompt_notice(const ValidationError& error);

}  // namespace wayfarer
