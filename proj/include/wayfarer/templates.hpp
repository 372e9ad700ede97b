#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

namespace wayfarer::templates {

// Every prompt template under data/prompts, keyed by file stem, byte-identical
// to the file contents (embedded at build time).
const std::map<std::string, std::string_view, std::less<>>& all();

// Throws std::out_of_range for an unknown name.
inline std::string_view get(std::string_view name) {
    auto it = all().find(name);
    if (it == all().end()) throw std::out_of_range("no prompt template named '" + std::string(name) + "'");
    return it->second;
}

inline std::string_view system_prompt() { return get("system_prompt"); }
inline std::string_view user_prompt() { return get("user_prompt"); }
inline std::string_view checklist_generation() { return get("checklist_generation"); }
inline std::string_view checklist_update() { return get("checklist_update"); }
inline std::string_view task_constraints() { return get("task_constraints"); }
inline std::string_view plan_synthesis() { return get("plan_synthesis"); }
inline std::string_view knowledge_search() { return get("knowledge_search"); }
inline std::string_view memory_distill() { return get("memory_distill"); }
inline std::string_view failure_reflection() { return get("failure_reflection"); }
inline std::string_view grounding_disambiguation() { return get("grounding_disambiguation"); }

// Replaces each `{name}` placeholder whose name appears in `slots`, in a single
// left-to-right pass; substituted text is never rescanned and unknown braces
// (such as JSON examples) are left untouched.
std::string fill(std::string_view tpl, const std::map<std::string, std::string, std::less<>>& slots);

}  // namespace wayfarer::templates
