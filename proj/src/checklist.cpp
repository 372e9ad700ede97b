#include "wayfarer/checklist.hpp"

#include "wayfarer/templates.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <set>
#include <sstream>

namespace wayfarer {

namespace {

constexpr std::array<std::string_view, 4> kStatusNames = {"pending", "in_progress", "completed", "failed"};
const std::set<std::string, std::less<>> kConjunctions = {"and", "or", "then", "plus", "while", "but"};

std::string join_words(const std::vector<std::string>& words, std::size_t begin, std::size_t end) {
    std::string out;
    for (std::size_t i = begin; i < end && i < words.size(); ++i) {
        if (!out.empty()) out += ' ';
        out += words[i];
    }
    return out;
}

std::string trim_punctuation(std::string s) {
    while (!s.empty() && (s.back() == ',' || s.back() == ';' || s.back() == '.' || s.back() == ':')) s.pop_back();
    return s;
}

// Split points: conjunction words (dropped) and words ending in ',' or ';' (split after).
std::vector<std::string> split_long(const std::string& description) {
    auto words = split_words(description);
    if (words.size() <= kMaxItemWords) return {description};
    std::optional<std::size_t> best_left_end, best_right_begin;
    std::size_t best_cost = words.size() + 1;
    for (std::size_t i = 1; i + 1 < words.size(); ++i) {
        std::size_t left_end = 0, right_begin = 0;
        if (kConjunctions.count(to_lower(words[i]))) {
            left_end = i;
            right_begin = i + 1;
        } else if (words[i - 1].back() == ',' || words[i - 1].back() == ';') {
            left_end = i;
            right_begin = i;
        } else {
            continue;
        }
        std::size_t cost = std::max(left_end, words.size() - right_begin);
        if (cost < best_cost) {
            best_cost = cost;
            best_left_end = left_end;
            best_right_begin = right_begin;
        }
    }
    if (!best_left_end) return {join_words(words, 0, kMaxItemWords)};
    std::vector<std::string> parts;
    for (auto piece : {trim_punctuation(join_words(words, 0, *best_left_end)),
                       trim_punctuation(join_words(words, *best_right_begin, words.size()))}) {
        for (auto& p : split_long(piece)) {
            if (!p.empty()) parts.push_back(std::move(p));
        }
    }
    return parts;
}

std::vector<std::string> instruction_clauses(std::string_view instruction) {
    std::vector<std::string> clauses;
    std::string current;
    auto flush = [&] {
        auto words = split_words(current);
        std::vector<std::string> kept;
        for (auto& w : words) {
            if (!kConjunctions.count(to_lower(w))) kept.push_back(w);
        }
        auto clause = trim_punctuation(join_words(kept, 0, kMaxItemWords));
        if (!clause.empty()) clauses.push_back(clause);
        current.clear();
    };
    for (char c : instruction) {
        if (c == ',' || c == ';' || c == '.') flush();
        else current.push_back(c);
    }
    flush();
    return clauses;
}

std::string dedup_key(std::string_view description) { return trim_punctuation(to_lower(normalize_whitespace(description))); }

std::string checklist_text(const Checklist& c) {
    std::ostringstream out;
    for (std::size_t i = 0; i < c.items.size(); ++i) {
        if (i) out << "\n";
        out << c.items[i].id << " [" << to_string(c.items[i].status) << "] " << c.items[i].description;
    }
    return out.str();
}

SyncResult sync_with_prompt(const Checklist& current, std::string action_type, const Outcome& outcome,
                            const PageSnapshot& snapshot, std::string_view history_text, ModelGateway& gateway) {
    SyncResult result{current, std::nullopt, false};
    result.checklist.step = current.step + 1;
    ModelRequest request;
    request.system = "You track task progress and answer only with JSON.";
    request.user = templates::fill(
        templates::checklist_update(),
        {{"action_type", std::move(action_type)},
         {"success", outcome.success ? "true" : "false"},
         {"error", outcome.error ? std::string(to_string(outcome.error->code)) : "none"},
         {"history_text", history_text.empty() ? "(none)" : std::string(history_text)},
         {"page_state_text", utf8_prefix(normalize_whitespace(snapshot.visible_text), kPageTextBudget)},
         {"checklist_text", checklist_text(current)}});
    std::string text;
    try {
        text = gateway.complete(ModelRole::checklist, request).text;
    } catch (const ModelError& e) {
        spdlog::warn("SyncDegraded: {}", e.what());
        result.degraded = true;
        return result;
    }
    Json reply = extract_json_object(text);
    if (reply.is_discarded() || !reply.contains("updates") || !reply["updates"].is_array()) {
        spdlog::warn("SyncDegraded: checklist update reply is not {{\"updates\": [...]}}");
        result.degraded = true;
        return result;
    }
    auto [updated, applied] = apply_first_update(current, reply["updates"]);
    result.checklist.items = std::move(updated.items);
    result.applied = std::move(applied);
    return result;
}

}  // namespace

std::string_view to_string(ItemStatus status) { return kStatusNames[static_cast<std::size_t>(status)]; }

std::optional<ItemStatus> item_status_from_string(std::string_view name) {
    for (std::size_t i = 0; i < kStatusNames.size(); ++i) {
        if (kStatusNames[i] == name) return static_cast<ItemStatus>(i);
    }
    return std::nullopt;
}

const ChecklistItem* Checklist::find(std::string_view id) const {
    for (const auto& item : items) {
        if (item.id == id) return &item;
    }
    return nullptr;
}

Checklist fallback_checklist() {
    Checklist c;
    c.items = {{"requirement_1", "Task steps executed without errors", ItemStatus::pending},
               {"requirement_2", "Task goal state reached", ItemStatus::pending}};
    c.fallback = true;
    return c;
}

Checklist refine_checklist(const Checklist& raw, std::string_view instruction) {
    std::vector<std::string> descriptions;
    std::set<std::string> seen;
    auto add = [&](const std::string& d) {
        if (descriptions.size() >= kMaxChecklistItems) return;
        auto key = dedup_key(d);
        if (key.empty() || !seen.insert(key).second) return;
        descriptions.push_back(d);
    };
    for (const auto& item : raw.items) {
        auto d = normalize_whitespace(item.description);
        for (const auto& part : split_long(d)) add(part);
    }
    if (descriptions.size() < kMinChecklistItems) {
        for (const auto& clause : instruction_clauses(instruction)) add(clause);
    }
    if (descriptions.size() < kMinChecklistItems) return fallback_checklist();

    Checklist out;
    for (std::size_t i = 0; i < descriptions.size(); ++i) {
        out.items.push_back({"requirement_" + std::to_string(i + 1), descriptions[i], ItemStatus::pending});
    }
    return out;
}

std::optional<Checklist> decode_checklist(std::string_view model_output) {
    Json j = extract_json_object(model_output);
    if (j.is_discarded() || !j.contains("checklist") || !j["checklist"].is_array()) return std::nullopt;
    Checklist raw;
    for (const auto& item : j["checklist"]) {
        if (!item.is_object() || !item.contains("description") || !item["description"].is_string()) continue;
        raw.items.push_back({item.value("id", std::string{}), item["description"].get<std::string>(), ItemStatus::pending});
    }
    if (raw.items.empty()) return std::nullopt;
    return raw;
}

Checklist generate_checklist(const Task& task, ModelGateway& gateway) {
    ModelRequest request;
    request.system = "You write task checklists and answer only with JSON.";
    request.user = templates::fill(templates::checklist_generation(), {{"task_description", task.instruction}});
    for (int attempt = 0; attempt <= kGenerationRetries; ++attempt) {
        std::string text;
        try {
            text = gateway.complete(ModelRole::checklist, request).text;
        } catch (const ModelError& e) {
            spdlog::warn("checklist generation attempt {} failed: {}", attempt + 1, e.what());
            continue;
        }
        if (auto raw = decode_checklist(text)) return refine_checklist(*raw, task.instruction);
        spdlog::warn("checklist generation attempt {} did not decode", attempt + 1);
    }
    return fallback_checklist();
}

std::pair<Checklist, std::optional<ChecklistUpdate>> apply_first_update(const Checklist& current, const Json& updates) {
    Checklist next = current;
    if (!updates.is_array()) return {next, std::nullopt};
    for (const auto& u : updates) {
        if (!u.is_object()) continue;
        auto id = u.value("item_id", Json()).is_string() ? u["item_id"].get<std::string>() : std::string{};
        auto status_name = u.value("new_status", Json()).is_string() ? u["new_status"].get<std::string>() : std::string{};
        auto status = item_status_from_string(status_name);
        auto it = std::find_if(next.items.begin(), next.items.end(), [&](const auto& item) { return item.id == id; });
        if (!status || it == next.items.end()) {
            spdlog::debug("discarding checklist update item_id='{}' new_status='{}'", id, status_name);
            continue;
        }
        it->status = *status;
        auto reason = u.value("reason", Json()).is_string() ? u["reason"].get<std::string>() : std::string{};
        return {next, ChecklistUpdate{id, *status, reason}};
    }
    return {next, std::nullopt};
}

SyncResult sync_checklist(const Checklist& current, const Action& action, const Outcome& outcome,
                          const PageSnapshot& snapshot, std::string_view history_text, ModelGateway& gateway) {
    return sync_with_prompt(current, describe_action(action), outcome, snapshot, history_text, gateway);
}

SyncResult sync_checklist_unparsed(const Checklist& current, const Outcome& outcome, const PageSnapshot& snapshot,
                                   std::string_view history_text, ModelGateway& gateway) {
    return sync_with_prompt(current, "none (model output could not be decoded)", outcome, snapshot, history_text,
                            gateway);
}

std::string render_checklist_context(const Checklist& checklist) {
    std::string out;
    for (const auto& item : checklist.items) {
        if (!out.empty()) out += "\n";
        out += "[" + std::string(to_string(item.status)) + "] " + item.description;
    }
    return out;
}

Json to_json(const Checklist& checklist) {
    Json items = Json::array();
    for (const auto& item : checklist.items) {
        items.push_back({{"id", item.id}, {"description", item.description}, {"status", std::string(to_string(item.status))}});
    }
    return Json{{"items", items}, {"step", checklist.step}, {"fallback", checklist.fallback}};
}

}  // namespace wayfarer
