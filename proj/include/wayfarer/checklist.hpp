#pragma once

// Task-tracking checklist: generation at initialization, one-item-per-step sync.

#include "wayfarer/domain.hpp"
#include "wayfarer/model_gateway.hpp"

#include <optional>
#include <string>
#include <vector>

namespace wayfarer {

enum class ItemStatus { pending, in_progress, completed, failed };
std::string_view to_string(ItemStatus status);
// Exact lowercase schema spelling only.
std::optional<ItemStatus> item_status_from_string(std::string_view name);

inline constexpr std::size_t kMinChecklistItems = 2;
inline constexpr std::size_t kMaxChecklistItems = 6;
inline constexpr std::size_t kMaxItemWords = 10;
inline constexpr std::size_t kPageTextBudget = 1500;
inline constexpr int kGenerationRetries = 2;

struct ChecklistItem {
    std::string id;
    std::string description;
    ItemStatus status = ItemStatus::pending;
    friend bool operator==(const ChecklistItem&, const ChecklistItem&) = default;
};

struct Checklist {
    std::vector<ChecklistItem> items;
    int step = 0;           // last synchronized step index
    bool fallback = false;  // hardcoded items used

    const ChecklistItem* find(std::string_view id) const;
};

struct ChecklistUpdate {
    std::string item_id;
    ItemStatus new_status = ItemStatus::pending;
    std::string reason;
};

Checklist fallback_checklist();

// Splits long items at a conjunction (else truncates to ten words), drops
// case-insensitive duplicates, keeps at most six, renumbers ids and resets
// statuses. Fewer than two items are padded from clauses of `instruction`; if
// that still leaves fewer than two, the fallback checklist is returned.
Checklist refine_checklist(const Checklist& raw, std::string_view instruction);

// Items from a {"checklist": [...]} reply; nullopt when the reply does not decode.
std::optional<Checklist> decode_checklist(std::string_view model_output);

Checklist generate_checklist(const Task& task, ModelGateway& gateway);

struct SyncResult {
    Checklist checklist;
    std::optional<ChecklistUpdate> applied;
    bool degraded = false;  // reply did not decode; checklist left unchanged
};

// Applies at most the first legal update from the model's reply. The step
// counter advances whether or not anything was applied.
SyncResult sync_checklist(const Checklist& current, const Action& action, const Outcome& outcome,
                          const PageSnapshot& snapshot, std::string_view history_text, ModelGateway& gateway);

// Same, for a step whose model output never decoded into an action.
SyncResult sync_checklist_unparsed(const Checklist& current, const Outcome& outcome, const PageSnapshot& snapshot,
                                   std::string_view history_text, ModelGateway& gateway);

// Applies the first update whose id exists and whose status is legal.
std::pair<Checklist, std::optional<ChecklistUpdate>> apply_first_update(const Checklist& current, const Json& updates);

// One "[status] description" line per item.
std::string render_checklist_context(const Checklist& checklist);

Json to_json(const Checklist& checklist);

}  // namespace wayfarer
