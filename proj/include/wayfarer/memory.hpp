#pragma once

// Interaction history: a raw sliding window, a recursively distilled summary of
// completed chunks, and failure notes that survive distillation.

#include "wayfarer/domain.hpp"
#include "wayfarer/model_gateway.hpp"

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace wayfarer {

inline constexpr std::size_t kDefaultWindow = 5;
inline constexpr std::size_t kDigestFailureNotes = 5;

struct MemoryConfig {
    // nullopt = unbounded window (distillation never fires).
    std::optional<std::size_t> window_size = kDefaultWindow;
    // Off = plain recency window: no summary, no failure reflection. With an
    // unbounded window this keeps the full raw history.
    bool enabled = true;
    std::size_t digest_failure_notes = kDigestFailureNotes;
};

struct FailureNote {
    int step_index = 0;
    std::string action_kind;
    std::string text;
    RasterHandle screenshot;
    bool mechanical = false;  // summarizer unavailable; fallback wording
};

class IndexGap : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class AdaptiveMemory {
public:
    // `gateway` may be null; summaries and notes then use the mechanical fallbacks.
    AdaptiveMemory(MemoryConfig config, std::shared_ptr<ModelGateway> gateway, std::string task_instruction);

    // Throws IndexGap unless step.index == last_index() + 1.
    void record_step(const StepRecord& step);
    // Precondition: window is full. Public for tests; record_step calls it.
    void distill_chunk();
    // Precondition: step failed.
    void reflect_failure(const StepRecord& step);

    std::string render_history_digest() const;

    const std::string& summary() const { return summary_; }
    const std::vector<StepRecord>& window() const { return window_; }
    const std::vector<FailureNote>& failure_buffer() const { return failures_; }
    std::size_t chunk_index() const { return chunk_index_; }
    int last_index() const { return last_index_; }
    const MemoryConfig& config() const { return config_; }
    int mechanical_summaries() const { return mechanical_summaries_; }

private:
    std::string distill_with_model(const std::vector<std::string>& step_lines, const std::vector<std::string>& notes);
    std::string mechanical_summary() const;

    MemoryConfig config_;
    std::shared_ptr<ModelGateway> gateway_;
    std::string task_;
    std::string summary_;
    std::vector<StepRecord> window_;
    std::vector<FailureNote> failures_;
    std::size_t chunk_index_ = 0;
    int last_index_ = 0;
    int mechanical_summaries_ = 0;
};

// One-line digest of a step, as shown under "RECENT:".
std::string render_step_line(const StepRecord& step);

}  // namespace wayfarer
