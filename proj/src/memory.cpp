#include "wayfarer/memory.hpp"

#include "wayfarer/templates.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <set>
#include <sstream>

namespace wayfarer {

namespace {

std::string kind_of(const StepRecord& step) {
    return step.action ? std::string(to_string(step.action->kind)) : std::string("no_action");
}

std::string coordinate_text(const StepRecord& step) {
    if (!step.action || !step.action->coordinate) return "no coordinate";
    return "[" + std::to_string(step.action->coordinate->x) + "," + std::to_string(step.action->coordinate->y) + "]";
}

std::string mechanical_note(const StepRecord& step) {
    std::string head = "step " + std::to_string(step.index) + ": " + kind_of(step) + " at " + coordinate_text(step);
    if (!step.outcome.error || step.outcome.error->code == ErrorCode::NoStateChange) return head + " produced no state change";
    return head + " failed (" + std::string(to_string(step.outcome.error->code)) + ")";
}

std::string join(const std::vector<std::string>& lines, std::string_view sep) {
    std::string out;
    for (const auto& l : lines) {
        if (!out.empty()) out += sep;
        out += l;
    }
    return out;
}

}  // namespace

std::string render_step_line(const StepRecord& step) {
    std::string line = "step " + std::to_string(step.index) + ": ";
    line += step.action ? describe_action(*step.action) : "(no valid action)";
    if (step.outcome.success) {
        line += " -> ok";
    } else {
        line += " -> FAILED";
        if (step.outcome.error) line += " (" + std::string(to_string(step.outcome.error->code)) + ")";
    }
    if (!step.snapshot_after.url.empty()) line += "; url " + step.snapshot_after.url;
    return line;
}

AdaptiveMemory::AdaptiveMemory(MemoryConfig config, std::shared_ptr<ModelGateway> gateway, std::string task_instruction)
    : config_(config), gateway_(std::move(gateway)), task_(std::move(task_instruction)) {
    if (config_.window_size && *config_.window_size == 0) throw std::invalid_argument("window size must be >= 1");
}

void AdaptiveMemory::record_step(const StepRecord& step) {
    if (step.index != last_index_ + 1) {
        throw IndexGap("expected step " + std::to_string(last_index_ + 1) + ", got " + std::to_string(step.index));
    }
    last_index_ = step.index;
    if (config_.enabled && !step.outcome.success) reflect_failure(step);
    window_.push_back(step);
    if (!config_.window_size) return;
    if (!config_.enabled) {
        while (window_.size() > *config_.window_size) window_.erase(window_.begin());
        return;
    }
    if (window_.size() >= *config_.window_size) distill_chunk();
}

void AdaptiveMemory::reflect_failure(const StepRecord& step) {
    FailureNote note;
    note.step_index = step.index;
    note.action_kind = kind_of(step);
    note.screenshot = step.outcome.annotated_screenshot;

    std::string text;
    if (gateway_ && gateway_->bound(ModelRole::summarizer)) {
        ModelRequest request;
        request.system = "You analyse failed browser actions.";
        request.user = templates::fill(
            templates::failure_reflection(),
            {{"task", task_},
             {"step", std::to_string(step.index)},
             {"action", step.action ? describe_action(*step.action) : "(no valid action)"},
             {"error", step.outcome.error ? std::string(to_string(step.outcome.error->code)) + ": " + step.outcome.error->message
                                          : "failure flagged"},
             {"url", step.snapshot_after.url}});
        if (step.outcome.annotated_screenshot) request.images.push_back(step.outcome.annotated_screenshot);
        try {
            text = normalize_whitespace(gateway_->complete(ModelRole::summarizer, request).text);
        } catch (const ModelError& e) {
            spdlog::warn("failure reflection for step {} fell back: {}", step.index, e.what());
        }
    }
    if (text.empty()) {
        note.text = mechanical_note(step);
        note.mechanical = true;
    } else {
        note.text = "step " + std::to_string(step.index) + " (" + note.action_kind + "): " + text;
    }
    failures_.push_back(std::move(note));
}

std::string AdaptiveMemory::mechanical_summary() const {
    std::vector<std::string> kinds;
    std::vector<std::string> urls;
    int failed = 0;
    for (const auto& s : window_) {
        kinds.push_back(kind_of(s));
        const auto& url = s.snapshot_after.url;
        if (!url.empty() && (urls.empty() || urls.back() != url)) urls.push_back(url);
        if (!s.outcome.success) ++failed;
    }
    std::ostringstream out;
    if (!summary_.empty()) out << summary_ << " ";
    out << "Steps " << window_.front().index << "-" << window_.back().index << ": " << join(kinds, ", ") << ".";
    if (!urls.empty()) out << " Visited " << join(urls, ", ") << ".";
    out << " " << failed << " failure(s).";
    return out.str();
}

std::string AdaptiveMemory::distill_with_model(const std::vector<std::string>& step_lines,
                                               const std::vector<std::string>& notes) {
    if (!gateway_ || !gateway_->bound(ModelRole::summarizer)) return {};
    ModelRequest request;
    request.system = "You maintain a compact memory of a browsing session.";
    request.user = templates::fill(templates::memory_distill(),
                                   {{"task", task_},
                                    {"previous_summary", summary_.empty() ? "(none)" : summary_},
                                    {"steps", join(step_lines, "\n")},
                                    {"failures", notes.empty() ? "(none)" : join(notes, "\n")}});
    try {
        return normalize_whitespace(gateway_->complete(ModelRole::summarizer, request).text);
    } catch (const ModelError& e) {
        spdlog::warn("chunk {} distillation fell back: {}", chunk_index_ + 1, e.what());
        return {};
    }
}

void AdaptiveMemory::distill_chunk() {
    if (window_.empty()) return;
    std::vector<std::string> step_lines;
    for (const auto& s : window_) step_lines.push_back(render_step_line(s));
    const int first = window_.front().index;
    const int last = window_.back().index;
    std::vector<std::string> chunk_notes;
    for (const auto& n : failures_) {
        if (n.step_index >= first && n.step_index <= last) chunk_notes.push_back(n.text);
    }
    auto summary = distill_with_model(step_lines, chunk_notes);
    if (summary.empty()) {
        summary = mechanical_summary();
        ++mechanical_summaries_;
    }
    summary_ = std::move(summary);
    ++chunk_index_;
    window_.clear();
}

std::string AdaptiveMemory::render_history_digest() const {
    std::vector<std::string> sections;
    if (!summary_.empty()) sections.push_back("SUMMARY:\n" + summary_);
    if (!failures_.empty() && config_.digest_failure_notes > 0) {
        std::size_t start = failures_.size() > config_.digest_failure_notes ? failures_.size() - config_.digest_failure_notes : 0;
        std::string block = "FAILURES:";
        for (std::size_t i = start; i < failures_.size(); ++i) block += "\n- " + failures_[i].text;
        sections.push_back(block);
    }
    if (!window_.empty()) {
        std::string block = "RECENT:";
        for (const auto& s : window_) block += "\n" + render_step_line(s);
        sections.push_back(block);
    }
    return join(sections, "\n\n");
}

}  // namespace wayfarer
