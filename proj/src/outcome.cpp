#include "wayfarer/outcome.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <tuple>

namespace wayfarer {

namespace {

using ElementSig = std::tuple<std::string, std::string, std::optional<std::string>>;

std::vector<ElementSig> element_set(const PageSnapshot& s) {
    std::vector<ElementSig> out;
    for (const auto& e : s.interactive_elements) out.emplace_back(e.key, e.label, e.value);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::string opt_text(const std::optional<std::string>& v) { return v ? *v : "(none)"; }

std::string describe_change(Channel c, const PageSnapshot& before, const PageSnapshot& after) {
    switch (c) {
        case Channel::text: return "visible text changed";
        case Channel::elements: {
            auto a = element_set(before);
            auto b = element_set(after);
            return std::to_string(a.size()) + " -> " + std::to_string(b.size()) + " elements";
        }
        case Channel::focus: return opt_text(before.focused_element) + " -> " + opt_text(after.focused_element);
        case Channel::url: return before.url + " -> " + after.url;
        case Channel::scroll:
            return "(" + std::to_string(before.scroll_position.x) + "," + std::to_string(before.scroll_position.y) +
                   ") -> (" + std::to_string(after.scroll_position.x) + "," + std::to_string(after.scroll_position.y) + ")";
        case Channel::modal:
            return std::string(before.modal_open ? "open" : "closed") + " -> " + (after.modal_open ? "open" : "closed") +
                   " " + opt_text(after.modal_element);
    }
    return {};
}

using Signature = std::tuple<ActionKind, std::optional<Point>, std::optional<std::string>>;

std::optional<Signature> signature(const StepRecord& r) {
    if (!r.action) return std::nullopt;
    return Signature{r.action->kind, r.action->coordinate, r.action->text};
}

}  // namespace

bool channel_differs(Channel channel, const PageSnapshot& before, const PageSnapshot& after) {
    switch (channel) {
        case Channel::text: return normalize_whitespace(before.visible_text) != normalize_whitespace(after.visible_text);
        case Channel::elements: return element_set(before) != element_set(after);
        case Channel::focus: return before.focused_element != after.focused_element;
        case Channel::url: return before.url != after.url;
        case Channel::scroll:
            return std::abs(before.scroll_position.x - after.scroll_position.x) > kScrollTolerance ||
                   std::abs(before.scroll_position.y - after.scroll_position.y) > kScrollTolerance;
        case Channel::modal:
            return before.modal_open != after.modal_open || before.modal_element != after.modal_element;
    }
    return false;
}

StateDiff diff_snapshots(const PageSnapshot& before, const PageSnapshot& after) {
    StateDiff diff;
    for (auto c : kAllChannels) {
        if (before.unavailable.contains(c) || after.unavailable.contains(c)) continue;
        if (channel_differs(c, before, after)) {
            diff.changed_channels.insert(c);
            diff.details[c] = describe_change(c, before, after);
        }
    }
    return diff;
}

bool requires_state_change(ActionKind kind) { return kind == ActionKind::left_click || kind == ActionKind::type; }

RasterHandle annotate_point(const RasterHandle& screenshot, std::optional<Point> point) {
    if (!screenshot) return nullptr;
    auto copy = std::make_shared<Raster>(*screenshot);
    if (point) {
        int x = static_cast<int>(std::lround(point->x / double(kNormalizedMax) * (copy->width - 1)));
        int y = static_cast<int>(std::lround(point->y / double(kNormalizedMax) * (copy->height - 1)));
        copy->draw_crosshair(x, y, Rgb{230, 30, 30}, std::max(6, copy->width / 60));
    }
    return copy;
}

Outcome judge_outcome(const Action& action, const std::optional<ExecError>& exec_error, const StateDiff& diff,
                      const std::optional<Readback>& readback, const RasterHandle& after_screenshot) {
    Outcome o;
    o.changed_channels = diff.changed_channels;
    if (exec_error) {
        o.error = exec_error;
    } else if (requires_state_change(action.kind) && diff.changed_channels.empty()) {
        o.error = ExecError{ErrorCode::NoStateChange, "no observable change after " + std::string(to_string(action.kind))};
    } else if (action.kind == ActionKind::type && readback && !readback->matches()) {
        o.error = ExecError{ErrorCode::ReadbackMismatch,
                            "field reads '" + readback->actual + "', expected '" + readback->expected + "'"};
        o.readback_mismatch = readback;
    }
    o.success = !o.error.has_value();
    if (!o.success) {
        o.annotated_screenshot = annotate_point(after_screenshot, action.coordinate);
        o.raster_unavailable = !o.annotated_screenshot;
    }
    return o;
}

std::string_view to_string(PatternReason reason) {
    switch (reason) {
        case PatternReason::none: return "none";
        case PatternReason::consecutive_identical_failures: return "consecutive_identical_failures";
        case PatternReason::high_failure_rate: return "high_failure_rate";
    }
    return "none";
}

PatternVerdict analyze_patterns(const std::vector<StepRecord>& recent, const PatternConfig& config) {
    PatternVerdict v;
    const std::size_t n = recent.size();
    if (config.consecutive > 0 && n >= config.consecutive) {
        auto first = signature(recent[n - config.consecutive]);
        bool identical = first.has_value();
        for (std::size_t i = n - config.consecutive; identical && i < n; ++i) {
            identical = !recent[i].outcome.success && signature(recent[i]) == first;
        }
        if (identical) {
            v.stall_warning = true;
            v.reason = PatternReason::consecutive_identical_failures;
            for (std::size_t i = n - config.consecutive; i < n; ++i) v.evidence.push_back(recent[i].index);
            return v;
        }
    }
    if (config.window > 0 && n >= config.window) {
        std::vector<int> failed;
        for (std::size_t i = n - config.window; i < n; ++i) {
            if (!recent[i].outcome.success) failed.push_back(recent[i].index);
        }
        if (static_cast<double>(failed.size()) >= config.failure_rate * static_cast<double>(config.window) - 1e-9) {
            v.stall_warning = true;
            v.reason = PatternReason::high_failure_rate;
            v.evidence = std::move(failed);
        }
    }
    return v;
}

}  // namespace wayfarer
