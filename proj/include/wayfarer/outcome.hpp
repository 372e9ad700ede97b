#pragma once

// Failure detection: execution errors, state-change verification, action
// checks (readback), and cross-step pattern analysis.

#include "wayfarer/domain.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace wayfarer {

inline constexpr int kScrollTolerance = 2;
inline constexpr std::string_view kStallWarning = "WARNING: repeated failures detected; change strategy.";

struct StateDiff {
    ChannelSet changed_channels;
    std::map<Channel, std::string> details;
};

// Channels unavailable in either snapshot are never reported as changed.
StateDiff diff_snapshots(const PageSnapshot& before, const PageSnapshot& after);

// Per-channel comparators, exposed for tests and the environment conformance suite.
bool channel_differs(Channel channel, const PageSnapshot& before, const PageSnapshot& after);

// Only point-based clicks and text entry are held to the no-change rule.
bool requires_state_change(ActionKind kind);

// `after_screenshot` is annotated with the action's coordinate on failure; a null
// handle sets the raster-unavailable marker instead.
Outcome judge_outcome(const Action& action, const std::optional<ExecError>& exec_error, const StateDiff& diff,
                      const std::optional<Readback>& readback, const RasterHandle& after_screenshot = nullptr);

// Crosshair at the normalized point, scaled to the raster. Null in, null out.
RasterHandle annotate_point(const RasterHandle& screenshot, std::optional<Point> point);

enum class PatternReason { none, consecutive_identical_failures, high_failure_rate };
std::string_view to_string(PatternReason reason);

struct PatternConfig {
    std::size_t consecutive = 3;
    std::size_t window = 5;
    double failure_rate = 0.6;
};

struct PatternVerdict {
    bool stall_warning = false;
    PatternReason reason = PatternReason::none;
    std::vector<int> evidence;  // step indices
};

// `recent` is ordered by index; only its tail is inspected.
PatternVerdict analyze_patterns(const std::vector<StepRecord>& recent, const PatternConfig& config = {});

}  // namespace wayfarer
