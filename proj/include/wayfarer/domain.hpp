#pragma once

// Shared domain types: tasks, actions, page snapshots, outcomes, step records.

#include "wayfarer/expected.hpp"
#include "wayfarer/raster.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wayfarer {

using Json = nlohmann::json;

// Normalized viewport space: [0,1000] x [0,1000], origin top-left.
inline constexpr int kNormalizedMax = 1000;

struct Point {
    int x = 0;
    int y = 0;
    friend bool operator==(const Point&, const Point&) = default;
};

struct Rect {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    bool contains(Point p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
    bool intersects(const Rect& o) const { return x0 < o.x1 && o.x0 < x1 && y0 < o.y1 && o.y0 < y1; }
    long area() const { return static_cast<long>(x1 - x0) * (y1 - y0); }
    double center_x() const { return (x0 + x1) / 2.0; }
    double center_y() const { return (y0 + y1) / 2.0; }
    bool within_viewport() const {
        return x0 >= 0 && y0 >= 0 && x1 <= kNormalizedMax && y1 <= kNormalizedMax && x0 <= x1 && y0 <= y1;
    }
    friend bool operator==(const Rect&, const Rect&) = default;
};

struct Task {
    std::string instruction;
    std::string target_url;
    std::string task_id;
    std::vector<std::string> constraints;
};

// Host part of a URL without a leading "www.", lowercased. Empty if not parseable.
std::string url_host(std::string_view url);
bool looks_like_url(std::string_view url);

// Throws std::invalid_argument when the instruction is empty or the URL is malformed.
void validate_task(const Task& task);

enum class ActionKind {
    left_click,
    hover,
    keyboard,
    type,
    select,
    press_enter,
    scroll_up,
    scroll_down,
    scroll_top,
    scroll_bottom,
    new_tab,
    close_tab,
    go_back,
    go_forward,
    wait,
    terminate,
};

inline constexpr std::array<ActionKind, 16> kAllActionKinds = {
    ActionKind::left_click, ActionKind::hover,       ActionKind::keyboard,    ActionKind::type,
    ActionKind::select,     ActionKind::press_enter, ActionKind::scroll_up,   ActionKind::scroll_down,
    ActionKind::scroll_top, ActionKind::scroll_bottom, ActionKind::new_tab,   ActionKind::close_tab,
    ActionKind::go_back,    ActionKind::go_forward,  ActionKind::wait,        ActionKind::terminate,
};

std::string_view to_string(ActionKind kind);
std::optional<ActionKind> action_kind_from_string(std::string_view name);
bool is_scroll(ActionKind kind);

enum class TerminateStatus { success, failure };
std::string_view to_string(TerminateStatus status);

// Schema length caps, counted in Unicode code points.
inline constexpr std::size_t kMaxTextLength = 200;
inline constexpr std::size_t kMaxCodeLength = 50;
inline constexpr std::size_t kMaxFieldLength = 100;
inline constexpr std::size_t kMaxDescriptionLength = 200;

std::size_t utf8_length(std::string_view s);

struct Action {
    ActionKind kind = ActionKind::wait;
    std::optional<Point> coordinate;
    std::optional<std::string> text;
    std::optional<std::string> code;
    std::optional<bool> clear_first;
    std::optional<bool> press_enter_after;
    std::optional<std::string> field;
    std::optional<double> time;
    std::optional<TerminateStatus> status;
    std::string description;

    friend bool operator==(const Action&, const Action&) = default;
};

// Errors produced while decoding or validating an action. Parse-level codes
// (the first four) come from the protocol layer; the rest from validate_action.
enum class ActionErrorCode {
    NoToolCallTag,
    MalformedJson,
    WrongFunctionName,
    InvalidArgumentType,
    UnknownKind,
    MissingCoordinate,
    CoordinateOutOfRange,
    MissingStatus,
    MissingTime,
    MissingText,
    MissingDescription,
    FieldTooLong,
};

std::string_view to_string(ActionErrorCode code);

struct ValidationError {
    ActionErrorCode code;
    std::string field;
    std::string message;
};

// Checks, in order: coordinate (presence, range), status, time, text presence for
// type/select, length caps, description presence. Returns the first violation.
Expected<Action, ValidationError> validate_action(const Action& candidate);

// Schema "arguments" object for an action (keys omitted when unset).
Json action_to_arguments(const Action& action);

// Single-line rendering used by memory digests and logs.
std::string describe_action(const Action& action);

enum class ElementRole { button, link, input, select, option, image, container, iframe_boundary, other };
std::string_view to_string(ElementRole role);
std::optional<ElementRole> element_role_from_string(std::string_view name);

struct ElementRecord {
    std::string key;
    ElementRole role = ElementRole::other;
    std::string label;
    Rect bbox;
    std::optional<std::string> value;
    std::vector<std::string> options;  // non-empty iff role == select
    std::vector<std::string> frame_path;
    bool enabled = true;
    std::string name;  // semantic name attribute (placeholder, aria-label, name=)

    friend bool operator==(const ElementRecord&, const ElementRecord&) = default;
};

// The six channels compared between snapshots, in reporting priority order.
enum class Channel : std::uint8_t { text, elements, focus, url, scroll, modal };
inline constexpr std::array<Channel, 6> kAllChannels = {Channel::text,  Channel::elements, Channel::focus,
                                                       Channel::url,   Channel::scroll,   Channel::modal};
std::string_view to_string(Channel c);
std::optional<Channel> channel_from_string(std::string_view name);

class ChannelSet {
public:
    ChannelSet() = default;
    ChannelSet(std::initializer_list<Channel> channels) {
        for (auto c : channels) insert(c);
    }
    void insert(Channel c) { bits_ |= bit(c); }
    void erase(Channel c) { bits_ &= static_cast<std::uint8_t>(~bit(c)); }
    bool contains(Channel c) const { return (bits_ & bit(c)) != 0; }
    bool empty() const { return bits_ == 0; }
    std::size_t size() const;
    // Members in priority order.
    std::vector<Channel> members() const;
    friend bool operator==(const ChannelSet&, const ChannelSet&) = default;

private:
    static std::uint8_t bit(Channel c) { return static_cast<std::uint8_t>(1u << static_cast<unsigned>(c)); }
    std::uint8_t bits_ = 0;
};

struct PageSnapshot {
    std::string url;
    std::string visible_text;
    std::vector<ElementRecord> interactive_elements;
    std::optional<std::string> focused_element;
    Point scroll_position;
    bool modal_open = false;
    std::optional<std::string> modal_element;
    RasterHandle screenshot;
    // Channels the environment could not observe for this snapshot.
    ChannelSet unavailable;

    const ElementRecord* find(std::string_view key) const;
};

// Throws std::invalid_argument on duplicate element keys or out-of-viewport boxes.
void validate_snapshot(const PageSnapshot& snapshot);

enum class ErrorCode {
    NoStateChange,
    ReadbackMismatch,
    NoElementNearPoint,
    NoInputFound,
    AmbiguityUnresolved,
    OptionNotFound,
    VerificationFailed,
    ElementNotFound,
    EnvironmentError,
    ProtocolError,
    Timeout,
    ModelOutputInvalid,
    ModelUnavailable,
};

std::string_view to_string(ErrorCode code);

struct ExecError {
    ErrorCode code = ErrorCode::EnvironmentError;
    std::string message;
    friend bool operator==(const ExecError&, const ExecError&) = default;
};

struct Readback {
    std::string expected;
    std::string actual;
    bool matches() const { return expected == actual; }
    friend bool operator==(const Readback&, const Readback&) = default;
};

struct Outcome {
    bool success = false;
    ChannelSet changed_channels;
    std::optional<ExecError> error;
    std::optional<Readback> readback_mismatch;
    RasterHandle annotated_screenshot;
    // Set on failures when no raster could be captured.
    bool raster_unavailable = false;
};

enum class GroundingTier { coordinate, structural, global_search, script_level, semantic_search };
std::string_view to_string(GroundingTier tier);

struct GroundingAttempt {
    GroundingTier tier = GroundingTier::coordinate;
    std::optional<Point> target_point;
    std::optional<std::string> target_element;
    Outcome result;
    int model_calls_used = 0;
};

// Model invocations attributed to a single step, per role.
struct StepCalls {
    int action = 0;
    int checklist = 0;
    int summarizer = 0;
    int planner = 0;
    int total() const { return action + checklist + summarizer + planner; }
};

struct StepRecord {
    int index = 0;
    std::optional<Action> action;  // absent when the model output could not be parsed
    Outcome outcome;
    PageSnapshot snapshot_before;
    PageSnapshot snapshot_after;
    std::vector<GroundingAttempt> attempts;
    StepCalls model_calls;
    std::string user_prompt;
    std::vector<Json> env_ops;  // operations issued to the environment during the step
    std::optional<std::string> warning;
};

// Canonical JSON forms (sorted keys, no rasters, no timestamps).
Json to_json(const Point& p);
Json to_json(const Rect& r);
Json to_json(const Task& task);
Json to_json(const ElementRecord& e);
Json to_json(const PageSnapshot& s);
Json to_json(const Outcome& o);
Json to_json(const GroundingAttempt& a);
Json to_json(const StepRecord& r);
Json to_json(ChannelSet channels);

Task task_from_json(const Json& j);
ElementRecord element_from_json(const Json& j);
PageSnapshot snapshot_from_json(const Json& j);

std::string normalize_whitespace(std::string_view text);
std::string to_lower(std::string_view text);
std::vector<std::string> split_words(std::string_view text);
// First code points of `text`, never splitting a UTF-8 sequence.
std::string utf8_prefix(std::string_view text, std::size_t max_code_points);

// First balanced JSON object embedded in free text (prose, code fences), or a
// discarded value when there is none.
Json extract_json_object(std::string_view text);

}  // namespace wayfarer
