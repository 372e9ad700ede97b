#include "wayfarer/grounding.hpp"

#include "wayfarer/outcome.hpp"
#include "wayfarer/templates.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace wayfarer {

namespace {

double center_distance(const ElementRecord& e, Point p) {
    return std::hypot(e.bbox.center_x() - p.x, e.bbox.center_y() - p.y);
}

bool clickable(const ElementRecord& e) {
    return e.enabled && e.role != ElementRole::container && e.role != ElementRole::iframe_boundary;
}

std::set<std::string> tokens(std::string_view text) {
    std::set<std::string> out;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) out.insert(current);
        current.clear();
    };
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        else flush();
    }
    flush();
    return out;
}

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

std::string element_line(const ElementRecord& e) {
    std::ostringstream out;
    out << to_string(e.role) << " " << quoted(e.label);
    if (!e.name.empty()) out << " name=" << quoted(e.name);
    out << " at [" << e.bbox.x0 << "," << e.bbox.y0 << "," << e.bbox.x1 << "," << e.bbox.y1 << "]";
    if (e.value) out << " value=" << quoted(*e.value);
    return out.str();
}

}  // namespace

std::vector<GroundingTier> tier_order(ActionKind kind) {
    switch (kind) {
        case ActionKind::left_click:
            return {GroundingTier::coordinate, GroundingTier::structural};
        case ActionKind::type:
            return {GroundingTier::coordinate, GroundingTier::structural, GroundingTier::global_search};
        case ActionKind::select:
            return {GroundingTier::script_level, GroundingTier::semantic_search};
        case ActionKind::terminate:
            return {};
        default:
            return {GroundingTier::coordinate};
    }
}

const ElementRecord* structural_target(const PageSnapshot& snapshot, Point p, const std::vector<ElementRole>& roles) {
    auto eligible = [&](const ElementRecord& e) {
        if (!clickable(e)) return false;
        return roles.empty() || std::find(roles.begin(), roles.end(), e.role) != roles.end();
    };
    const ElementRecord* best = nullptr;
    for (const auto& e : snapshot.interactive_elements) {
        if (!eligible(e) || !e.bbox.contains(p)) continue;
        if (!best || e.bbox.area() < best->bbox.area()) best = &e;
    }
    if (best) return best;
    double best_distance = kNearCutoff;
    for (const auto& e : snapshot.interactive_elements) {
        if (!eligible(e)) continue;
        double d = center_distance(e, p);
        if (d > kNearCutoff) continue;
        if (!best || d < best_distance - 1e-9 || (std::abs(d - best_distance) <= 1e-9 && e.bbox.area() < best->bbox.area())) {
            best = &e;
            best_distance = d;
        }
    }
    return best;
}

double field_similarity(std::string_view field, const ElementRecord& element) {
    auto wanted = tokens(field);
    if (wanted.empty()) return 0.0;
    auto have = tokens(element.label + " " + element.name);
    std::size_t hit = 0;
    for (const auto& t : wanted) hit += have.count(t);
    return static_cast<double>(hit) / static_cast<double>(wanted.size());
}

Grounder::Grounder(Environment& env, ModelGateway* gateway, GroundingConfig config)
    : env_(env), gateway_(gateway), config_(config) {}

GroundingResult Grounder::ground(const Action& action, const PageSnapshot& before) {
    switch (action.kind) {
        case ActionKind::left_click:
        case ActionKind::hover: return ground_click(action, before);
        case ActionKind::type: return ground_type(action, before);
        case ActionKind::select: return ground_select(action, before);
        case ActionKind::terminate: {
            GroundingResult r;
            r.outcome.success = true;
            r.after = before;
            return r;
        }
        default: break;
    }
    std::vector<EnvOp> ops;
    switch (action.kind) {
        case ActionKind::keyboard:
            if (action.code) ops.push_back(EnvOp::key(*action.code));
            if (action.clear_first.value_or(false) || action.text == std::optional<std::string>("CLEAR")) {
                ops.push_back(EnvOp::key(std::string(kSelectAllChord)));
                ops.push_back(EnvOp::key("Backspace"));
            }
            if (action.text && *action.text != "CLEAR") ops.push_back(EnvOp::type(*action.text));
            break;
        case ActionKind::press_enter: ops.push_back(EnvOp::key("Enter")); break;
        case ActionKind::scroll_up: ops.push_back(EnvOp::scroll("up", action.coordinate)); break;
        case ActionKind::scroll_down: ops.push_back(EnvOp::scroll("down", action.coordinate)); break;
        case ActionKind::scroll_top: ops.push_back(EnvOp::scroll("top", action.coordinate)); break;
        case ActionKind::scroll_bottom: ops.push_back(EnvOp::scroll("bottom", action.coordinate)); break;
        case ActionKind::new_tab: ops.push_back(EnvOp::simple(EnvOpKind::new_tab)); break;
        case ActionKind::close_tab: ops.push_back(EnvOp::simple(EnvOpKind::close_tab)); break;
        case ActionKind::go_back: ops.push_back(EnvOp::simple(EnvOpKind::go_back)); break;
        case ActionKind::go_forward: ops.push_back(EnvOp::simple(EnvOpKind::go_forward)); break;
        case ActionKind::wait: ops.push_back(EnvOp::wait(action.time.value_or(0))); break;
        default: break;
    }
    std::vector<Step> steps;
    steps.push_back(run_ops(action, GroundingTier::coordinate, before, ops, action.coordinate, std::nullopt));
    return finish(std::move(steps), 0);
}

Grounder::Step Grounder::run_ops(const Action& action, GroundingTier tier, const PageSnapshot& before,
                                 const std::vector<EnvOp>& ops, std::optional<Point> target_point,
                                 std::optional<std::string> target_element) {
    std::optional<ExecError> error;
    for (const auto& op : ops) {
        error = env_.apply(op);
        if (error) break;
    }
    Step s;
    s.after = env_.snapshot();
    s.attempt.tier = tier;
    s.attempt.target_point = target_point;
    s.attempt.target_element = std::move(target_element);
    s.attempt.result = judge_outcome(action, error, diff_snapshots(before, s.after), std::nullopt, s.after.screenshot);
    return s;
}

Grounder::Step Grounder::failed_attempt(const Action& action, GroundingTier tier, const PageSnapshot& before,
                                        ErrorCode code, std::string message) {
    Step s;
    s.after = env_.snapshot();
    s.attempt.tier = tier;
    s.attempt.target_point = action.coordinate;
    s.attempt.result = judge_outcome(action, ExecError{code, std::move(message)}, diff_snapshots(before, s.after),
                                     std::nullopt, s.after.screenshot);
    return s;
}

GroundingResult Grounder::finish(std::vector<Step> steps, int calls) {
    GroundingResult r;
    r.model_calls = calls;
    for (auto& s : steps) r.attempts.push_back(s.attempt);
    if (!steps.empty()) {
        r.outcome = steps.back().attempt.result;
        r.after = std::move(steps.back().after);
    }
    return r;
}

// ---- click / hover ----

GroundingResult Grounder::ground_click(const Action& action, const PageSnapshot& before) {
    const Point p = action.coordinate.value_or(Point{});
    std::vector<Step> steps;
    auto op = action.kind == ActionKind::hover ? EnvOp::hover_at(p) : EnvOp::click_at(p);
    steps.push_back(run_ops(action, GroundingTier::coordinate, before, {op}, p, std::nullopt));
    if (steps.back().attempt.result.success || action.kind != ActionKind::left_click || !config_.fallbacks) {
        return finish(std::move(steps), 0);
    }
    if (steps.back().attempt.result.error && steps.back().attempt.result.error->code != ErrorCode::NoStateChange) {
        return finish(std::move(steps), 0);
    }
    const auto current = steps.back().after;
    const auto* target = structural_target(current, p);
    if (!target) {
        steps.push_back(failed_attempt(action, GroundingTier::structural, before, ErrorCode::NoElementNearPoint,
                                       "no clickable element within 50 units of the point"));
    } else {
        steps.push_back(run_ops(action, GroundingTier::structural, before, {EnvOp::click_element(target->key)},
                                std::nullopt, target->key));
    }
    return finish(std::move(steps), 0);
}

// ---- type ----

Grounder::Step Grounder::type_into(const Action& action, GroundingTier tier, const PageSnapshot& before,
                                   const std::string& key) {
    const std::string text = action.text.value_or("");
    const bool clear = action.clear_first.value_or(false);
    std::optional<ExecError> error = env_.apply(EnvOp::focus_element(key));
    Readback readback;
    if (!error) {
        auto old = env_.read_value(key).value_or("");
        readback.expected = clear ? text : old + text;
        error = env_.apply(EnvOp::set_value(key, readback.expected));
        readback.actual = env_.read_value(key).value_or("");
        if (!error && readback.matches() && action.press_enter_after.value_or(false)) error = env_.apply(EnvOp::key("Enter"));
    }
    Step s;
    s.after = env_.snapshot();
    s.attempt.tier = tier;
    s.attempt.target_element = key;
    s.attempt.result = judge_outcome(action, error, diff_snapshots(before, s.after), readback, s.after.screenshot);
    return s;
}

GroundingResult Grounder::ground_type(const Action& action, const PageSnapshot& before) {
    const Point p = action.coordinate.value_or(Point{});
    const std::string text = action.text.value_or("");
    const bool clear = action.clear_first.value_or(false);
    std::vector<Step> steps;
    int calls = 0;

    // Stage 1: focus by coordinate, optionally clear, type through the key channel, read back.
    {
        std::optional<ExecError> error = env_.apply(EnvOp::click_at(p));
        Readback readback{text, ""};
        if (!error) {
            auto focused = env_.snapshot().focused_element;
            std::string old = focused ? env_.read_value(*focused).value_or("") : "";
            if (clear) {
                error = env_.apply(EnvOp::key(std::string(kSelectAllChord)));
                if (!error) error = env_.apply(EnvOp::key("Backspace"));
            }
            if (!error) error = env_.apply(EnvOp::type(text));
            readback.expected = clear ? text : old + text;
            readback.actual = focused ? env_.read_value(*focused).value_or("") : "";
            if (!error && readback.matches() && action.press_enter_after.value_or(false)) error = env_.apply(EnvOp::key("Enter"));
        }
        Step s;
        s.after = env_.snapshot();
        s.attempt.tier = GroundingTier::coordinate;
        s.attempt.target_point = p;
        s.attempt.result = judge_outcome(action, error, diff_snapshots(before, s.after), readback, s.after.screenshot);
        steps.push_back(std::move(s));
    }
    if (steps.back().attempt.result.success || !config_.fallbacks) return finish(std::move(steps), calls);

    // Stage 2: the input element under or nearest the point, set by key.
    {
        const auto current = steps.back().after;
        const auto* target = structural_target(current, p, {ElementRole::input});
        if (!target) {
            steps.push_back(failed_attempt(action, GroundingTier::structural, before, ErrorCode::NoElementNearPoint,
                                           "no input within 50 units of the point"));
        } else {
            steps.push_back(type_into(action, GroundingTier::structural, before, target->key));
        }
    }
    if (steps.back().attempt.result.success) return finish(std::move(steps), calls);

    // Stage 3: every input on the page, ranked by field similarity then distance.
    const auto current = steps.back().after;
    struct Candidate {
        const ElementRecord* element;
        double similarity;
        double distance;
    };
    std::vector<Candidate> candidates;
    for (const auto& e : current.interactive_elements) {
        if (e.role != ElementRole::input || !e.enabled) continue;
        candidates.push_back({&e, field_similarity(action.field.value_or(""), e), center_distance(e, p)});
    }
    if (candidates.empty()) {
        steps.push_back(failed_attempt(action, GroundingTier::global_search, before, ErrorCode::NoInputFound,
                                       "the page has no enabled input field"));
        return finish(std::move(steps), calls);
    }
    std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (std::abs(a.similarity - b.similarity) > 1e-9) return a.similarity > b.similarity;
        return a.distance < b.distance;
    });
    std::vector<Candidate> tied;
    for (const auto& c : candidates) {
        if (std::abs(c.similarity - candidates.front().similarity) <= 1e-9 &&
            c.distance - candidates.front().distance <= kTieTolerance) {
            tied.push_back(c);
        }
    }
    const ElementRecord* chosen = tied.front().element;
    if (tied.size() > 1) {
        std::vector<std::string> labels;
        for (const auto& c : tied) labels.push_back(element_line(*c.element));
        auto pick = disambiguate(action, "text input field", labels, calls);
        if (!pick) {
            steps.push_back(failed_attempt(action, GroundingTier::global_search, before, ErrorCode::AmbiguityUnresolved,
                                           "could not choose between " + std::to_string(tied.size()) + " input fields"));
            steps.back().attempt.model_calls_used = calls;
            return finish(std::move(steps), calls);
        }
        chosen = tied[*pick].element;
    }
    steps.push_back(type_into(action, GroundingTier::global_search, before, chosen->key));
    steps.back().attempt.model_calls_used = calls;
    return finish(std::move(steps), calls);
}

// ---- select ----

Grounder::Step Grounder::select_option(const Action& action, GroundingTier tier, const PageSnapshot& before,
                                       const std::string& key, const std::string& option) {
    std::optional<ExecError> error = env_.apply(EnvOp::set_value(key, option));
    if (!error) {
        auto actual = env_.read_value(key).value_or("");
        if (actual != option) error = ExecError{ErrorCode::VerificationFailed, "select reads '" + actual + "', expected '" + option + "'"};
    }
    Step s;
    s.after = env_.snapshot();
    s.attempt.tier = tier;
    s.attempt.target_element = key;
    s.attempt.result = judge_outcome(action, error, diff_snapshots(before, s.after), std::nullopt, s.after.screenshot);
    return s;
}

GroundingResult Grounder::ground_select(const Action& action, const PageSnapshot& before) {
    const std::string wanted = action.text.value_or("");
    std::vector<Step> steps;
    int calls = 0;

    // Stage 1: the select under or nearest the point, value assigned directly.
    {
        const ElementRecord* target =
            action.coordinate ? structural_target(before, *action.coordinate, {ElementRole::select}) : nullptr;
        if (!target) {
            steps.push_back(failed_attempt(action, GroundingTier::script_level, before, ErrorCode::ElementNotFound,
                                           "no dropdown under or near the point"));
        } else if (std::find(target->options.begin(), target->options.end(), wanted) == target->options.end()) {
            steps.push_back(failed_attempt(action, GroundingTier::script_level, before, ErrorCode::OptionNotFound,
                                           "'" + wanted + "' is not an option of '" + target->key + "'"));
            steps.back().attempt.target_element = target->key;
        } else {
            steps.push_back(select_option(action, GroundingTier::script_level, before, target->key, wanted));
        }
    }
    if (steps.back().attempt.result.success || !config_.fallbacks) return finish(std::move(steps), calls);

    // Stage 2: every option of every select, exact (case-insensitive) before substring.
    const auto current = steps.back().after;
    const auto needle = to_lower(normalize_whitespace(wanted));
    std::vector<std::pair<const ElementRecord*, std::string>> exact, partial;
    for (const auto& e : current.interactive_elements) {
        if (e.role != ElementRole::select || !e.enabled) continue;
        for (const auto& o : e.options) {
            auto hay = to_lower(normalize_whitespace(o));
            if (hay == needle) exact.emplace_back(&e, o);
            else if (!needle.empty() && hay.find(needle) != std::string::npos) partial.emplace_back(&e, o);
        }
    }
    auto& matches = exact.empty() ? partial : exact;
    if (matches.empty()) {
        steps.push_back(failed_attempt(action, GroundingTier::semantic_search, before, ErrorCode::OptionNotFound,
                                       "no dropdown offers '" + wanted + "'"));
        return finish(std::move(steps), calls);
    }
    std::size_t pick = 0;
    if (matches.size() > 1) {
        std::vector<std::string> labels;
        for (const auto& [e, o] : matches) labels.push_back("option " + quoted(o) + " of " + element_line(*e));
        auto chosen = disambiguate(action, "dropdown option", labels, calls);
        if (!chosen) {
            steps.push_back(failed_attempt(action, GroundingTier::semantic_search, before, ErrorCode::AmbiguityUnresolved,
                                           "could not choose between " + std::to_string(matches.size()) + " options"));
            steps.back().attempt.model_calls_used = calls;
            return finish(std::move(steps), calls);
        }
        pick = *chosen;
    }
    steps.push_back(select_option(action, GroundingTier::semantic_search, before, matches[pick].first->key,
                                  matches[pick].second));
    steps.back().attempt.model_calls_used = calls;
    return finish(std::move(steps), calls);
}

std::optional<std::size_t> Grounder::disambiguate(const Action& action, std::string_view purpose,
                                                  const std::vector<std::string>& labels, int& calls) {
    if (!gateway_ || !gateway_->bound(ModelRole::action)) return std::nullopt;
    std::string listing;
    for (std::size_t i = 0; i < labels.size(); ++i) listing += std::to_string(i + 1) + ". " + labels[i] + "\n";
    std::string intent = describe_action(action);
    if (action.field) intent += " field=" + *action.field;
    ModelRequest request;
    request.system = "You resolve which on-screen element an instruction refers to.";
    request.user = templates::fill(templates::grounding_disambiguation(),
                                   {{"purpose", std::string(purpose)}, {"intent", intent}, {"candidates", listing}});
    for (int attempt = 0; attempt < kDisambiguationAttempts; ++attempt) {
        ++calls;
        std::string text;
        try {
            text = gateway_->complete(ModelRole::action, request).text;
        } catch (const ModelError& e) {
            spdlog::warn("disambiguation call failed: {}", e.what());
            continue;
        }
        Json j = extract_json_object(text);
        if (!j.is_discarded() && j.contains("choice") && j["choice"].is_number_integer()) {
            auto n = j["choice"].get<long long>();
            if (n >= 1 && n <= static_cast<long long>(labels.size())) return static_cast<std::size_t>(n - 1);
        }
        spdlog::warn("disambiguation reply '{}' is not a valid choice", text.substr(0, 80));
    }
    return std::nullopt;
}

// ---- set-of-mark overlay ----

SomOverlay build_som_overlay(const PageSnapshot& snapshot) {
    std::vector<const ElementRecord*> elements;
    for (const auto& e : snapshot.interactive_elements) {
        if (e.role == ElementRole::container || e.role == ElementRole::iframe_boundary) continue;
        if (!e.bbox.within_viewport()) continue;
        elements.push_back(&e);
    }
    std::stable_sort(elements.begin(), elements.end(), [](const ElementRecord* a, const ElementRecord* b) {
        if (a->bbox.y0 != b->bbox.y0) return a->bbox.y0 < b->bbox.y0;
        return a->bbox.x0 < b->bbox.x0;
    });

    SomOverlay overlay;
    std::vector<Rect> placed;
    for (std::size_t i = 0; i < elements.size(); ++i) {
        const int tag = static_cast<int>(i + 1);
        const int w = 6 + 7 * static_cast<int>(std::to_string(tag).size());
        const int h = 14;
        Rect box{elements[i]->bbox.x0, elements[i]->bbox.y0, elements[i]->bbox.x0 + w, elements[i]->bbox.y0 + h};
        auto clash = [&](const Rect& r) {
            return std::any_of(placed.begin(), placed.end(), [&](const Rect& o) { return o.intersects(r); });
        };
        for (int guard = 0; clash(box) && guard < 2000; ++guard) {
            box.x0 += w + 1;
            box.x1 += w + 1;
            if (box.x1 > kNormalizedMax) {
                box.x0 = 0;
                box.x1 = w;
                box.y0 += h + 1;
                box.y1 += h + 1;
                if (box.y1 > kNormalizedMax) {
                    box.y0 = 0;
                    box.y1 = h;
                }
            }
        }
        placed.push_back(box);
        overlay.annotations.push_back({elements[i]->key, tag, elements[i]->bbox, box});
    }

    if (snapshot.screenshot) {
        auto raster = std::make_shared<Raster>(*snapshot.screenshot);
        const double sx = (raster->width - 1) / double(kNormalizedMax);
        const double sy = (raster->height - 1) / double(kNormalizedMax);
        for (const auto& a : overlay.annotations) {
            raster->outline_rect(int(a.bbox.x0 * sx), int(a.bbox.y0 * sy), int(a.bbox.x1 * sx), int(a.bbox.y1 * sy),
                                 Rgb{220, 0, 120}, 2);
            int x0 = int(a.tag_box.x0 * sx), y0 = int(a.tag_box.y0 * sy);
            auto [tw, th] = number_extent(a.tag);
            raster->fill_rect(x0, y0, x0 + tw + 3, y0 + th + 3, Rgb{220, 0, 120});
            raster->draw_number(x0 + 2, y0 + 2, a.tag, Rgb{255, 255, 255});
        }
        overlay.rendered = raster;
    }
    return overlay;
}

std::string render_observation(const PageSnapshot& snapshot, const SomOverlay& overlay) {
    std::ostringstream out;
    out << "URL: " << snapshot.url << "\n";
    out << "Modal: " << (snapshot.modal_open ? "open " + snapshot.modal_element.value_or("") : std::string("none")) << "\n";
    out << "Focused: " << snapshot.focused_element.value_or("none") << "\n";
    out << "Scroll: " << snapshot.scroll_position.x << "," << snapshot.scroll_position.y << "\n";
    out << "Text: " << utf8_prefix(normalize_whitespace(snapshot.visible_text), 2000) << "\n";
    out << "Elements:";
    for (const auto& a : overlay.annotations) {
        const auto* e = snapshot.find(a.key);
        if (!e) continue;
        out << "\n[" << a.tag << "] " << element_line(*e);
        if (!e->options.empty()) {
            out << " options=[";
            for (std::size_t i = 0; i < e->options.size(); ++i) out << (i ? ", " : "") << quoted(e->options[i]);
            out << "]";
        }
        if (!e->frame_path.empty()) {
            out << " frame=";
            for (std::size_t i = 0; i < e->frame_path.size(); ++i) out << (i ? "/" : "") << e->frame_path[i];
        }
        if (!e->enabled) out << " disabled";
    }
    return out.str();
}

}  // namespace wayfarer
