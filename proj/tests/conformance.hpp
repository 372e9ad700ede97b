#pragma once

// Behaviour every Environment implementation must share. Each implementation
// supplies a page with a button, a text input and an iframe holding one link.

#include "support.hpp"

namespace wayfarer::test {

struct ConformancePage {
    std::string button;
    Rect button_box;
    std::string input;
    Rect input_box;
    std::string iframe;
    std::string framed;
    Rect framed_box;
    std::vector<std::string> frame_path;
};

inline const ElementRecord* find_element(const PageSnapshot& s, const std::string& key) {
    for (const auto& e : s.interactive_elements)
        if (e.key == key) return &e;
    return nullptr;
}

inline Point centre_of(const Rect& r) { return Point{(r.x0 + r.x1) / 2, (r.y0 + r.y1) / 2}; }

inline bool inside(const Rect& inner, const Rect& outer) {
    return inner.x0 >= outer.x0 && inner.y0 >= outer.y0 && inner.x1 <= outer.x1 && inner.y1 <= outer.y1;
}

inline void check_environment_conformance(Environment& env, const ConformancePage& page) {
    env.clear_op_log();
    const auto first = env.snapshot();
    CHECK_NOTHROW(validate_snapshot(first));
    CHECK(first.unavailable.empty());
    CHECK_FALSE(first.url.empty());
    CHECK(static_cast<bool>(first.screenshot) == env.capabilities().raster_screenshots);

    SUBCASE("snapshots are stable without operations") {
        CHECK(to_json(env.snapshot()) == to_json(first));
    }

    SUBCASE("element geometry is normalized to the viewport") {
        const auto* button = find_element(first, page.button);
        const auto* input = find_element(first, page.input);
        REQUIRE(button);
        REQUIRE(input);
        CHECK(button->bbox == page.button_box);
        CHECK(input->bbox == page.input_box);
        CHECK(input->role == ElementRole::input);
    }

    SUBCASE("iframe content is flattened inside its boundary") {
        const auto* frame = find_element(first, page.iframe);
        const auto* framed = find_element(first, page.framed);
        REQUIRE(frame);
        REQUIRE(framed);
        CHECK(frame->role == ElementRole::iframe_boundary);
        CHECK(framed->frame_path == page.frame_path);
        CHECK(framed->bbox == page.framed_box);
        CHECK(inside(framed->bbox, frame->bbox));
    }

    SUBCASE("a click on the button changes observable state") {
        auto centre = centre_of(page.button_box);
        CHECK_FALSE(env.apply(EnvOp::click_at(centre)));
        CHECK_FALSE(diff_snapshots(first, env.snapshot()).changed_channels.empty());
        REQUIRE(env.op_log().size() == 1);
        CHECK(env.op_log()[0] == EnvOp::click_at(centre));
    }

    SUBCASE("a click on the framed element reaches it") {
        CHECK_FALSE(env.apply(EnvOp::click_at(centre_of(page.framed_box))));
        CHECK(diff_snapshots(first, env.snapshot()).changed_channels.contains(Channel::text));
    }

    SUBCASE("operations that hit nothing are legal no-ops") {
        CHECK_FALSE(env.apply(EnvOp::hover_at({5, 995})));
        CHECK_FALSE(env.apply(EnvOp::wait(0)));
        CHECK(diff_snapshots(first, env.snapshot()).changed_channels.empty());
        CHECK(env.op_log().size() == 2);
    }

    SUBCASE("typing into a focused input is read back") {
        CHECK_FALSE(env.apply(EnvOp::focus_element(page.input)));
        CHECK_FALSE(env.apply(EnvOp::type("abc")));
        CHECK(env.read_value(page.input) == "abc");
        CHECK(env.snapshot().focused_element == page.input);
    }

    SUBCASE("operations on unknown elements report ElementNotFound") {
        auto err = env.apply(EnvOp::focus_element("no-such-element"));
        REQUIRE(err);
        CHECK(err->code == ErrorCode::ElementNotFound);
    }
}

}  // namespace wayfarer::test
