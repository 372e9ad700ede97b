#include "conformance.hpp"

using namespace wayfarer;
using namespace wayfarer::test;

namespace {

Json conformance_pack() {
    Json elements = Json::array({element_json("q", "input", {100, 100, 300, 150}, "Search"),
                                 element_json("frame", "iframe_boundary", {100, 200, 500, 600}),
                                 element_json("F1/link", "link", {150, 250, 250, 300}, "Framed link"),
                                 element_json("go", "button", {450, 450, 550, 550}, "Go")});
    elements[0]["value"] = "";
    elements[2]["frame_path"] = {"F1"};
    Json transitions = Json::array({{{"from", "home"}, {"on", {{"op", "click"}, {"element", "go"}}}, {"set_text", "Clicked Go"}},
                                    {{"from", "home"}, {"on", {{"op", "click"}, {"element", "F1/link"}}}, {"set_text", "Clicked framed link"}}});
    return pack_json(elements, transitions);
}

Json two_page_pack() {
    Json modal_button = element_json("close", "button", {450, 600, 550, 650}, "Close");
    Json home = Json::array({element_json("next", "link", {0, 0, 100, 50}, "Next"),
                             element_json("under", "button", {200, 200, 400, 400}, "Under"),
                             element_json("over", "button", {300, 300, 500, 500}, "Over"),
                             element_json("q", "input", {600, 0, 900, 50})});
    home[3]["value"] = "old";
    Json sort = element_json("sort", "select", {600, 100, 900, 150});
    sort["options"] = {"Nearest", "Oldest"};
    sort["value"] = "Nearest";
    home.push_back(sort);
    Json pack = pack_json(home,
                          Json::array({
                              {{"from", "home"}, {"on", {{"op", "click"}, {"element", "next"}}}, {"to", "second"}},
                              {{"from", "home"}, {"on", {{"op", "click"}, {"element", "under"}}}, {"open_modal", "promo"}},
                              {{"from", "home"}, {"on", {{"op", "click"}, {"element", "over"}, {"modal", nullptr}}}, {"set_text", "Over clicked"}},
                              {{"from", "home"}, {"on", {{"op", "click"}, {"element", "close"}}}, {"close_modal", true}},
                              {{"from", "home"}, {"on", {{"op", "key"}, {"code", "Enter"}, {"value_contains", "BEEF"}}}, {"set_text", "Results for beef"}},
                              {{"from", "home"}, {"on", {{"op", "set_value"}, {"element", "sort"}, {"value", "Oldest"}}}, {"set_text", "Sorted oldest"}},
                          }),
                          Json::array({{{"id", "second"}, {"url", "https://example.test/second"}, {"text", "Second page"}, {"max_scroll", 600}}}));
    pack["pages"][0]["modals"] = Json::array({{{"key", "promo"}, {"text", "Subscribe!"}, {"elements", {modal_button}}}});
    return pack;
}

std::string text_after(SimulatedSite& s) { return s.snapshot().visible_text; }

}  // namespace

TEST_CASE("the simulator satisfies the environment conformance suite") {
    auto s = site(conformance_pack());
    check_environment_conformance(s, {"go", {450, 450, 550, 550}, "q", {100, 100, 300, 150}, "frame", "F1/link",
                                      {150, 250, 250, 300}, {"F1"}});
}

TEST_CASE("pack validation names the first problem") {
    auto expect_invalid = [](Json pack, const std::string& fragment) {
        try {
            SitePack::from_json(pack);
            FAIL("pack accepted: ", fragment);
        } catch (const PackInvalid& e) {
            CHECK_MESSAGE(std::string(e.what()).find(fragment) != std::string::npos, e.what());
        }
    };
    auto base = two_page_pack();
    CHECK_NOTHROW(SitePack::from_json(base));

    auto dup_initial = base;
    dup_initial["pages"][1]["initial"] = true;
    expect_invalid(dup_initial, "duplicate initial");

    auto no_initial = base;
    no_initial["pages"][0]["initial"] = false;
    expect_invalid(no_initial, "initial");

    auto bad_target = base;
    bad_target["transitions"][0]["to"] = "nowhere";
    expect_invalid(bad_target, "unknown target page 'nowhere'");

    auto bad_element = base;
    bad_element["transitions"][1]["on"]["element"] = "ghost";
    expect_invalid(bad_element, "unknown element 'ghost'");

    auto bad_modal = base;
    bad_modal["transitions"][1]["open_modal"] = "ghost";
    expect_invalid(bad_modal, "unknown modal 'ghost'");

    auto options_on_button = base;
    options_on_button["pages"][0]["elements"][0]["options"] = {"a"};
    expect_invalid(options_on_button, "options iff");

    auto bad_select_value = base;
    bad_select_value["pages"][0]["elements"][4]["value"] = "Newest";
    expect_invalid(bad_select_value, "not one of its options");

    auto dup_key = base;
    dup_key["pages"][0]["elements"].push_back(element_json("next", "link", {0, 0, 5, 5}));
    expect_invalid(dup_key, "duplicate element key 'next'");

    auto off_screen = base;
    off_screen["pages"][0]["elements"][0]["bbox"] = {0, 0, 1200, 50};
    expect_invalid(off_screen, "outside [0,1000]");

    auto bad_op = base;
    bad_op["transitions"][0]["on"]["op"] = "teleport";
    expect_invalid(bad_op, "unknown op 'teleport'");

    expect_invalid(Json{{"pages", Json::array()}}, "malformed site pack");
    CHECK_THROWS_AS(SitePack::load(fixture("invalid/broken.json")), PackInvalid);
    CHECK_THROWS_AS(SitePack::load(fixture("does-not-exist.json")), PackInvalid);
}

TEST_CASE("the shipped packs validate") {
    for (const char* name : {"allrecipes.json", "recreation.json", "petfinder.json", "allrecipes_iframe.json"}) {
        CAPTURE(name);
        auto pack = SitePack::load(fixture(name));
        CHECK(pack.task);
        CHECK(pack.models);
    }
}

TEST_CASE("later elements are on top and disabled elements ignore clicks") {
    auto s = site(two_page_pack());
    s.apply(EnvOp::click_at({350, 350}));
    CHECK(text_after(s) == "Over clicked");

    auto pack = two_page_pack();
    pack["pages"][0]["elements"][2]["enabled"] = false;
    auto disabled = site(pack);
    disabled.apply(EnvOp::click_at({350, 350}));
    CHECK(text_after(disabled) == "Home page");
}

TEST_CASE("an open modal's backdrop swallows clicks outside it") {
    auto s = site(two_page_pack());
    s.apply(EnvOp::click_at({250, 250}));
    auto snap = s.snapshot();
    CHECK(snap.modal_open);
    CHECK(snap.modal_element == "promo");
    CHECK(snap.visible_text.find("Subscribe!") != std::string::npos);
    REQUIRE(find_element(snap, "promo"));
    CHECK(find_element(snap, "promo")->role == ElementRole::container);

    s.apply(EnvOp::click_at({50, 25}));
    CHECK(s.current_page() == "home");
    CHECK(s.apply(EnvOp::click_element("over")) == std::nullopt);
    CHECK(text_after(s).find("Over clicked") == std::string::npos);

    s.apply(EnvOp::click_at({500, 625}));
    CHECK_FALSE(s.snapshot().modal_open);
    s.apply(EnvOp::click_at({50, 25}));
    CHECK(s.current_page() == "second");
}

TEST_CASE("key transitions check the focused field's contents case-insensitively") {
    auto s = site(two_page_pack());
    s.apply(EnvOp::focus_element("q"));
    s.apply(EnvOp::key("Enter"));
    CHECK(text_after(s) == "Home page");
    s.apply(EnvOp::key(std::string(kSelectAllChord)));
    s.apply(EnvOp::type("beef sirloin"));
    CHECK(s.read_value("q") == "beef sirloin");
    s.apply(EnvOp::key("Enter"));
    CHECK(text_after(s) == "Results for beef");
}

TEST_CASE("select-all and backspace edit the focused field") {
    auto s = site(two_page_pack());
    s.apply(EnvOp::click_at({700, 25}));
    CHECK(s.snapshot().focused_element == "q");
    s.apply(EnvOp::type("er"));
    CHECK(s.read_value("q") == "older");
    s.apply(EnvOp::key("Backspace"));
    CHECK(s.read_value("q") == "olde");
    s.apply(EnvOp::key(std::string(kSelectAllChord)));
    s.apply(EnvOp::key("Backspace"));
    CHECK(s.read_value("q") == "");
    s.apply(EnvOp::type("caf\xc3\xa9"));
    s.apply(EnvOp::key("Backspace"));
    CHECK(s.read_value("q") == "caf");
}

TEST_CASE("set_value enforces select options and fires transitions") {
    auto s = site(two_page_pack());
    auto err = s.apply(EnvOp::set_value("sort", "Newest"));
    REQUIRE(err);
    CHECK(err->code == ErrorCode::OptionNotFound);
    CHECK(s.read_value("sort") == "Nearest");
    CHECK_FALSE(s.apply(EnvOp::set_value("sort", "Oldest")));
    CHECK(s.read_value("sort") == "Oldest");
    CHECK(text_after(s) == "Sorted oldest");
    CHECK(s.apply(EnvOp::set_value("ghost", "x"))->code == ErrorCode::ElementNotFound);
}

TEST_CASE("scrolling is clamped to the page height") {
    auto s = site(two_page_pack());
    s.apply(EnvOp::scroll("down"));
    CHECK(s.snapshot().scroll_position.y == 0);
    s.apply(EnvOp::navigate("https://example.test/second"));
    s.apply(EnvOp::scroll("down"));
    CHECK(s.snapshot().scroll_position.y == 250);
    s.apply(EnvOp::scroll("bottom"));
    CHECK(s.snapshot().scroll_position.y == 600);
    s.apply(EnvOp::scroll("down"));
    CHECK(s.snapshot().scroll_position.y == 600);
    s.apply(EnvOp::scroll("up"));
    CHECK(s.snapshot().scroll_position.y == 350);
    s.apply(EnvOp::scroll("top"));
    CHECK(s.snapshot().scroll_position.y == 0);
    CHECK(s.apply(EnvOp::scroll("sideways"))->code == ErrorCode::EnvironmentError);
}

TEST_CASE("navigation history and tabs") {
    auto s = site(two_page_pack());
    CHECK(s.apply(EnvOp::navigate("https://nowhere.test/"))->code == ErrorCode::EnvironmentError);
    s.apply(EnvOp::click_element("next"));
    CHECK(s.current_page() == "second");
    s.apply(EnvOp::simple(EnvOpKind::go_back));
    CHECK(s.current_page() == "home");
    s.apply(EnvOp::simple(EnvOpKind::go_forward));
    CHECK(s.current_page() == "second");
    s.apply(EnvOp::simple(EnvOpKind::go_forward));
    CHECK(s.current_page() == "second");

    s.apply(EnvOp::simple(EnvOpKind::new_tab));
    CHECK(s.snapshot().url == "about:blank");
    s.apply(EnvOp::simple(EnvOpKind::close_tab));
    CHECK(s.current_page() == "second");
    s.apply(EnvOp::simple(EnvOpKind::close_tab));
    CHECK(s.current_page() == "second");
}

TEST_CASE("identical operation sequences give identical snapshots") {
    std::mt19937 rng(3);
    std::vector<EnvOp> ops;
    for (int i = 0; i < 300; ++i) {
        switch (rng() % 6) {
            case 0: ops.push_back(EnvOp::click_at({static_cast<int>(rng() % 1001), static_cast<int>(rng() % 1001)})); break;
            case 1: ops.push_back(EnvOp::type("x")); break;
            case 2: ops.push_back(EnvOp::key(rng() % 2 ? "Backspace" : "Enter")); break;
            case 3: ops.push_back(EnvOp::scroll(rng() % 2 ? "down" : "up")); break;
            case 4: ops.push_back(EnvOp::simple(rng() % 2 ? EnvOpKind::go_back : EnvOpKind::go_forward)); break;
            default: ops.push_back(EnvOp::set_value("sort", rng() % 2 ? "Oldest" : "Nearest")); break;
        }
    }
    auto a = site(two_page_pack());
    auto b = site(two_page_pack());
    for (const auto& op : ops) {
        a.apply(op);
        b.apply(op);
        auto sa = a.snapshot(), sb = b.snapshot();
        REQUIRE(to_json(sa) == to_json(sb));
        REQUIRE(encode_png(*sa.screenshot) == encode_png(*sb.screenshot));
    }
    CHECK(a.op_log() == ops);
}

TEST_CASE("environment operations round-trip through JSON") {
    std::vector<EnvOp> ops = {EnvOp::click_at({1, 2}),           EnvOp::click_element("k"),  EnvOp::hover_at({3, 4}),
                              EnvOp::focus_element("f"),         EnvOp::key("Enter"),        EnvOp::type("hello"),
                              EnvOp::set_value("s", "Oldest"),   EnvOp::scroll("down", Point{5, 6}),
                              EnvOp::navigate("https://x.test"), EnvOp::simple(EnvOpKind::go_back),
                              EnvOp::simple(EnvOpKind::new_tab), EnvOp::wait(1.5)};
    for (const auto& op : ops) CHECK(env_op_from_json(to_json(op)) == op);
    for (std::size_t i = 0; i < 14; ++i) {
        auto kind = static_cast<EnvOpKind>(i);
        CHECK(env_op_kind_from_string(to_string(kind)) == kind);
    }
    CHECK_THROWS_AS(env_op_from_json(Json{{"op", "fly"}}), std::invalid_argument);
}

TEST_CASE("packs without raster produce no screenshot") {
    auto pack = two_page_pack();
    pack["raster"] = false;
    auto s = site(pack);
    CHECK_FALSE(s.snapshot().screenshot);
    CHECK_FALSE(s.capabilities().raster_screenshots);
    CHECK(s.capabilities().script_level_select);
    CHECK_FALSE(s.blocked());
}
