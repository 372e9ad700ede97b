#include "support.hpp"

#include <fstream>
#include <sstream>

using namespace wayfarer;
using namespace wayfarer::test;

namespace {

SessionConfig allrecipes() { return pack_session_config(fixture("allrecipes.json")); }

SessionConfig recreation() {
    std::ifstream in(fixture("configs/recreation_run.json"));
    return SessionConfig::from_json(Json::parse(in), fixture("configs"));
}

long sum_step_calls(const Trajectory& t, ModelRole role) {
    long n = 0;
    for (const auto& s : t.steps) {
        switch (role) {
            case ModelRole::action: n += s.model_calls.action; break;
            case ModelRole::planner: n += s.model_calls.planner; break;
            case ModelRole::checklist: n += s.model_calls.checklist; break;
            case ModelRole::summarizer: n += s.model_calls.summarizer; break;
        }
    }
    return n;
}

long count(const std::map<ModelRole, long>& m, ModelRole role) {
    auto it = m.find(role);
    return it == m.end() ? 0 : it->second;
}

void check_accounting(const Trajectory& t) {
    for (auto role : kAllRoles) {
        CAPTURE(to_string(role));
        CHECK(sum_step_calls(t, role) + count(t.counters.init_calls, role) == count(t.counters.calls, role));
    }
}

// Minimal session: one-page site, action model only.
SessionConfig bare_config(int max_steps = 5) {
    SessionConfig c;
    c.task = Task{"Press the button", "https://example.test/", "bare", {}};
    c.flags = {false, false, true, true};
    c.max_steps = max_steps;
    return c;
}

SessionDeps bare_deps(std::shared_ptr<ModelBackend> action) {
    SessionDeps deps;
    deps.gateway = std::make_shared<ModelGateway>(std::map<ModelRole, std::shared_ptr<ModelBackend>>{{ModelRole::action, action}});
    deps.environment = std::make_unique<SimulatedSite>(SitePack::from_json(
        pack_json(Json::array({element_json("b", "button", {100, 100, 200, 200})}),
                  Json::array({{{"from", "home"}, {"on", {{"op", "click"}, {"element", "b"}}}, {"set_text", "pressed"}}}))));
    return deps;
}

std::string click_call(int x, int y) {
    return tool_call({{"action", "left_click"}, {"coordinate", {x, y}}, {"description", "press"}});
}

std::string terminate_call() { return tool_call({{"action", "terminate"}, {"coordinate", {500, 500}}, {"status", "success"}, {"description", "done"}}); }

class WalledSite final : public Environment {
public:
    explicit WalledSite(SimulatedSite inner) : inner_(std::move(inner)) {}
    Capabilities capabilities() const override { return inner_.capabilities(); }
    PageSnapshot snapshot() override {
        ++snapshots;
        return inner_.snapshot();
    }
    std::optional<std::string> read_value(const std::string& key) override { return inner_.read_value(key); }
    bool blocked() override { return snapshots >= 2; }
    int snapshots = 0;

protected:
    std::optional<ExecError> execute(const EnvOp& op) override { return inner_.apply(op); }

private:
    SimulatedSite inner_;
};

}  // namespace

TEST_CASE("the recipe fixture succeeds in five steps through the newsletter modal") {
    auto t = run_session(allrecipes());
    CHECK(t.status == FinalStatus::success);
    REQUIRE(t.steps.size() == 5);
    CHECK(t.steps[2].snapshot_before.modal_open);
    CHECK_FALSE(t.steps[2].snapshot_after.modal_open);
    CHECK(t.steps[2].outcome.success);
    REQUIRE(t.steps[4].action);
    CHECK(t.steps[4].action->kind == ActionKind::terminate);
    auto lines = trajectory_lines(t);
    CHECK(lines.size() == 7);
    CHECK(lines.front()["type"] == "header");
    CHECK(lines.back()["type"] == "footer");
    CHECK(lines.back()["status"] == "success");
    CHECK(t.final_checklist);
    check_accounting(t);
}

TEST_CASE("the permit fixture succeeds in ten steps") {
    auto t = run_session(recreation());
    CHECK(t.status == FinalStatus::success);
    REQUIRE(t.steps.size() == 10);
    REQUIRE(t.steps.back().action);
    CHECK(t.steps.back().action->kind == ActionKind::terminate);
    CHECK(t.steps.back().action->status == TerminateStatus::success);
    check_accounting(t);
}

TEST_CASE("runs are byte-identical") {
    CHECK(canonical_log(run_session(allrecipes())) == canonical_log(run_session(allrecipes())));
    CHECK(canonical_log(run_session(recreation())) == canonical_log(run_session(recreation())));
}

TEST_CASE("initialization happens before the first action") {
    auto t = run_session(allrecipes());
    CHECK(count(t.counters.init_calls, ModelRole::planner) >= 1);
    CHECK(count(t.counters.init_calls, ModelRole::checklist) >= 1);
    CHECK(count(t.counters.init_calls, ModelRole::action) == 0);
    CHECK(sum_step_calls(t, ModelRole::planner) == 0);
    CHECK_FALSE(t.plan.directives.empty());
    REQUIRE(t.initial_checklist);
    for (const auto& s : t.steps) CHECK(s.model_calls.action >= 1);
}

TEST_CASE("each step's prompt carries the previous checklist and history") {
    auto t = run_session(recreation());
    REQUIRE(t.steps.size() == t.step_checklists.size());
    REQUIRE(t.steps.size() == t.digest_lengths.size());
    CHECK(t.steps[0].user_prompt.find(render_checklist_context(*t.initial_checklist)) != std::string::npos);
    CHECK(t.steps[0].user_prompt.find("step 1:") == std::string::npos);
    for (std::size_t i = 1; i < t.steps.size(); ++i) {
        CAPTURE(i);
        REQUIRE(t.step_checklists[i - 1]);
        CHECK(t.steps[i].user_prompt.find(render_checklist_context(*t.step_checklists[i - 1])) != std::string::npos);
        CHECK(t.steps[i].user_prompt.find("step " + std::to_string(i + 1) + ":") == std::string::npos);
        // With W=5 the window is flushed after steps 5 and 10; otherwise the last step is in RECENT.
        if (i % 5 != 0) CHECK(t.steps[i].user_prompt.find(render_step_line(t.steps[i - 1])) != std::string::npos);
        else CHECK(t.steps[i].user_prompt.find("SUMMARY:") != std::string::npos);
    }
}

TEST_CASE("turning one module off leaves the others untouched") {
    auto full = run_session(allrecipes());
    SUBCASE("no planning") {
        auto c = allrecipes();
        c.flags.eip = false;
        auto t = run_session(c);
        CHECK(count(t.counters.calls, ModelRole::planner) == 0);
        CHECK(t.plan.directives.empty());
        CHECK(count(t.counters.init_calls, ModelRole::checklist) == count(full.counters.init_calls, ModelRole::checklist));
        check_accounting(t);
    }
    SUBCASE("no checklist") {
        auto c = allrecipes();
        c.flags.checklist = false;
        auto t = run_session(c);
        CHECK(count(t.counters.calls, ModelRole::checklist) == 0);
        CHECK_FALSE(t.initial_checklist);
        CHECK(count(t.counters.init_calls, ModelRole::planner) == count(full.counters.init_calls, ModelRole::planner));
        CHECK(t.plan.directives == full.plan.directives);
        check_accounting(t);
    }
    SUBCASE("no memory") {
        auto c = allrecipes();
        c.flags.memory = false;
        auto t = run_session(c);
        CHECK(count(t.counters.calls, ModelRole::summarizer) == 0);
        CHECK(t.counters.distillations == 0);
        CHECK(t.initial_checklist->items.size() == full.initial_checklist->items.size());
        check_accounting(t);
    }
    SUBCASE("no grounding fallbacks") {
        auto c = allrecipes();
        c.flags.moge_fallbacks = false;
        auto t = run_session(c);
        for (const auto& s : t.steps) CHECK(s.attempts.size() <= 1);
        CHECK(t.plan.directives == full.plan.directives);
        check_accounting(t);
    }
}

TEST_CASE("every ablation row keeps call accounting exact and respects the step budget") {
    for (const char* pack : {"allrecipes.json", "allrecipes_iframe.json", "petfinder.json"}) {
        for (const auto& row : ablation_rows()) {
            CAPTURE(pack);
            CAPTURE(row.name);
            auto c = pack_session_config(fixture(pack));
            apply_row(c, row);
            c.max_steps = 12;
            auto t = run_session(c);
            CHECK(t.steps.size() <= 12u);
            check_accounting(t);
        }
    }
}

TEST_CASE("initialization failures are raised before any step") {
    SUBCASE("unbound role") {
        auto c = allrecipes();
        SessionDeps deps;
        deps.gateway = std::make_shared<ModelGateway>(std::map<ModelRole, std::shared_ptr<ModelBackend>>{{ModelRole::action, constant("x")}});
        CHECK_THROWS_AS(run_session(c, std::move(deps)), InitFailure);
    }
    SUBCASE("bad pack") {
        auto c = allrecipes();
        c.pack = fixture("invalid/broken.json");
        CHECK_THROWS_AS(run_session(c), InitFailure);
    }
    SUBCASE("zero window") {
        auto c = allrecipes();
        c.window_size = 0;
        CHECK_THROWS_AS(run_session(c), InitFailure);
    }
    SUBCASE("no environment") {
        auto c = allrecipes();
        c.pack.reset();
        CHECK_THROWS_AS(run_session(c), InitFailure);
    }
    SUBCASE("missing corpus") {
        auto c = allrecipes();
        c.corpus = fixture("no-such-corpus");
        CHECK_THROWS_AS(run_session(c), InitFailure);
    }
}

TEST_CASE("the step budget ends a run at step_limit") {
    auto t = run_session(bare_config(3), bare_deps(constant(click_call(900, 900))));
    CHECK(t.status == FinalStatus::step_limit);
    CHECK(t.steps.size() == 3);
    check_accounting(t);
}

TEST_CASE("repeated identical failures feed a warning into the next prompt") {
    auto t = run_session(bare_config(5), bare_deps(constant(click_call(900, 900))));
    REQUIRE(t.steps.size() == 5);
    CHECK_FALSE(t.steps[1].warning);
    REQUIRE(t.steps[2].warning);
    CHECK(t.steps[3].user_prompt.find(kStallWarning) != std::string::npos);
    CHECK(t.steps[2].user_prompt.find(kStallWarning) == std::string::npos);
    CHECK(t.counters.warnings >= 1);
}

TEST_CASE("undecodable output is re-prompted once") {
    SUBCASE("recovered") {
        auto q = std::make_shared<QueueBackend>(std::vector<std::string>{"I will click", click_call(150, 150), terminate_call()});
        auto t = run_session(bare_config(), bare_deps(q));
        CHECK(t.status == FinalStatus::success);
        CHECK(t.steps[0].model_calls.action == 2);
        CHECK(t.steps[0].outcome.success);
        CHECK(t.counters.parse_failures == 0);
        CHECK(q->requests[1].user.find("<tool_call>") != std::string::npos);
    }
    SUBCASE("still broken") {
        auto q = std::make_shared<QueueBackend>(std::vector<std::string>{"no", "still no", terminate_call()});
        auto t = run_session(bare_config(), bare_deps(q));
        CHECK(t.counters.parse_failures == 1);
        CHECK_FALSE(t.steps[0].action);
        CHECK(t.steps[0].outcome.error->code == ErrorCode::ModelOutputInvalid);
        CHECK(t.status == FinalStatus::success);
        CHECK(t.steps.size() == 2);
    }
}

TEST_CASE("an unavailable action model stops the run") {
    auto q = std::make_shared<QueueBackend>(std::vector<std::string>{click_call(150, 150)});
    auto t = run_session(bare_config(), bare_deps(q));
    CHECK(t.status == FinalStatus::failure);
    REQUIRE(t.steps.size() == 2);
    CHECK(t.steps[1].outcome.error->code == ErrorCode::ModelUnavailable);
    CHECK(t.stop_reason.rfind("action model unavailable", 0) == 0);
}

TEST_CASE("an access wall ends the run as blocked without recording the step") {
    auto deps = bare_deps(constant(click_call(150, 150)));
    auto site = dynamic_cast<SimulatedSite*>(deps.environment.get());
    deps.environment = std::make_unique<WalledSite>(std::move(*site));
    auto t = run_session(bare_config(), std::move(deps));
    CHECK(t.status == FinalStatus::blocked);
    CHECK(t.steps.size() == 1);
}

TEST_CASE("trajectories are written, read back and replayed") {
    auto t = run_session(allrecipes());
    auto path = std::filesystem::temp_directory_path() / "wayfarer_session_test.jsonl";
    write_trajectory(t, path);
    auto lines = read_log(path);
    CHECK(lines == trajectory_lines(t));
    SimulatedSite env(SitePack::load(fixture("allrecipes.json")));
    auto report = replay_log(lines, env);
    CHECK(report.ok());
    CHECK(report.steps == 5);

    SimulatedSite other(SitePack::load(fixture("recreation.json")));
    CHECK_FALSE(replay_log(lines, other).ok());
    std::filesystem::remove(path);

    CHECK_THROWS_AS(write_trajectory(t, "/nonexistent-dir/x/log.jsonl"), IoError);
    CHECK_THROWS_AS(read_log("/nonexistent-dir/x/log.jsonl"), IoError);
}

TEST_CASE("session configs round-trip, including an unbounded window") {
    auto c = recreation();
    c.window_size = std::nullopt;
    auto j = to_json(c);
    CHECK(j["window"] == "inf");
    auto back = SessionConfig::from_json(j);
    CHECK_FALSE(back.window_size);
    CHECK(to_json(back) == j);
    CHECK(back.flags == c.flags);

    auto bad = j;
    bad["window"] = 0;
    CHECK_THROWS(SessionConfig::from_json(bad).validate());
}

TEST_CASE("ablation rows") {
    const auto& rows = ablation_rows();
    CHECK(rows.size() == 6);
    CHECK(rows.front().name == "full");
    const auto* winf = find_ablation_row("no-memory-winf");
    REQUIRE(winf);
    CHECK_FALSE(winf->window_size);
    CHECK_FALSE(winf->flags.memory);
    CHECK_FALSE(find_ablation_row("no-everything"));
    auto c = allrecipes();
    apply_row(c, *find_ablation_row("no-moge"));
    CHECK_FALSE(c.flags.moge_fallbacks);
    CHECK(c.flags.eip);
    CHECK(c.window_size == kDefaultWindow);
}
