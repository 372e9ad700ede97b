#include "support.hpp"

#include <set>

using namespace wayfarer;
using namespace wayfarer::test;

namespace {

StepRecord step(int index, bool success) {
    StepRecord s;
    s.index = index;
    s.action = click(10 * index % 1000, 20, "step " + std::to_string(index));
    s.outcome.success = success;
    if (!success) s.outcome.error = ExecError{ErrorCode::NoStateChange, "nothing happened"};
    s.snapshot_after.url = "https://example.test/p" + std::to_string(index % 3);
    return s;
}

std::shared_ptr<ModelGateway> summarizer(std::shared_ptr<ModelBackend> backend) {
    return std::make_shared<ModelGateway>(std::map<ModelRole, std::shared_ptr<ModelBackend>>{{ModelRole::summarizer, backend}});
}

std::shared_ptr<ModelGateway> echo_summarizer() {
    return summarizer(repeating({{{"Condense"}, "summary so far"}, {{"did not work"}, "note"}}));
}

}  // namespace

TEST_CASE("steps must arrive in order without gaps") {
    AdaptiveMemory m({3, true}, nullptr, "task");
    m.record_step(step(1, true));
    CHECK_THROWS_AS(m.record_step(step(3, true)), IndexGap);
    CHECK_THROWS_AS(m.record_step(step(1, true)), IndexGap);
    CHECK_NOTHROW(m.record_step(step(2, true)));
    CHECK(m.last_index() == 2);
}

TEST_CASE("a zero window is rejected") {
    CHECK_THROWS_AS(AdaptiveMemory({0, true}, nullptr, "task"), std::invalid_argument);
}

TEST_CASE("chunk accounting, window bound and failure persistence over random traces") {
    std::mt19937 rng(5);
    for (std::size_t w : {1u, 3u, 5u, 10u}) {
        for (int trial = 0; trial < 25; ++trial) {
            int t_len = 1 + static_cast<int>(rng() % 100);
            AdaptiveMemory m({w, true}, echo_summarizer(), "task");
            std::set<int> failing;
            for (int i = 1; i <= t_len; ++i) {
                bool ok = rng() % 3 != 0;
                if (!ok) failing.insert(i);
                m.record_step(step(i, ok));
                CHECK(m.window().size() <= w);
            }
            CHECK(m.chunk_index() == static_cast<std::size_t>(t_len) / w);
            CHECK(m.window().size() == static_cast<std::size_t>(t_len) % w);
            std::set<int> in_window;
            for (const auto& s : m.window()) in_window.insert(s.index);
            std::set<int> evicted_failing, noted;
            for (int i : failing)
                if (!in_window.count(i)) evicted_failing.insert(i);
            for (const auto& n : m.failure_buffer())
                if (!in_window.count(n.step_index)) noted.insert(n.step_index);
            CHECK(evicted_failing == noted);
        }
    }
}

TEST_CASE("distillation sees the previous summary and only this chunk's failure notes") {
    auto q = std::make_shared<QueueBackend>(std::vector<std::string>{"note one", "S1", "note four", "S2"});
    AdaptiveMemory m({3, true}, summarizer(q), "Find cats");
    m.record_step(step(1, false));
    m.record_step(step(2, true));
    m.record_step(step(3, true));
    CHECK(m.summary() == "S1");
    m.record_step(step(4, false));
    m.record_step(step(5, true));
    m.record_step(step(6, true));
    CHECK(m.summary() == "S2");
    REQUIRE(q->requests.size() == 4);
    const auto& first = q->requests[1].user;
    CHECK(first.find("step 1 (left_click): note one") != std::string::npos);
    CHECK(first.find("Previous summary:\n(none)") != std::string::npos);
    const auto& second = q->requests[3].user;
    CHECK(second.find("S1") != std::string::npos);
    CHECK(second.find("step 4 (left_click): note four") != std::string::npos);
    CHECK(second.find("note one") == std::string::npos);
    CHECK(second.find("step 4: left_click") != std::string::npos);
    CHECK(second.find("step 3: left_click") == std::string::npos);
}

TEST_CASE("without a summarizer, summaries and notes fall back to mechanical text") {
    AdaptiveMemory m({2, true}, nullptr, "task");
    m.record_step(step(1, false));
    m.record_step(step(2, true));
    CHECK(m.mechanical_summaries() == 1);
    CHECK(m.summary().find("Steps 1-2: left_click, left_click.") != std::string::npos);
    CHECK(m.summary().find("1 failure(s).") != std::string::npos);
    REQUIRE(m.failure_buffer().size() == 1);
    CHECK(m.failure_buffer()[0].mechanical);
    CHECK(m.failure_buffer()[0].text == "step 1: left_click at [10,20] produced no state change");

    AdaptiveMemory down({2, true}, summarizer(std::make_shared<QueueBackend>(std::vector<std::string>{})), "task");
    down.record_step(step(1, true));
    down.record_step(step(2, true));
    CHECK(down.mechanical_summaries() == 1);
    CHECK(down.chunk_index() == 1);
}

TEST_CASE("the digest has summary, recent failure notes and the raw window") {
    AdaptiveMemory m({3, true}, echo_summarizer(), "task");
    for (int i = 1; i <= 13; ++i) m.record_step(step(i, i % 2 == 1));
    auto digest = m.render_history_digest();
    CHECK(digest.rfind("SUMMARY:\nsummary so far", 0) == 0);
    auto failures = digest.substr(digest.find("FAILURES:"));
    CHECK(failures.find("- step 12 (left_click): note") != std::string::npos);
    CHECK(failures.find("- step 2 (left_click)") == std::string::npos);
    CHECK(failures.find("- step 4 (left_click)") != std::string::npos);
    CHECK(digest.find("RECENT:\nstep 13: left_click at [130,20] (step 13) -> ok; url https://example.test/p1") !=
          std::string::npos);
    CHECK(m.failure_buffer().size() == 6);
}

TEST_CASE("the digest is a pure function of the trace") {
    auto run = [] {
        AdaptiveMemory m({4, true}, echo_summarizer(), "task");
        for (int i = 1; i <= 11; ++i) m.record_step(step(i, i % 3 != 0));
        return m.render_history_digest();
    };
    CHECK(run() == run());
}

TEST_CASE("memory off keeps a plain recency window without summaries or notes") {
    auto gw = echo_summarizer();
    AdaptiveMemory m({3, false}, gw, "task");
    for (int i = 1; i <= 7; ++i) m.record_step(step(i, false));
    CHECK(m.window().size() == 3);
    CHECK(m.window().front().index == 5);
    CHECK(m.summary().empty());
    CHECK(m.failure_buffer().empty());
    CHECK(m.chunk_index() == 0);
    CHECK(gw->total_calls() == 0);
}

TEST_CASE("memory off with an unbounded window grows the digest linearly") {
    AdaptiveMemory m({std::nullopt, false}, nullptr, "task");
    std::vector<std::size_t> lengths;
    for (int i = 1; i <= 40; ++i) {
        m.record_step(step(i, true));
        lengths.push_back(m.render_history_digest().size());
    }
    CHECK(m.window().size() == 40);
    for (std::size_t i = 1; i < lengths.size(); ++i) CHECK(lengths[i] > lengths[i - 1]);

    AdaptiveMemory bounded({5, true}, echo_summarizer(), "task");
    for (int i = 1; i <= 40; ++i) bounded.record_step(step(i, true));
    CHECK(bounded.render_history_digest().size() < lengths.back());
}

TEST_CASE("step lines mark failures and unparsed steps") {
    auto s = step(3, false);
    CHECK(render_step_line(s) == "step 3: left_click at [30,20] (step 3) -> FAILED (NoStateChange); url https://example.test/p0");
    s.action.reset();
    s.snapshot_after.url.clear();
    CHECK(render_step_line(s) == "step 3: (no valid action) -> FAILED (NoStateChange)");
}
