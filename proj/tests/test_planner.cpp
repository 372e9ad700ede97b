#include "support.hpp"

using namespace wayfarer;
using namespace wayfarer::test;

namespace {

Task recipe_task() { return Task{"Open the reviews of a recipe with beef sirloin.", "https://www.allrecipes.com/", "", {}}; }

ModelGateway planner_gateway(std::vector<std::string> replies, std::shared_ptr<QueueBackend>* out = nullptr) {
    auto backend = std::make_shared<QueueBackend>(std::move(replies));
    if (out) *out = backend;
    return ModelGateway({{ModelRole::planner, backend}});
}

class ThrowingSource final : public KnowledgeSource {
public:
    std::vector<KnowledgeDoc> retrieve(const Task&) override { throw SourceUnavailable("offline"); }
};

}  // namespace

TEST_CASE("selector and coordinate tokens are flagged") {
    CHECK(violates_abstraction("Click #search-button"));
    CHECK(violates_abstraction("Use //div[@id='x']"));
    CHECK(violates_abstraction("Match css=.btn"));
    CHECK(violates_abstraction("Find it via XPath"));
    CHECK(violates_abstraction("Click at [120, 40]"));
    CHECK(violates_abstraction("Click at (120,40)"));
    CHECK_FALSE(violates_abstraction("Use the search box to look up the recipe."));
    CHECK_FALSE(violates_abstraction("Sort by Oldest Addition, then pick 2 filters."));
}

TEST_CASE("directives parse from JSON or bulleted lines") {
    CHECK(parse_directives("Here:\n```json\n{\"directives\": [\"- Search.\", \"Filter.\"]}\n```") ==
          std::vector<std::string>{"Search.", "Filter."});
    CHECK(parse_directives("Plan:\n1. Search for it.\n2) Open the result.\n- Read reviews.\n\n") ==
          std::vector<std::string>{"Search for it.", "Open the result.", "Read reviews."});
}

TEST_CASE("in-range abstract output is used as is") {
    std::shared_ptr<QueueBackend> q;
    auto gw = planner_gateway({"{\"directives\": [\"Search.\", \"Open.\", \"Review.\"]}"}, &q);
    std::vector<KnowledgeDoc> docs{{"https://help.example/a", "Searching", "Use search.", "allrecipes.com"}};
    auto plan = synthesize_plan(recipe_task(), docs, gw);
    CHECK(plan.directives == std::vector<std::string>{"Search.", "Open.", "Review."});
    CHECK(plan.provenance == std::vector<std::string>{"https://help.example/a"});
    CHECK_FALSE(plan.fallback);
    CHECK_FALSE(plan.low_confidence);
    CHECK(plan.abstract_only);
    CHECK(q->requests.size() == 1);
    CHECK(q->requests[0].user.find("Use search.") != std::string::npos);
}

TEST_CASE("too many directives are re-prompted, then truncated") {
    std::shared_ptr<QueueBackend> q;
    auto gw = planner_gateway({"a.\nb.\nc.\nd.\ne.", "a.\nb.\nc.\nd.\ne.\nf."}, &q);
    auto plan = synthesize_plan(recipe_task(), {}, gw);
    CHECK(plan.directives == std::vector<std::string>{"a.", "b.", "c.", "d."});
    CHECK(plan.low_confidence);
    CHECK(q->requests.size() == 2);
    CHECK(q->requests[1].user.find("rejected") != std::string::npos);
}

TEST_CASE("selector-like output twice yields the fallback plan") {
    auto gw = planner_gateway({"Click #go.\nThen [1, 2].", "Click #go.\nThen xpath."});
    auto plan = synthesize_plan(recipe_task(), {}, gw);
    CHECK(plan.fallback);
    CHECK(plan.directives == fallback_plan().directives);
}

TEST_CASE("too few directives twice yields the fallback plan") {
    auto gw = planner_gateway({"Only one.", "Still one."});
    CHECK(synthesize_plan(recipe_task(), {}, gw).fallback);
}

TEST_CASE("an unavailable planner yields the fallback plan") {
    auto gw = planner_gateway({});
    auto plan = synthesize_plan(recipe_task(), {}, gw);
    CHECK(plan.fallback);
    CHECK(plan.low_confidence);
}

TEST_CASE("every plan has 2 to 4 abstract directives whatever the model says") {
    std::mt19937 rng(3);
    const std::vector<std::string> lines = {"Search for it.", "Click #x.", "Open [3, 4].", "", "Read reviews.",
                                            "Use the filters.", "xpath //a"};
    for (int i = 0; i < 300; ++i) {
        std::vector<std::string> replies;
        for (int r = 0; r < 2; ++r) {
            std::string reply;
            for (int n = rng() % 8; n > 0; --n) reply += lines[rng() % lines.size()] + "\n";
            replies.push_back(reply);
        }
        auto gw = planner_gateway(replies);
        auto plan = synthesize_plan(recipe_task(), {}, gw);
        CHECK(plan.directives.size() >= kMinDirectives);
        CHECK(plan.directives.size() <= kMaxDirectives);
        for (const auto& d : plan.directives) CHECK_FALSE(violates_abstraction(d));
    }
}

TEST_CASE("canned corpus retrieves by domain and ranks by overlap") {
    CannedCorpus corpus(fixture("corpus"));
    auto docs = retrieve_knowledge(recipe_task(), corpus);
    REQUIRE_FALSE(docs.empty());
    for (const auto& d : docs) CHECK(d.retrieved_for == "allrecipes.com");
    Task other{"x", "https://unknown.example/", "", {}};
    CHECK(retrieve_knowledge(other, corpus).empty());
    CHECK_THROWS_AS(CannedCorpus("/nonexistent/corpus"), SourceUnavailable);
}

TEST_CASE("ranking is stable for ties") {
    CannedCorpus corpus(std::map<std::string, std::vector<KnowledgeDoc>>{
        {"allrecipes.com",
         {{"u1", "Unrelated", "nothing", "allrecipes.com"},
          {"u2", "Beef sirloin reviews", "Open reviews of beef sirloin recipe.", "allrecipes.com"},
          {"u3", "Also unrelated", "nothing", "allrecipes.com"}}}});
    auto docs = retrieve_knowledge(recipe_task(), corpus);
    REQUIRE(docs.size() == 3);
    CHECK(docs[0].source_url == "u2");
    CHECK(docs[1].source_url == "u1");
    CHECK(docs[2].source_url == "u3");
}

TEST_CASE("source failures degrade to an empty list") {
    ThrowingSource source;
    CHECK(retrieve_knowledge(recipe_task(), source).empty());
}

TEST_CASE("live search goes through the planner role") {
    auto gw = std::make_shared<ModelGateway>(std::map<ModelRole, std::shared_ptr<ModelBackend>>{
        {ModelRole::planner,
         constant(R"({"docs": [{"source_url": "https://x/1", "title": "T", "body": "B"}, {"title": "empty", "body": " "}]})")}});
    LiveSearch search(gw);
    auto docs = search.retrieve(recipe_task());
    REQUIRE(docs.size() == 1);
    CHECK(docs[0].retrieved_for == "allrecipes.com");
    CHECK(gw->calls(ModelRole::planner) == 1);

    auto bad = std::make_shared<ModelGateway>(
        std::map<ModelRole, std::shared_ptr<ModelBackend>>{{ModelRole::planner, constant("no results")}});
    LiveSearch broken(bad);
    CHECK_THROWS_AS(broken.retrieve(recipe_task()), SourceUnavailable);
}

TEST_CASE("strategic reasoning renders numbered lines") {
    Plan plan;
    plan.directives = {"Search.", "Open."};
    CHECK(render_strategic_reasoning(plan) == "1. Search.\n2. Open.");
}
