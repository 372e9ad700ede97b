#pragma once

// Initialization-phase planning: retrieve site how-to material and condense it
// into a short list of abstract directives for the action model.

#include "wayfarer/domain.hpp"
#include "wayfarer/model_gateway.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace wayfarer {

struct KnowledgeDoc {
    std::string source_url;
    std::string title;
    std::string body;
    std::string retrieved_for;  // site domain
};

inline constexpr std::size_t kMinDirectives = 2;
inline constexpr std::size_t kMaxDirectives = 4;

struct Plan {
    std::vector<std::string> directives;
    std::vector<std::string> provenance;  // source_url of each doc used
    bool abstract_only = true;
    bool low_confidence = false;  // synthesized without any retrieved docs
    bool fallback = false;        // model output rejected; generic directives used
};

// Numbered directive lines; empty for an empty plan (planning disabled).
std::string render_strategic_reasoning(const Plan& plan);

// True if the directive contains selector- or coordinate-like tokens: '#', '//',
// 'css=', 'xpath', or a bracketed integer pair such as [120, 40].
bool violates_abstraction(std::string_view directive);

Plan fallback_plan();

class SourceUnavailable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class KnowledgeSource {
public:
    virtual ~KnowledgeSource() = default;
    // Throws SourceUnavailable when the backing source cannot be reached.
    virtual std::vector<KnowledgeDoc> retrieve(const Task& task) = 0;
};

// Directory of `<anything>.json` files, each {"domain": ..., "docs": [{source_url, title, body}]}.
class CannedCorpus final : public KnowledgeSource {
public:
    explicit CannedCorpus(const std::filesystem::path& dir);
    explicit CannedCorpus(std::map<std::string, std::vector<KnowledgeDoc>> by_domain);
    std::vector<KnowledgeDoc> retrieve(const Task& task) override;

private:
    std::map<std::string, std::vector<KnowledgeDoc>> by_domain_;
};

// Delegates search to the planner model's own browsing capability.
class LiveSearch final : public KnowledgeSource {
public:
    explicit LiveSearch(std::shared_ptr<ModelGateway> gateway) : gateway_(std::move(gateway)) {}
    std::vector<KnowledgeDoc> retrieve(const Task& task) override;

private:
    std::shared_ptr<ModelGateway> gateway_;
};

// Never throws on source failure: logs and returns an empty list. Documents are
// ranked by word overlap with the instruction (stable for ties).
std::vector<KnowledgeDoc> retrieve_knowledge(const Task& task, KnowledgeSource& source);

// Always returns 2..4 directives: re-prompts once when the first output is out of
// range or selector-like, truncates a second over-long output to its first four,
// and falls back to generic directives when the second output is still rejected.
Plan synthesize_plan(const Task& task, const std::vector<KnowledgeDoc>& docs, ModelGateway& gateway);

// Accepts {"directives": [...]} JSON (optionally wrapped in prose or fences) or
// one directive per line with optional bullets/numbering.
std::vector<std::string> parse_directives(std::string_view model_output);

}  // namespace wayfarer
