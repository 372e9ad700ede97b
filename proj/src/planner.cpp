#include "wayfarer/planner.hpp"

#include "wayfarer/templates.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

namespace wayfarer {

namespace {

std::set<std::string> content_words(std::string_view text) {
    std::set<std::string> words;
    std::string current;
    auto flush = [&] {
        if (current.size() >= 3) words.insert(current);
        current.clear();
    };
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else {
            flush();
        }
    }
    flush();
    return words;
}

std::string render_documents(const std::vector<KnowledgeDoc>& docs) {
    if (docs.empty()) return "(no reference material found; rely on common conventions for this kind of site)";
    std::ostringstream out;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        out << "[" << i + 1 << "] " << docs[i].title << " (" << docs[i].source_url << ")\n" << docs[i].body << "\n";
    }
    return out.str();
}

std::string strip_bullet(std::string line) {
    line = normalize_whitespace(line);
    static const std::regex bullet(R"(^(?:[-*•]|\d+[.)]|\(\d+\))\s*)");
    line = std::regex_replace(line, bullet, "", std::regex_constants::format_first_only);
    if (line.size() >= 2 && line.front() == '"' && line.back() == '"') line = line.substr(1, line.size() - 2);
    return line;
}

}  // namespace

std::string render_strategic_reasoning(const Plan& plan) {
    std::ostringstream out;
    for (std::size_t i = 0; i < plan.directives.size(); ++i) {
        if (i) out << "\n";
        out << i + 1 << ". " << plan.directives[i];
    }
    return out.str();
}

bool violates_abstraction(std::string_view directive) {
    auto lower = to_lower(directive);
    if (lower.find('#') != std::string::npos) return true;
    if (lower.find("//") != std::string::npos) return true;
    if (lower.find("css=") != std::string::npos) return true;
    if (lower.find("xpath") != std::string::npos) return true;
    static const std::regex pair(R"([\[\(]\s*-?\d+\s*,\s*-?\d+\s*[\]\)])");
    return std::regex_search(lower, pair);
}

Plan fallback_plan() {
    Plan plan;
    plan.directives = {"Explore the main navigation menu for a section that matches the task.",
                       "If nothing relevant appears there, scroll to the page footer and check its links."};
    plan.fallback = true;
    return plan;
}

std::vector<std::string> parse_directives(std::string_view model_output) {
    std::vector<std::string> out;
    Json j = extract_json_object(model_output);
    if (!j.is_discarded() && j.contains("directives") && j["directives"].is_array()) {
        for (const auto& d : j["directives"]) {
            if (d.is_string()) {
                auto s = strip_bullet(d.get<std::string>());
                if (!s.empty()) out.push_back(s);
            }
        }
        return out;
    }
    std::istringstream in{std::string(model_output)};
    std::string line;
    while (std::getline(in, line)) {
        auto s = strip_bullet(line);
        if (s.empty() || s.rfind("```", 0) == 0) continue;
        if (s.back() == ':') continue;  // headings such as "Plan:"
        out.push_back(s);
    }
    return out;
}

// ---- knowledge sources ----

CannedCorpus::CannedCorpus(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw SourceUnavailable("corpus directory not found: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& path : files) {
        std::ifstream in(path);
        Json j = Json::parse(in, nullptr, false);
        if (j.is_discarded() || !j.contains("domain")) {
            spdlog::warn("skipping malformed corpus file {}", path.string());
            continue;
        }
        auto domain = j["domain"].get<std::string>();
        if (domain.rfind("www.", 0) == 0) domain = domain.substr(4);
        domain = to_lower(domain);
        for (const auto& d : j.value("docs", Json::array())) {
            KnowledgeDoc doc{d.value("source_url", std::string{}), d.value("title", std::string{}),
                             d.value("body", std::string{}), domain};
            if (normalize_whitespace(doc.body).empty()) continue;
            by_domain_[domain].push_back(std::move(doc));
        }
    }
}

CannedCorpus::CannedCorpus(std::map<std::string, std::vector<KnowledgeDoc>> by_domain)
    : by_domain_(std::move(by_domain)) {}

std::vector<KnowledgeDoc> CannedCorpus::retrieve(const Task& task) {
    auto it = by_domain_.find(url_host(task.target_url));
    if (it == by_domain_.end()) return {};
    return it->second;
}

std::vector<KnowledgeDoc> LiveSearch::retrieve(const Task& task) {
    ModelRequest request;
    request.system = "You are a research assistant with web search.";
    request.user = templates::fill(templates::knowledge_search(),
                                   {{"site", url_host(task.target_url)}, {"task", task.instruction}});
    std::string text;
    try {
        text = gateway_->complete(ModelRole::planner, request).text;
    } catch (const ModelError& e) {
        throw SourceUnavailable(e.what());
    }
    Json j = extract_json_object(text);
    if (j.is_discarded() || !j.contains("docs") || !j["docs"].is_array())
        throw SourceUnavailable("search result is not {\"docs\": [...]}");
    std::vector<KnowledgeDoc> docs;
    for (const auto& d : j["docs"]) {
        if (!d.is_object()) continue;
        KnowledgeDoc doc{d.value("source_url", std::string{}), d.value("title", std::string{}),
                         d.value("body", std::string{}), url_host(task.target_url)};
        if (!normalize_whitespace(doc.body).empty()) docs.push_back(std::move(doc));
    }
    return docs;
}

std::vector<KnowledgeDoc> retrieve_knowledge(const Task& task, KnowledgeSource& source) {
    std::vector<KnowledgeDoc> docs;
    try {
        docs = source.retrieve(task);
    } catch (const SourceUnavailable& e) {
        spdlog::warn("SourceUnavailable: {}", e.what());
        return {};
    }
    auto query = content_words(task.instruction);
    std::vector<std::pair<std::size_t, std::size_t>> scored;  // (score, original index)
    for (std::size_t i = 0; i < docs.size(); ++i) {
        auto words = content_words(docs[i].title + " " + docs[i].body);
        std::size_t score = 0;
        for (const auto& w : query) score += words.count(w);
        scored.emplace_back(score, i);
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<KnowledgeDoc> ranked;
    for (const auto& [score, i] : scored) ranked.push_back(docs[i]);
    return ranked;
}

Plan synthesize_plan(const Task& task, const std::vector<KnowledgeDoc>& docs, ModelGateway& gateway) {
    ModelRequest request;
    request.system = "You turn how-to material into short, abstract browsing plans.";
    request.user = templates::fill(templates::plan_synthesis(), {{"task", task.instruction},
                                                                 {"target_url", task.target_url},
                                                                 {"documents", render_documents(docs)}});
    std::vector<std::string> provenance;
    for (const auto& d : docs) provenance.push_back(d.source_url);

    for (int attempt = 0; attempt < 2; ++attempt) {
        std::string text;
        try {
            text = gateway.complete(ModelRole::planner, request).text;
        } catch (const ModelError& e) {
            spdlog::warn("plan synthesis unavailable ({}); using fallback plan", e.what());
            break;
        }
        auto directives = parse_directives(text);
        bool selector_like = std::any_of(directives.begin(), directives.end(), violates_abstraction);
        bool out_of_range = directives.size() < kMinDirectives || directives.size() > kMaxDirectives;
        if (attempt == 0 && (selector_like || out_of_range)) {
            request.user += "\n\nYour previous answer was rejected: give 2-4 directives, by visible label only, "
                            "with no selectors or coordinates.";
            continue;
        }
        if (selector_like || directives.size() < kMinDirectives) {
            spdlog::warn("PlanRejected: planner output rejected twice; using fallback plan");
            break;
        }
        directives.resize(std::min(directives.size(), kMaxDirectives));
        Plan plan;
        plan.directives = std::move(directives);
        plan.provenance = provenance;
        plan.low_confidence = docs.empty();
        return plan;
    }
    Plan plan = fallback_plan();
    plan.provenance = provenance;
    plan.low_confidence = docs.empty();
    return plan;
}

}  // namespace wayfarer
