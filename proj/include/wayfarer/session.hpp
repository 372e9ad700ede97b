#pragma once

// One agent session: initialization (plan + checklist) followed by the
// observe/act/verify loop, and the trajectory log it produces.

#include "wayfarer/browser.hpp"
#include "wayfarer/checklist.hpp"
#include "wayfarer/environment.hpp"
#include "wayfarer/memory.hpp"
#include "wayfarer/model_gateway.hpp"
#include "wayfarer/outcome.hpp"
#include "wayfarer/planner.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace wayfarer {

inline constexpr int kDefaultMaxSteps = 30;

struct AblationFlags {
    bool eip = true;
    bool checklist = true;
    bool memory = true;
    bool moge_fallbacks = true;
    friend bool operator==(const AblationFlags&, const AblationFlags&) = default;
};

struct SessionConfig {
    Task task;
    int max_steps = kDefaultMaxSteps;
    std::optional<std::size_t> window_size = kDefaultWindow;  // nullopt = unbounded
    AblationFlags flags;
    std::optional<std::filesystem::path> pack;
    std::optional<BrowserConfig> browser;
    std::optional<std::filesystem::path> models;
    std::optional<std::filesystem::path> corpus;
    bool live_search = false;
    PatternConfig patterns;

    // Config file form; relative paths resolve against `base_dir`.
    static SessionConfig from_json(const Json& j, const std::filesystem::path& base_dir = {});
    // Throws std::invalid_argument.
    void validate() const;
};
Json to_json(const SessionConfig& config);

// Defaults taken from a site pack: its task, models config and corpus. Throws PackInvalid.
SessionConfig pack_session_config(const std::filesystem::path& pack_path);

// One row of the ablation matrix: a named flag setting plus window size.
struct AblationRow {
    std::string name;   // CLI spelling, e.g. "no-eip"
    std::string label;  // table caption
    AblationFlags flags;
    std::optional<std::size_t> window_size = kDefaultWindow;
};
const std::vector<AblationRow>& ablation_rows();
const AblationRow* find_ablation_row(std::string_view name);
void apply_row(SessionConfig& config, const AblationRow& row);

enum class FinalStatus { success, failure, step_limit, blocked };
std::string_view to_string(FinalStatus status);

struct SessionCounters {
    std::map<ModelRole, long> calls;       // whole session, per role
    std::map<ModelRole, long> init_calls;  // initialization phase only
    long distillations = 0;
    long mechanical_summaries = 0;
    long warnings = 0;
    long parse_failures = 0;
    long sync_degraded = 0;
};

struct Trajectory {
    SessionConfig config;
    Plan plan;
    std::optional<Checklist> initial_checklist;
    std::optional<Checklist> final_checklist;
    std::vector<StepRecord> steps;
    std::vector<std::optional<Checklist>> step_checklists;  // state after each step's sync
    std::vector<std::size_t> digest_lengths;                 // history digest size fed to each step's prompt
    FinalStatus status = FinalStatus::failure;
    std::string stop_reason;
    SessionCounters counters;
};

class InitFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Pre-built collaborators. Anything left null is built from the config.
struct SessionDeps {
    std::shared_ptr<ModelGateway> gateway;
    std::unique_ptr<Environment> environment;
    std::shared_ptr<KnowledgeSource> knowledge;
};

// Throws InitFailure when a role binding or the environment cannot be set up;
// everything after initialization is recorded in the trajectory instead.
Trajectory run_session(const SessionConfig& config);
Trajectory run_session(const SessionConfig& config, SessionDeps deps);

// Canonical log: header line, one line per step, footer line.
std::vector<Json> trajectory_lines(const Trajectory& trajectory);
std::string canonical_log(const Trajectory& trajectory);
// Throws IoError; the trajectory itself is unaffected.
void write_trajectory(const Trajectory& trajectory, const std::filesystem::path& path);

struct ReplayReport {
    int steps = 0;
    std::vector<int> mismatched_steps;
    bool ok() const { return mismatched_steps.empty(); }
};

// Re-issues each logged step's environment operations on `env` and compares
// the resulting snapshot with the logged snapshot_after.
ReplayReport replay_log(const std::vector<Json>& lines, Environment& env);
std::vector<Json> read_log(const std::filesystem::path& path);

}  // namespace wayfarer
