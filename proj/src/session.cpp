#include "wayfarer/session.hpp"

#include "wayfarer/grounding.hpp"
#include "wayfarer/protocol.hpp"

#include <spdlog/spdlog.h>

#include <fstream>
#include <sstream>

namespace wayfarer {

namespace {

std::optional<std::filesystem::path> opt_path(const Json& j, const char* key, const std::filesystem::path& base) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    std::filesystem::path p = j[key].get<std::string>();
    if (p.is_relative() && !base.empty()) p = base / p;
    return p;
}

Json path_json(const std::optional<std::filesystem::path>& p) { return p ? Json(p->generic_string()) : Json(nullptr); }

std::map<ModelRole, long> role_counts(const ModelGateway& gateway) {
    std::map<ModelRole, long> out;
    for (auto role : kAllRoles) out[role] = gateway.calls(role);
    return out;
}

Json counts_json(const std::map<ModelRole, long>& counts) {
    Json j = Json::object();
    for (const auto& [role, n] : counts) j[std::string(to_string(role))] = n;
    return j;
}

Json plan_json(const Plan& plan, bool enabled) {
    return Json{{"enabled", enabled},
                {"directives", plan.directives},
                {"provenance", plan.provenance},
                {"abstract_only", plan.abstract_only},
                {"low_confidence", plan.low_confidence},
                {"fallback", plan.fallback}};
}

Json checklist_json(const std::optional<Checklist>& c) { return c ? to_json(*c) : Json(nullptr); }

}  // namespace

std::string_view to_string(FinalStatus status) {
    switch (status) {
        case FinalStatus::success: return "success";
        case FinalStatus::failure: return "failure";
        case FinalStatus::step_limit: return "step_limit";
        case FinalStatus::blocked: return "blocked";
    }
    return "failure";
}

SessionConfig SessionConfig::from_json(const Json& j, const std::filesystem::path& base_dir) {
    SessionConfig c;
    if (j.contains("task")) c.task = task_from_json(j["task"]);
    c.max_steps = j.value("max_steps", kDefaultMaxSteps);
    if (j.contains("window")) {
        const auto& w = j["window"];
        if (w.is_null() || (w.is_string() && w.get<std::string>() == "inf")) c.window_size = std::nullopt;
        else c.window_size = w.get<std::size_t>();
    }
    if (j.contains("flags")) {
        const auto& f = j["flags"];
        c.flags.eip = f.value("eip", true);
        c.flags.checklist = f.value("checklist", true);
        c.flags.memory = f.value("memory", true);
        c.flags.moge_fallbacks = f.value("moge_fallbacks", true);
    }
    c.pack = opt_path(j, "pack", base_dir);
    if (j.contains("browser") && !j["browser"].is_null()) c.browser = BrowserConfig::from_json(j["browser"]);
    c.models = opt_path(j, "models", base_dir);
    c.corpus = opt_path(j, "corpus", base_dir);
    c.live_search = j.value("live_search", false);
    if (j.contains("patterns")) {
        const auto& p = j["patterns"];
        c.patterns.consecutive = p.value("consecutive", c.patterns.consecutive);
        c.patterns.window = p.value("window", c.patterns.window);
        c.patterns.failure_rate = p.value("failure_rate", c.patterns.failure_rate);
    }
    return c;
}

void SessionConfig::validate() const {
    if (max_steps < 1) throw std::invalid_argument("max_steps must be at least 1");
    if (window_size && *window_size == 0) throw std::invalid_argument("window size must be at least 1");
    if (pack && browser) throw std::invalid_argument("choose either a site pack or a browser endpoint, not both");
}

Json to_json(const SessionConfig& c) {
    return Json{{"task", to_json(c.task)},
                {"max_steps", c.max_steps},
                {"window", c.window_size ? Json(*c.window_size) : Json("inf")},
                {"flags",
                 {{"eip", c.flags.eip},
                  {"checklist", c.flags.checklist},
                  {"memory", c.flags.memory},
                  {"moge_fallbacks", c.flags.moge_fallbacks}}},
                {"pack", path_json(c.pack)},
                {"browser", c.browser ? to_json(*c.browser) : Json(nullptr)},
                {"models", path_json(c.models)},
                {"corpus", path_json(c.corpus)},
                {"live_search", c.live_search},
                {"patterns",
                 {{"consecutive", c.patterns.consecutive},
                  {"window", c.patterns.window},
                  {"failure_rate", c.patterns.failure_rate}}}};
}

SessionConfig pack_session_config(const std::filesystem::path& pack_path) {
    auto pack = SitePack::load(pack_path);
    SessionConfig c;
    c.pack = pack_path;
    if (pack.task) c.task = *pack.task;
    c.models = pack.models;
    c.corpus = pack.corpus;
    return c;
}

const std::vector<AblationRow>& ablation_rows() {
    static const std::vector<AblationRow> rows = {
        {"full", "Full configuration", {}, kDefaultWindow},
        {"no-checklist", "w/o Task-Tracking Checklist", {true, false, true, true}, kDefaultWindow},
        {"no-memory-w5", "w/o Adaptive Memory (W=5)", {true, true, false, true}, kDefaultWindow},
        {"no-memory-winf", "w/o Adaptive Memory (W=inf)", {true, true, false, true}, std::nullopt},
        {"no-eip", "w/o Experience-Imitation Planning (EIP)", {false, true, true, true}, kDefaultWindow},
        {"no-moge", "w/o MoGE", {true, true, true, false}, kDefaultWindow},
    };
    return rows;
}

const AblationRow* find_ablation_row(std::string_view name) {
    for (const auto& row : ablation_rows()) {
        if (row.name == name) return &row;
    }
    return nullptr;
}

void apply_row(SessionConfig& config, const AblationRow& row) {
    config.flags = row.flags;
    config.window_size = row.window_size;
}

Trajectory run_session(const SessionConfig& config) { return run_session(config, SessionDeps{}); }

Trajectory run_session(const SessionConfig& config, SessionDeps deps) {
    try {
        config.validate();
        validate_task(config.task);
    } catch (const std::invalid_argument& e) {
        throw InitFailure(e.what());
    }

    auto gateway = deps.gateway;
    if (!gateway) {
        if (!config.models) throw InitFailure("no model bindings configured");
        try {
            gateway = ModelGateway::from_config(ModelsConfig::load(*config.models));
        } catch (const std::exception& e) {
            throw InitFailure(std::string("model bindings: ") + e.what());
        }
    }
    try {
        gateway->require({ModelRole::action});
        if (config.flags.eip) gateway->require({ModelRole::planner});
        if (config.flags.checklist) gateway->require({ModelRole::checklist});
    } catch (const ModelError& e) {
        throw InitFailure(e.what());
    }

    auto env = std::move(deps.environment);
    if (!env) {
        try {
            if (config.pack) env = std::make_unique<SimulatedSite>(SitePack::load(*config.pack));
            else if (config.browser) env = std::make_unique<BrowserEnvironment>(*config.browser);
        } catch (const std::exception& e) {
            throw InitFailure(std::string("environment: ") + e.what());
        }
        if (!env) throw InitFailure("no environment configured");
    }

    auto knowledge = deps.knowledge;
    if (!knowledge && config.flags.eip) {
        try {
            if (config.corpus) knowledge = std::make_shared<CannedCorpus>(*config.corpus);
            else if (config.live_search) knowledge = std::make_shared<LiveSearch>(gateway);
        } catch (const std::exception& e) {
            throw InitFailure(std::string("knowledge corpus: ") + e.what());
        }
    }

    Trajectory traj;
    traj.config = config;
    const auto& task = config.task;

    // Initialization phase.
    if (config.flags.eip) {
        std::vector<KnowledgeDoc> docs;
        if (knowledge) docs = retrieve_knowledge(task, *knowledge);
        traj.plan = synthesize_plan(task, docs, *gateway);
    }
    std::optional<Checklist> checklist;
    if (config.flags.checklist) checklist = generate_checklist(task, *gateway);
    traj.initial_checklist = checklist;
    traj.counters.init_calls = role_counts(*gateway);

    MemoryConfig memory_config;
    memory_config.window_size = config.window_size;
    memory_config.enabled = config.flags.memory;
    AdaptiveMemory memory(memory_config, gateway, task.instruction);
    Grounder grounder(*env, gateway.get(), GroundingConfig{config.flags.moge_fallbacks});
    const auto system_prompt = build_system_prompt(render_strategic_reasoning(traj.plan));
    std::optional<std::string> pending_warning;
    bool stopped = false;

    for (int index = 1; index <= config.max_steps && !stopped; ++index) {
        auto calls_before = role_counts(*gateway);
        env->clear_op_log();
        StepRecord rec;
        rec.index = index;
        auto finish_step = [&]() {
            auto calls_after = role_counts(*gateway);
            auto delta = [&](ModelRole r) { return static_cast<int>(calls_after[r] - calls_before[r]); };
            rec.model_calls = {delta(ModelRole::action), delta(ModelRole::checklist), delta(ModelRole::summarizer),
                               delta(ModelRole::planner)};
            for (const auto& op : env->op_log()) rec.env_ops.push_back(to_json(op));
            traj.steps.push_back(std::move(rec));
            traj.step_checklists.push_back(checklist);
        };

        try {
            auto before = env->snapshot();
            if (env->blocked()) {
                traj.status = FinalStatus::blocked;
                traj.stop_reason = "environment reports an access block";
                break;
            }
            rec.snapshot_before = before;
            rec.snapshot_after = before;

            auto overlay = build_som_overlay(before);
            auto digest = memory.render_history_digest();
            std::vector<std::string> constraints;
            if (pending_warning) constraints.push_back(*pending_warning);
            ModelRequest request;
            request.system = system_prompt;
            request.user = build_user_prompt(task, traj.plan, digest,
                                             checklist ? render_checklist_context(*checklist) : std::string(),
                                             constraints);
            request.observation = render_observation(before, overlay);
            if (overlay.rendered) request.images.push_back(overlay.rendered);
            rec.user_prompt = request.user;
            traj.digest_lengths.push_back(digest.size());

            ToolCallEnvelope envelope;
            try {
                envelope = parse_tool_call(gateway->complete(ModelRole::action, request).text);
                if (!envelope.parsed) {
                    spdlog::warn("step {}: undecodable action ({}), re-prompting", index, envelope.parse_error->message);
                    auto retry = request;
                    retry.user += "\n\n" + reprompt_notice(*envelope.parse_error);
                    envelope = parse_tool_call(gateway->complete(ModelRole::action, retry).text);
                }
            } catch (const ModelError& e) {
                rec.outcome.error = ExecError{ErrorCode::ModelUnavailable, e.what()};
                traj.status = FinalStatus::failure;
                traj.stop_reason = std::string("action model unavailable: ") + e.what();
                stopped = true;
                finish_step();
                break;
            }

            if (!envelope.parsed) {
                ++traj.counters.parse_failures;
                rec.outcome.error = ExecError{ErrorCode::ModelOutputInvalid, envelope.parse_error->message};
                memory.record_step(rec);
                if (checklist) {
                    auto sync = sync_checklist_unparsed(*checklist, rec.outcome, before,
                                                        memory.render_history_digest(), *gateway);
                    if (sync.degraded) ++traj.counters.sync_degraded;
                    checklist = sync.checklist;
                }
            } else {
                const auto& action = *envelope.parsed;
                rec.action = action;
                auto grounded = grounder.ground(action, before);
                rec.outcome = grounded.outcome;
                rec.attempts = grounded.attempts;
                rec.snapshot_after = grounded.after;

                if (action.kind == ActionKind::terminate) {
                    traj.status = action.status == TerminateStatus::success ? FinalStatus::success : FinalStatus::failure;
                    traj.stop_reason = "terminate: " + action.description;
                    stopped = true;
                    finish_step();
                    break;
                }
                memory.record_step(rec);
                if (checklist) {
                    auto sync = sync_checklist(*checklist, action, rec.outcome, rec.snapshot_after,
                                               memory.render_history_digest(), *gateway);
                    if (sync.degraded) ++traj.counters.sync_degraded;
                    checklist = sync.checklist;
                }
            }

            std::vector<StepRecord> recent(traj.steps.end() - std::min<std::ptrdiff_t>(traj.steps.size(), 10),
                                           traj.steps.end());
            recent.push_back(rec);
            auto verdict = analyze_patterns(recent, config.patterns);
            pending_warning.reset();
            if (verdict.stall_warning) {
                rec.warning = std::string(kStallWarning);
                pending_warning = rec.warning;
                ++traj.counters.warnings;
                spdlog::info("step {}: stall warning ({})", index, to_string(verdict.reason));
            }
            if (rec.outcome.error && rec.outcome.error->code == ErrorCode::ProtocolError) {
                traj.status = FinalStatus::failure;
                traj.stop_reason = "environment connection lost: " + rec.outcome.error->message;
                stopped = true;
            }
        } catch (const std::exception& e) {
            rec.outcome.success = false;
            rec.outcome.error = ExecError{ErrorCode::EnvironmentError, e.what()};
            traj.status = FinalStatus::failure;
            traj.stop_reason = std::string("unrecoverable error: ") + e.what();
            stopped = true;
        }
        finish_step();
    }
    if (!stopped && traj.stop_reason.empty()) {
        traj.status = FinalStatus::step_limit;
        traj.stop_reason = "step limit reached";
    }

    traj.final_checklist = checklist;
    traj.counters.calls = role_counts(*gateway);
    traj.counters.distillations = static_cast<long>(memory.chunk_index());
    traj.counters.mechanical_summaries = memory.mechanical_summaries();
    return traj;
}

std::vector<Json> trajectory_lines(const Trajectory& t) {
    std::vector<Json> lines;
    lines.push_back(Json{{"type", "header"},
                         {"config", to_json(t.config)},
                         {"plan", plan_json(t.plan, t.config.flags.eip)},
                         {"checklist", checklist_json(t.initial_checklist)},
                         {"init_calls", counts_json(t.counters.init_calls)}});
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
        auto line = to_json(t.steps[i]);
        line["checklist"] = i < t.step_checklists.size() ? checklist_json(t.step_checklists[i]) : Json(nullptr);
        line["digest_length"] = i < t.digest_lengths.size() ? Json(t.digest_lengths[i]) : Json(nullptr);
        lines.push_back(std::move(line));
    }
    lines.push_back(Json{{"type", "footer"},
                         {"status", std::string(to_string(t.status))},
                         {"stop_reason", t.stop_reason},
                         {"steps", t.steps.size()},
                         {"checklist", checklist_json(t.final_checklist)},
                         {"counters",
                          {{"calls", counts_json(t.counters.calls)},
                           {"distillations", t.counters.distillations},
                           {"mechanical_summaries", t.counters.mechanical_summaries},
                           {"warnings", t.counters.warnings},
                           {"parse_failures", t.counters.parse_failures},
                           {"sync_degraded", t.counters.sync_degraded}}}});
    return lines;
}

std::string canonical_log(const Trajectory& t) {
    std::string out;
    for (const auto& line : trajectory_lines(t)) {
        out += line.dump(-1, ' ', false, Json::error_handler_t::replace);
        out += '\n';
    }
    return out;
}

void write_trajectory(const Trajectory& t, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << canonical_log(t);
    out.flush();
    if (!out) throw IoError("failed writing " + path.string());
}

std::vector<Json> read_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<Json> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = Json::parse(line, nullptr, false);
        if (j.is_discarded()) throw IoError("malformed log line in " + path.string());
        lines.push_back(std::move(j));
    }
    return lines;
}

ReplayReport replay_log(const std::vector<Json>& lines, Environment& env) {
    ReplayReport report;
    for (const auto& line : lines) {
        if (line.value("type", "") != "step") continue;
        ++report.steps;
        for (const auto& op : line.value("env_ops", Json::array())) env.apply(env_op_from_json(op));
        if (to_json(env.snapshot()) != line.at("snapshot_after")) report.mismatched_steps.push_back(line.value("index", 0));
    }
    return report;
}

}  // namespace wayfarer
