#include "wayfarer/session.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <fstream>
#include <iostream>

using namespace wayfarer;
namespace fs = std::filesystem;

namespace {

struct RunOptions {
    std::string config;
    std::string pack;
    std::string browser;
    std::string models;
    std::string corpus;
    std::string instruction;
    std::string url;
    std::string window;
    std::string out = "trajectory.jsonl";
    int max_steps = 0;
    bool no_eip = false;
    bool no_checklist = false;
    bool no_memory = false;
    bool no_moge = false;
    bool live_search = false;
};

Json load_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    auto j = Json::parse(in, nullptr, false);
    if (j.is_discarded()) throw std::runtime_error(path.string() + " is not valid JSON");
    return j;
}

std::optional<std::size_t> parse_window(const std::string& text) {
    if (text == "inf") return std::nullopt;
    auto n = std::stoul(text);
    if (n == 0) throw std::invalid_argument("--window must be positive or 'inf'");
    return n;
}

SessionConfig build_config(const RunOptions& o) {
    SessionConfig c;
    if (!o.config.empty()) c = SessionConfig::from_json(load_json(o.config), fs::path(o.config).parent_path());
    if (!o.pack.empty()) {
        c.pack = o.pack;
        c.browser.reset();
    }
    if (c.pack) {
        auto defaults = pack_session_config(*c.pack);
        if (c.task.instruction.empty()) c.task = defaults.task;
        if (!c.models) c.models = defaults.models;
        if (!c.corpus) c.corpus = defaults.corpus;
    }
    if (!o.browser.empty()) {
        BrowserConfig b = c.browser.value_or(BrowserConfig{});
        b.endpoint = o.browser;
        c.browser = b;
        c.pack.reset();
    }
    if (!o.models.empty()) c.models = o.models;
    if (!o.corpus.empty()) c.corpus = o.corpus;
    if (!o.instruction.empty()) c.task.instruction = o.instruction;
    if (!o.url.empty()) c.task.target_url = o.url;
    if (!o.window.empty()) c.window_size = parse_window(o.window);
    if (o.max_steps > 0) c.max_steps = o.max_steps;
    if (o.no_eip) c.flags.eip = false;
    if (o.no_checklist) c.flags.checklist = false;
    if (o.no_memory) c.flags.memory = false;
    if (o.no_moge) c.flags.moge_fallbacks = false;
    if (o.live_search) c.live_search = true;
    return c;
}

int cmd_run(const RunOptions& o) {
    SessionConfig config;
    try {
        config = build_config(o);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    Trajectory traj;
    try {
        traj = run_session(config);
    } catch (const InitFailure& e) {
        std::cerr << "initialization failed: " << e.what() << "\n";
        return 3;
    }
    int code = traj.status == FinalStatus::success ? 0 : 1;
    try {
        write_trajectory(traj, o.out);
    } catch (const IoError& e) {
        std::cerr << "warning: " << e.what() << "\n";
        code = code ? code : 4;
    }
    std::cout << "status: " << to_string(traj.status) << " after " << traj.steps.size() << " step(s)\n";
    std::cout << "reason: " << traj.stop_reason << "\n";
    std::cout << "trajectory: " << o.out << "\n";
    return code;
}

int cmd_replay(const std::string& log_path, const std::string& pack_override) {
    try {
        auto lines = read_log(log_path);
        if (lines.empty() || lines.front().value("type", "") != "header") {
            std::cerr << "error: " << log_path << " has no header line\n";
            return 2;
        }
        std::string pack = pack_override;
        if (pack.empty()) {
            const auto& p = lines.front()["config"]["pack"];
            if (!p.is_string()) {
                std::cerr << "error: the log was not recorded against a site pack; pass --pack\n";
                return 2;
            }
            pack = p.get<std::string>();
        }
        SimulatedSite site(SitePack::load(pack));
        auto report = replay_log(lines, site);
        if (report.ok()) {
            std::cout << "replay ok: " << report.steps << " step(s) reproduced\n";
            return 0;
        }
        std::cout << "replay diverged at step(s):";
        for (int i : report.mismatched_steps) std::cout << " " << i;
        std::cout << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

int cmd_ablate(const std::string& dir, std::vector<std::string> row_names, int max_steps, const std::string& out_dir) {
    std::vector<fs::path> packs;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") packs.push_back(entry.path());
    }
    if (ec) {
        std::cerr << "error: cannot list " << dir << ": " << ec.message() << "\n";
        return 2;
    }
    std::sort(packs.begin(), packs.end());
    if (packs.empty()) {
        std::cerr << "error: no site packs in " << dir << "\n";
        return 2;
    }
    std::vector<const AblationRow*> rows;
    if (row_names.empty()) {
        for (const auto& r : ablation_rows()) rows.push_back(&r);
    } else {
        for (const auto& name : row_names) {
            const auto* row = find_ablation_row(name);
            if (!row) {
                std::cerr << "error: unknown ablation row '" << name << "'\n";
                return 2;
            }
            rows.push_back(row);
        }
    }
    if (!out_dir.empty()) fs::create_directories(out_dir);

    bool init_failed = false;
    std::printf("%-42s", "configuration");
    for (const auto& p : packs) std::printf(" %-18s", p.stem().string().c_str());
    std::printf(" %s\n", "success rate");
    for (const auto* row : rows) {
        int ok = 0;
        std::printf("%-42s", row->label.c_str());
        for (const auto& pack : packs) {
            std::string cell;
            try {
                auto config = pack_session_config(pack);
                apply_row(config, *row);
                if (max_steps > 0) config.max_steps = max_steps;
                auto traj = run_session(config);
                ok += traj.status == FinalStatus::success;
                cell = std::string(to_string(traj.status)) + " (" + std::to_string(traj.steps.size()) + ")";
                if (!out_dir.empty())
                    write_trajectory(traj, fs::path(out_dir) / (pack.stem().string() + "." + row->name + ".jsonl"));
            } catch (const std::exception& e) {
                init_failed = true;
                cell = "init-failure";
                spdlog::error("{} / {}: {}", row->name, pack.filename().string(), e.what());
            }
            std::printf(" %-18s", cell.c_str());
        }
        std::printf(" %5.1f%%\n", 100.0 * ok / static_cast<double>(packs.size()));
    }
    return init_failed ? 1 : 0;
}

int cmd_validate(const std::vector<std::string>& files) {
    int bad = 0;
    for (const auto& f : files) {
        try {
            auto pack = SitePack::load(f);
            std::cout << f << ": ok (" << pack.pages.size() << " pages, " << pack.transitions.size() << " transitions)\n";
        } catch (const PackInvalid& e) {
            ++bad;
            std::cout << f << ": invalid: " << e.what() << "\n";
        }
    }
    return bad ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wayfarer: web agent runtime"};
    app.require_subcommand(1);
    std::string log_level = "warn";
    app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off")->capture_default_str();

    RunOptions run;
    auto* run_cmd = app.add_subcommand("run", "run one session");
    run_cmd->add_option("--config", run.config, "session config (JSON)");
    run_cmd->add_option("--pack", run.pack, "simulated site pack");
    run_cmd->add_option("--browser", run.browser, "remote-debugging endpoint, e.g. http://127.0.0.1:9222");
    run_cmd->add_option("--models", run.models, "model role bindings (JSON)");
    run_cmd->add_option("--corpus", run.corpus, "knowledge corpus directory");
    run_cmd->add_option("--instruction", run.instruction, "task instruction");
    run_cmd->add_option("--url", run.url, "task target URL");
    run_cmd->add_option("--max-steps", run.max_steps, "step budget");
    run_cmd->add_option("--window", run.window, "memory window size or 'inf'");
    run_cmd->add_option("--out", run.out, "trajectory log path")->capture_default_str();
    run_cmd->add_flag("--no-eip", run.no_eip, "disable planning");
    run_cmd->add_flag("--no-checklist", run.no_checklist, "disable the task checklist");
    run_cmd->add_flag("--no-memory", run.no_memory, "disable summaries and failure notes");
    run_cmd->add_flag("--no-moge", run.no_moge, "disable grounding fallbacks");
    run_cmd->add_flag("--live-search", run.live_search, "let the planner model search the web");

    std::string replay_log_path;
    std::string replay_pack;
    auto* replay_cmd = app.add_subcommand("replay", "re-apply a logged trajectory to its pack and compare snapshots");
    replay_cmd->add_option("trajectory", replay_log_path, "trajectory log")->required();
    replay_cmd->add_option("--pack", replay_pack, "override the pack recorded in the log");

    std::string packs_dir;
    std::vector<std::string> rows;
    int ablate_steps = 0;
    std::string ablate_out;
    auto* ablate_cmd = app.add_subcommand("ablate", "run the ablation matrix over a directory of packs");
    ablate_cmd->add_option("--packs", packs_dir, "directory of site packs")->required();
    ablate_cmd->add_option("--flags", rows, "rows to run (full, no-checklist, no-memory-w5, no-memory-winf, no-eip, no-moge)")
        ->delimiter(',');
    ablate_cmd->add_option("--max-steps", ablate_steps, "step budget per session");
    ablate_cmd->add_option("--out-dir", ablate_out, "write each trajectory here");

    std::vector<std::string> pack_files;
    auto* validate_cmd = app.add_subcommand("validate-pack", "lint site packs");
    validate_cmd->add_option("packs", pack_files, "pack files")->required();

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(spdlog::level::from_str(log_level));

    if (*run_cmd) return cmd_run(run);
    if (*replay_cmd) return cmd_replay(replay_log_path, replay_pack);
    if (*ablate_cmd) return cmd_ablate(packs_dir, rows, ablate_steps, ablate_out);
    if (*validate_cmd) return cmd_validate(pack_files);
    return 2;
}
