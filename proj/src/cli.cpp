#include "netgent/cli.hpp"

#include "netgent/chat_backend.hpp"
#include "netgent/config.hpp"
#include "netgent/controller.hpp"
#include "netgent/oracle_backend.hpp"
#include "netgent/sim_env.hpp"
#include "netgent/webdriver_env.hpp"
#include "netgent/workflow.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

namespace netgent::cli {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string dollars(double v) {
    std::ostringstream out;
    out << "$" << std::fixed << std::setprecision(4) << v;
    return out.str();
}

// <stem>.sim.json -> <stem>.oracle.json
std::string default_playbook_path(const std::string& sim_path) {
    const std::string suffix = ".sim.json";
    if (sim_path.size() > suffix.size() &&
        sim_path.compare(sim_path.size() - suffix.size(), suffix.size(), suffix) == 0) {
        return sim_path.substr(0, sim_path.size() - suffix.size()) + ".oracle.json";
    }
    return sim_path + ".oracle.json";
}

struct CommonOptions {
    std::string config_file;
    std::map<std::string, std::string> file_values;

    void load() {
        if (!config_file.empty()) {
            file_values = config::load_config_file(config_file);
        } else if (std::filesystem::exists("netgent.toml")) {
            file_values = config::load_config_file("netgent.toml");
        }
    }
};

struct BackendOptions {
    std::string backend = "oracle";
    std::string oracle_playbook;
    int64_t oracle_tokens_per_state = -1;   // -1 = playbook default
    std::vector<std::string> oracle_token_overrides;
    std::string llm_endpoint;
    std::string llm_model;
};

synth::OracleCosts oracle_costs_from(const BackendOptions& opts, const nlohmann::json& playbook) {
    synth::OracleCosts costs = synth::OracleBackend::costs_from_playbook(playbook);
    if (opts.oracle_tokens_per_state >= 0) costs.default_tokens = opts.oracle_tokens_per_state;
    for (const std::string& spec : opts.oracle_token_overrides) {
        const size_t eq = spec.find('=');
        if (eq == std::string::npos)
            throw config::ConfigError("--oracle-tokens expects state=count, got " + spec);
        costs.per_state[spec.substr(0, eq)] = std::stoll(spec.substr(eq + 1));
    }
    return costs;
}

std::unique_ptr<synth::Synthesizer> make_backend(const BackendOptions& opts,
                                                 const CommonOptions& common,
                                                 const std::string& sim_fixture) {
    if (opts.backend == "oracle") {
        std::string playbook_path = opts.oracle_playbook;
        if (playbook_path.empty() && !sim_fixture.empty())
            playbook_path = default_playbook_path(sim_fixture);
        if (playbook_path.empty())
            throw config::ConfigError("oracle backend needs --oracle-playbook (or a --sim fixture "
                                      "with a sibling .oracle.json)");
        nlohmann::json playbook;
        {
            std::ifstream in(playbook_path);
            if (!in) throw config::ConfigError("cannot open oracle playbook " + playbook_path);
            in >> playbook;
        }
        return std::make_unique<synth::OracleBackend>(playbook,
                                                      oracle_costs_from(opts, playbook));
    }
    if (opts.backend == "chat") {
        synth::ChatBackendConfig cfg;
        const auto endpoint = config::resolve_setting(
            opts.llm_endpoint.empty() ? std::nullopt : std::make_optional(opts.llm_endpoint),
            nullptr, common.file_values, "llm.endpoint");
        if (!endpoint) throw config::ConfigError("chat backend needs llm.endpoint");
        cfg.endpoint = *endpoint;
        if (auto model = config::resolve_setting(
                opts.llm_model.empty() ? std::nullopt : std::make_optional(opts.llm_model),
                nullptr, common.file_values, "llm.model"))
            cfg.model = *model;
        if (auto dir = config::resolve_setting(std::nullopt, nullptr, common.file_values,
                                               "llm.prompt_dir"))
            cfg.prompt_dir = *dir;
        if (auto mm = config::resolve_setting(std::nullopt, nullptr, common.file_values,
                                              "llm.multimodal"))
            cfg.multimodal = (*mm == "true" || *mm == "1");
        return std::make_unique<synth::ChatBackend>(cfg);
    }
    throw config::ConfigError("unknown backend '" + opts.backend + "' (oracle|chat)");
}

using EnvFactory = std::function<std::unique_ptr<env::Environment>(uint64_t seed)>;

EnvFactory make_env_factory(const std::string& sim_fixture, const std::string& browser_url,
                            const CommonOptions& common) {
    if (!sim_fixture.empty()) {
        auto app = std::make_shared<sim::SimApp>(sim::load_sim_app(sim_fixture));
        return [app](uint64_t seed) -> std::unique_ptr<env::Environment> {
            return std::make_unique<sim::SimSession>(*app, seed);
        };
    }
    const auto url = config::resolve_setting(
        browser_url.empty() ? std::nullopt : std::make_optional(browser_url),
        "NETGENT_BROWSER_URL", common.file_values, "browser.url");
    if (!url) throw config::ConfigError("need --sim <fixture> or --browser <url>");
    const auto proxy =
        config::resolve_setting(std::nullopt, "NETGENT_PROXY", common.file_values, "proxy");
    const auto profile =
        config::resolve_setting(std::nullopt, nullptr, common.file_values, "browser.profile_dir");
    return [=](uint64_t) -> std::unique_ptr<env::Environment> {
        env::WebDriverConfig cfg;
        cfg.endpoint_url = *url;
        cfg.proxy = proxy;
        cfg.profile_dir = profile;
        return std::make_unique<env::WebDriverEnv>(cfg);
    };
}

void print_cost_report(std::ostream& out, const CostReport& report) {
    out << "scenario: " << report.scenario << "\n";
    for (const auto& run : report.per_run) {
        out << "run " << run.run_index << ": tokens " << run.tokens.total() << " (input "
            << run.tokens.input_tokens << ", output " << run.tokens.output_tokens << "), cost "
            << dollars(run.dollars) << "\n";
    }
    out << "aggregate: runs " << report.aggregate.runs << ", tokens "
        << report.aggregate.total_tokens.total() << ", cost "
        << dollars(report.aggregate.total_dollars) << ", hit_rate " << std::fixed
        << std::setprecision(3) << report.aggregate.hit_rate << "\n";
}

int cmd_validate(const std::string& workflow_file, std::ostream& out, std::ostream& err) {
    workflow::AbstractWorkflow w;
    try {
        w = workflow::parse_workflow(read_file(workflow_file));
    } catch (const Error& e) {
        err << "invalid workflow: " << e.what() << "\n";
        return kExitFailure;
    }
    out << "workflow " << w.workflow_id << " (app " << w.app_label << ", entry " << w.entry_url
        << ", max_steps " << w.max_steps << ")\n";
    for (const auto& s : w.states) {
        out << "  [" << s.declaration_index << "] " << s.name << (s.is_end ? " (end)" : "")
            << "\n";
    }
    out << w.states.size() << " states valid\n";
    return kExitOk;
}

struct RunOutcome {
    control::RunTrace trace;
    std::string trace_path;
};

int cmd_run(const std::string& workflow_file, const std::string& sim_fixture,
            const std::string& browser_url, const std::string& repo_dir,
            const BackendOptions& backend_opts, CommonOptions& common, int runs, uint64_t seed,
            const std::string& trace_dir, int parallel, std::ostream& out, std::ostream& err) {
    common.load();
    const workflow::AbstractWorkflow w = workflow::parse_workflow(read_file(workflow_file));
    const EnvFactory make_env = make_env_factory(sim_fixture, browser_url, common);
    const auto backend = make_backend(backend_opts, common, sim_fixture);
    repo::StateRepo state_repo{repo_dir};

    std::vector<RunOutcome> outcomes(static_cast<size_t>(runs));
    std::mutex io_mutex;
    auto one_run = [&](int i) {
        control::RunConfig cfg;
        cfg.seed = seed + static_cast<uint64_t>(i);
        cfg.realism.seed = cfg.seed;
        auto environment = make_env(cfg.seed);
        control::RunTrace trace =
            control::run_workflow(w, *environment, state_repo, *backend, cfg);
        std::string path;
        if (!trace_dir.empty()) path = control::save_trace(trace, trace_dir);
        std::lock_guard<std::mutex> lock(io_mutex);
        outcomes[static_cast<size_t>(i)] = RunOutcome{std::move(trace), std::move(path)};
    };

    if (parallel > 1) {
        int next = 0;
        while (next < runs) {
            std::vector<std::thread> batch;
            for (int k = 0; k < parallel && next < runs; ++k, ++next)
                batch.emplace_back(one_run, next);
            for (auto& t : batch) t.join();
        }
    } else {
        for (int i = 0; i < runs; ++i) one_run(i);
    }

    CostReport report;
    report.scenario = "run " + w.workflow_id + " x" + std::to_string(runs);
    int64_t hits = 0, lookups = 0;
    bool any_aborted = false;
    for (int i = 0; i < runs; ++i) {
        const auto& trace = outcomes[static_cast<size_t>(i)].trace;
        report.per_run.push_back(PerRunCost{i, trace.totals.tokens, trace.totals.cost});
        report.aggregate.total_tokens += trace.totals.tokens;
        report.aggregate.total_dollars += trace.totals.cost;
        hits += trace.totals.hits;
        lookups += trace.totals.hits + trace.totals.misses;
        if (!trace.reached_end()) {
            any_aborted = true;
            err << "run " << i << " aborted: " << trace.abort_reason() << "\n";
        }
        if (!outcomes[static_cast<size_t>(i)].trace_path.empty())
            out << "trace: " << outcomes[static_cast<size_t>(i)].trace_path << "\n";
    }
    report.aggregate.runs = runs;
    report.aggregate.hit_rate =
        lookups > 0 ? static_cast<double>(hits) / static_cast<double>(lookups) : 0.0;
    print_cost_report(out, report);
    return any_aborted ? kExitFailure : kExitOk;
}

int cmd_drift_experiment(const std::string& workflow_file, const std::string& sim_fixture,
                         const std::string& drift_spec, const std::string& repo_dir,
                         const BackendOptions& backend_opts, CommonOptions& common, uint64_t seed,
                         int max_regenerated, std::ostream& out, std::ostream& err) {
    common.load();
    if (backend_opts.backend != "oracle")
        throw config::ConfigError("drift-experiment computes cold-equivalents from oracle costs; "
                                  "use --backend oracle");
    const workflow::AbstractWorkflow w = workflow::parse_workflow(read_file(workflow_file));
    const sim::SimApp base_app = sim::load_sim_app(sim_fixture);
    const auto backend = make_backend(backend_opts, common, sim_fixture);
    repo::StateRepo state_repo{repo_dir};

    // Warm the cache with a cold run when the repository has nothing yet.
    if (state_repo.entry_count(w.workflow_id) == 0) {
        control::RunConfig cfg;
        cfg.seed = seed;
        cfg.realism.seed = seed;
        sim::SimSession session(base_app, seed);
        const auto cold = control::run_workflow(w, session, state_repo, *backend, cfg);
        if (!cold.reached_end()) {
            err << "cold run aborted: " << cold.abort_reason() << "\n";
            return kExitFailure;
        }
        out << "cold run: " << cold.totals.synthesized_states << " states synthesized, "
            << cold.totals.tokens.total() << " tokens\n";
    }

    sim::DriftOp op;
    sim::SimApp drifted;
    try {
        op = sim::parse_drift_spec(drift_spec);
        drifted = sim::apply_drift(base_app, op);
    } catch (const sim::TargetNotFound& e) {
        err << "drift target not found: " << e.what() << "\n";
        return kExitFailure;
    }

    control::RunConfig cfg;
    cfg.seed = seed + 1;
    cfg.realism.seed = cfg.seed;
    sim::SimSession session(drifted, cfg.seed);
    const control::RunTrace trace = control::run_workflow(w, session, state_repo, *backend, cfg);
    if (!trace.reached_end()) {
        err << "drift run aborted: " << trace.abort_reason() << "\n";
        return kExitFailure;
    }

    // Cold-equivalent: synthesizing every non-end state from scratch at the
    // configured oracle costs.
    nlohmann::json playbook;
    {
        std::ifstream in(backend_opts.oracle_playbook.empty()
                             ? default_playbook_path(sim_fixture)
                             : backend_opts.oracle_playbook);
        in >> playbook;
    }
    const synth::OracleCosts costs = oracle_costs_from(backend_opts, playbook);
    DriftReport report;
    for (const auto& s : w.states) {
        if (!s.is_end) report.tokens_cold_equivalent += costs.for_state(s.name);
    }
    report.states_regenerated = trace.totals.synthesized_states;
    report.states_replayed = trace.totals.hits;
    report.tokens_drift_run = trace.totals.tokens.total();
    report.ratio = report.tokens_cold_equivalent > 0
                       ? static_cast<double>(report.tokens_drift_run) /
                             static_cast<double>(report.tokens_cold_equivalent)
                       : 0.0;

    out << "drift: " << drift_spec << "\n";
    out << "states_regenerated = " << report.states_regenerated << "\n";
    out << "states_replayed = " << report.states_replayed << "\n";
    out << "tokens_drift_run = " << report.tokens_drift_run << "\n";
    out << "tokens_cold_equivalent = " << report.tokens_cold_equivalent << "\n";
    out << "ratio = " << std::fixed << std::setprecision(4) << report.ratio << "\n";

    if (report.states_regenerated > max_regenerated) {
        err << "regeneration exceeded locality bound (" << report.states_regenerated << " > "
            << max_regenerated << ")\n";
        return kExitFailure;
    }
    return kExitOk;
}

int cmd_cost_report(int64_t tokens_per_run, double rate, int64_t runs, int64_t states,
                    int64_t tokens_per_state, int64_t weeks, int64_t drifted_per_week,
                    std::ostream& out) {
    const double per_run = static_cast<double>(tokens_per_run) * rate * 1e-6;
    const double no_cache_total = static_cast<double>(runs) * per_run;
    const double cold_compile =
        static_cast<double>(states) * static_cast<double>(tokens_per_state) * rate * 1e-6;
    const double annual_full = static_cast<double>(weeks) * cold_compile;
    const double annual_cached = static_cast<double>(weeks) * static_cast<double>(drifted_per_week) *
                                 static_cast<double>(tokens_per_state) * rate * 1e-6;

    out << std::fixed << std::setprecision(6);
    out << "per_run_cost = " << per_run << "\n";
    out << "no_cache_total(" << runs << " runs) = " << std::setprecision(2) << no_cache_total
        << "\n";
    out << std::setprecision(6);
    out << "cold_compile_cost(" << states << " states) = " << cold_compile << "\n";
    out << "annual_no_cache_recompile(" << weeks << " weeks) = " << annual_full << "\n";
    out << "annual_cached_recompile(" << drifted_per_week << "/week) = " << annual_cached << "\n";
    return kExitOk;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"netgent: compile-then-replay browser workflow engine"};
    app.require_subcommand(1);

    CommonOptions common;
    app.add_option("--config", common.config_file, "key=value config file (netgent.toml)");

    // validate
    std::string v_workflow;
    auto* validate = app.add_subcommand("validate", "parse and validate a workflow file");
    validate->add_option("workflow", v_workflow, "workflow file")->required();

    // run
    std::string r_workflow, r_sim, r_browser, r_repo = "repo", r_trace_dir = "traces";
    BackendOptions r_backend;
    int r_runs = 1, r_parallel = 1;
    uint64_t r_seed = 1;
    auto* run = app.add_subcommand("run", "execute a workflow against sim or remote browser");
    run->add_option("workflow", r_workflow, "workflow file")->required();
    run->add_option("--sim", r_sim, "sim fixture file");
    run->add_option("--browser", r_browser, "remote browser endpoint url");
    run->add_option("--repo", r_repo, "state repository directory");
    run->add_option("--backend", r_backend.backend, "oracle|chat");
    run->add_option("--runs", r_runs, "number of runs");
    run->add_option("--seed", r_seed, "seed of the first run (then seed+1, ...)");
    run->add_option("--trace-out", r_trace_dir, "trace output directory ('' disables)");
    run->add_option("--parallel", r_parallel, "number of parallel runs");
    run->add_option("--oracle-playbook", r_backend.oracle_playbook, "oracle playbook file");
    run->add_option("--oracle-tokens-per-state", r_backend.oracle_tokens_per_state,
                    "oracle default tokens per synthesized state");
    run->add_option("--oracle-tokens", r_backend.oracle_token_overrides,
                    "per-state override state=count (repeatable)");
    run->add_option("--llm-endpoint", r_backend.llm_endpoint, "chat completion endpoint");
    run->add_option("--llm-model", r_backend.llm_model, "chat model name");

    // drift-experiment
    std::string d_workflow, d_sim, d_drift, d_repo = "repo";
    BackendOptions d_backend;
    uint64_t d_seed = 1;
    int d_max_regenerated = 1;
    auto* drift = app.add_subcommand("drift-experiment",
                                     "warm the cache, apply UI drift, measure regeneration");
    drift->add_option("workflow", d_workflow, "workflow file")->required();
    drift->add_option("--sim", d_sim, "sim fixture file")->required();
    drift->add_option("--drift", d_drift, "drift spec, e.g. require_pin or "
                                          "rename_id:login:#login-btn:signin-btn")
        ->required();
    drift->add_option("--repo", d_repo, "state repository directory");
    drift->add_option("--seed", d_seed, "seed");
    drift->add_option("--max-regenerated", d_max_regenerated, "locality bound");
    drift->add_option("--oracle-playbook", d_backend.oracle_playbook, "oracle playbook file");
    drift->add_option("--oracle-tokens-per-state", d_backend.oracle_tokens_per_state,
                      "oracle default tokens per synthesized state");
    drift->add_option("--oracle-tokens", d_backend.oracle_token_overrides,
                      "per-state override state=count (repeatable)");

    // cost-report
    int64_t c_tokens_per_run = 278000, c_runs = 1000000, c_states = 10,
            c_tokens_per_state = 42600, c_weeks = 52, c_drifted = 1;
    double c_rate = 0.35;
    auto* cost = app.add_subcommand("cost-report", "token-economics arithmetic");
    cost->add_option("--tokens-per-run", c_tokens_per_run, "tokens consumed by one uncached run");
    cost->add_option("--rate", c_rate, "dollars per million tokens (blended)");
    cost->add_option("--runs", c_runs, "number of runs");
    cost->add_option("--states", c_states, "states in the workflow");
    cost->add_option("--tokens-per-state", c_tokens_per_state, "tokens per synthesized state");
    cost->add_option("--weeks", c_weeks, "weeks of operation");
    cost->add_option("--drifted-states-per-week", c_drifted, "states drifting per week");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return kExitOk;
        }
        err << e.what() << "\n";
        return kExitConfig;
    }

    try {
        if (validate->parsed()) return cmd_validate(v_workflow, out, err);
        if (run->parsed())
            return cmd_run(r_workflow, r_sim, r_browser, r_repo, r_backend, common, r_runs,
                           r_seed, r_trace_dir, r_parallel, out, err);
        if (drift->parsed())
            return cmd_drift_experiment(d_workflow, d_sim, d_drift, d_repo, d_backend, common,
                                        d_seed, d_max_regenerated, out, err);
        if (cost->parsed())
            return cmd_cost_report(c_tokens_per_run, c_rate, c_runs, c_states,
                                   c_tokens_per_state, c_weeks, c_drifted, out);
    } catch (const config::ConfigError& e) {
        err << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitConfig;
}

} // namespace netgent::cli
