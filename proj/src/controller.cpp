#include "netgent/controller.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

namespace netgent::control {
namespace {

bool parse_number(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

std::optional<double> read_progress_value(const page::PageSnapshot& snap,
                                          const page::SelectorAst& selector,
                                          const std::string& attribute) {
    const auto nodes = page::query_selector(snap.root, selector);
    if (nodes.empty()) return std::nullopt;
    const auto it = nodes.front()->attributes.find(attribute);
    if (it == nodes.front()->attributes.end()) return std::nullopt;
    double v = 0.0;
    if (!parse_number(it->second, v)) return std::nullopt;
    return v;
}

} // namespace

const char* event_kind_name(EventKind k) {
    switch (k) {
        case EventKind::observe: return "observe";
        case EventKind::cache_hit: return "cache_hit";
        case EventKind::cache_miss: return "cache_miss";
        case EventKind::synthesized: return "synthesized";
        case EventKind::executed: return "executed";
        case EventKind::exec_failed: return "exec_failed";
        case EventKind::invalidated: return "invalidated";
        case EventKind::end_detected: return "end_detected";
        case EventKind::aborted: return "aborted";
    }
    return "observe";
}

bool progress_increasing(const std::vector<double>& values) {
    if (values.size() < 2) return false;
    for (size_t i = 1; i < values.size(); ++i) {
        if (!(values[i] > values[i - 1])) return false;
    }
    return true;
}

EndRealization end_realization_from(const workflow::AbstractState& s) {
    EndRealization er;
    er.abstract_name = s.name;

    auto hint = [&](const char* key) -> std::optional<std::string> {
        auto it = s.hints.find(key);
        if (it == s.hints.end() || it->second.empty()) return std::nullopt;
        return it->second;
    };

    if (auto glob = hint("end_url_glob")) {
        er.detectors.detectors.push_back(detect::Detector{detect::UrlPayload{*glob}, true});
    }
    if (auto text = hint("end_text")) {
        er.detectors.detectors.push_back(
            detect::Detector{detect::TextPayload{*text, std::nullopt}, true});
    }
    if (auto sel = hint("end_selector")) {
        er.detectors.detectors.push_back(
            detect::Detector{detect::ElementPayload{page::parse_selector(*sel)}, true});
    }
    const auto prog_sel = hint("progress_selector");
    const auto prog_attr = hint("progress_attribute");
    if (prog_sel && prog_attr) {
        const page::SelectorAst ast = page::parse_selector(*prog_sel);
        er.progress = std::make_pair(ast, *prog_attr);
        er.detectors.detectors.push_back(detect::Detector{detect::ElementPayload{ast}, true});
    }
    er.configured = !er.detectors.detectors.empty();
    return er;
}

bool check_end(env::Environment& environment, const EndRealization& er, const RunConfig& cfg) {
    if (!er.configured) return false;
    page::PageSnapshot snap = environment.observe();
    if (!detect::match_detector_set(er.detectors, snap).matched) return false;
    if (!er.progress) return true;

    const auto& [selector, attribute] = *er.progress;
    std::vector<double> values;
    for (int poll = 0; poll < cfg.end_progress_polls; ++poll) {
        if (poll > 0) {
            const auto r = environment.perform(actions::Sleep{cfg.poll_interval_ms}, cfg.realism);
            if (!r.ok) return false;
            snap = environment.observe();
        }
        const auto v = read_progress_value(snap, selector, attribute);
        if (!v) return false;   // missing or non-numeric attribute
        values.push_back(*v);
    }
    return progress_increasing(values);
}

RunTrace run_workflow(const workflow::AbstractWorkflow& w, env::Environment& environment,
                      repo::StateRepo& state_repo, synth::Synthesizer& backend,
                      const RunConfig& cfg) {
    RunTrace trace;
    trace.workflow_id = w.workflow_id;
    trace.seed = cfg.seed;

    auto emit = [&](TraceEvent e) { trace.events.push_back(std::move(e)); };
    auto finish = [&]() {
        trace.totals = recompute_totals(trace, cfg.cost_model);
        return trace;
    };
    auto abort_run = [&](int64_t tick, const std::string& why) {
        emit(TraceEvent{tick, EventKind::aborted, std::nullopt, std::nullopt, std::nullopt, why});
        return finish();
    };

    std::vector<EndRealization> ends;
    for (const auto& s : w.states) {
        if (s.is_end) {
            EndRealization er = end_realization_from(s);
            if (er.configured) ends.push_back(std::move(er));
        }
    }

    // Implicit step 0: reach the entry URL.
    {
        page::PageSnapshot first = environment.observe();
        if (first.url != w.entry_url) {
            const auto nav = environment.perform(actions::Navigate{w.entry_url}, cfg.realism);
            if (!nav.ok) {
                emit(TraceEvent{first.captured_at, EventKind::observe, std::nullopt, std::nullopt,
                                std::nullopt, first.url});
                return abort_run(first.captured_at,
                                 "cannot reach entry url: " + nav.failure->detail);
            }
        }
    }

    const int max_steps = cfg.max_steps > 0 ? cfg.max_steps : w.max_steps;
    std::map<std::string, int> resynth_count;
    std::vector<std::string> history;
    std::optional<std::pair<std::string, env::StepResult>> last_transition;

    // Livelock guard state: same (state, url) without env_revision progress.
    std::string guard_key;
    int64_t guard_revision = -1;
    int guard_repeats = 0;

    for (int step = 0; step < max_steps; ++step) {
        page::PageSnapshot snap = environment.observe();
        emit(TraceEvent{snap.captured_at, EventKind::observe, std::nullopt, std::nullopt,
                        std::nullopt, snap.url});

        for (const EndRealization& er : ends) {
            if (check_end(environment, er, cfg)) {
                emit(TraceEvent{environment.observe().captured_at, EventKind::end_detected,
                                er.abstract_name, std::nullopt, std::nullopt, snap.url});
                return finish();
            }
        }

        // Cache-first: replay the best-ranked hit; synthesize only on a miss.
        auto matches = state_repo.lookup(w.workflow_id, std::nullopt, snap);
        repo::ConcreteState current;
        if (!matches.empty()) {
            current = matches.front().first;
            emit(TraceEvent{snap.captured_at, EventKind::cache_hit, current.abstract_name,
                            current.state_id, std::nullopt,
                            "score " + std::to_string(matches.front().second.score)});
        } else {
            emit(TraceEvent{snap.captured_at, EventKind::cache_miss, std::nullopt, std::nullopt,
                            std::nullopt, snap.url});
            synth::SynthesisRequest req{w, snap, last_transition, history, std::nullopt};
            try {
                synth::SynthesisResult made = synth::synthesize(req, backend, cfg.synth_options);
                state_repo.store_state(made.concrete);
                emit(TraceEvent{snap.captured_at, EventKind::synthesized, made.selected_state,
                                made.concrete.state_id, made.usage, "cache miss"});
                current = std::move(made.concrete);
            } catch (const Error& e) {
                return abort_run(snap.captured_at, std::string("synthesis failed: ") + e.what());
            }
        }

        // Execute, regenerating only this state on failure.
        env::StepResult exec;
        while (true) {
            exec = env::run_program(environment, current.program, cfg.realism);
            if (exec.ok) {
                emit(TraceEvent{exec.observed_after.captured_at, EventKind::executed,
                                current.abstract_name, current.state_id, std::nullopt, ""});
                break;
            }
            emit(TraceEvent{exec.observed_after.captured_at, EventKind::exec_failed,
                            current.abstract_name, current.state_id, std::nullopt,
                            std::string(env::failure_kind_name(exec.failure->kind)) + " at " +
                                std::to_string(exec.failure->instruction_index) + ": " +
                                exec.failure->detail});

            const int attempts = ++resynth_count[current.abstract_name];
            if (attempts > cfg.max_resynth_per_state) {
                return abort_run(exec.observed_after.captured_at,
                                 "resynth budget exhausted for state " + current.abstract_name);
            }
            state_repo.invalidate(w.workflow_id, current.state_id,
                                  "execution failure: " + exec.failure->detail);
            emit(TraceEvent{exec.observed_after.captured_at, EventKind::invalidated,
                            current.abstract_name, current.state_id, std::nullopt,
                            exec.failure->detail});

            page::PageSnapshot fresh = environment.observe();
            synth::SynthesisRequest req{w, fresh,
                                        std::make_pair(current.abstract_name, exec), history,
                                        current.abstract_name};
            try {
                synth::SynthesisResult made = synth::synthesize(req, backend, cfg.synth_options);
                state_repo.store_state(made.concrete);
                emit(TraceEvent{fresh.captured_at, EventKind::synthesized, made.selected_state,
                                made.concrete.state_id, made.usage,
                                "regenerated after execution failure"});
                current = std::move(made.concrete);
            } catch (const Error& e) {
                return abort_run(fresh.captured_at,
                                 std::string("regeneration failed: ") + e.what());
            }
        }

        history.push_back(current.abstract_name);
        last_transition = std::make_pair(current.abstract_name, exec);

        const std::string key = current.abstract_name + "\n" + snap.url;
        if (key == guard_key && exec.observed_after.env_revision == guard_revision) {
            if (++guard_repeats > 3) {
                return abort_run(exec.observed_after.captured_at,
                                 "loop detected: state " + current.abstract_name +
                                     " repeats without progress");
            }
        } else {
            guard_key = key;
            guard_repeats = 1;
        }
        guard_revision = exec.observed_after.env_revision;
    }

    const auto last = environment.observe();
    return abort_run(last.captured_at, "max_steps reached (" + std::to_string(max_steps) + ")");
}

nlohmann::ordered_json trace_event_to_json(const TraceEvent& e) {
    nlohmann::ordered_json j;
    j["tick"] = e.tick;
    j["kind"] = event_kind_name(e.kind);
    j["abstract_name"] =
        e.abstract_name ? nlohmann::ordered_json(*e.abstract_name) : nlohmann::ordered_json(nullptr);
    j["state_id"] =
        e.state_id ? nlohmann::ordered_json(*e.state_id) : nlohmann::ordered_json(nullptr);
    if (e.tokens) {
        j["tokens"] = nlohmann::ordered_json{{"input_tokens", e.tokens->input_tokens},
                                             {"output_tokens", e.tokens->output_tokens}};
    } else {
        j["tokens"] = nullptr;
    }
    j["detail"] = e.detail;
    return j;
}

std::string trace_to_jsonl(const RunTrace& trace) {
    std::string out;
    for (const auto& e : trace.events) out += trace_event_to_json(e).dump() + "\n";
    nlohmann::ordered_json totals;
    totals["totals"] = nlohmann::ordered_json{
        {"workflow_id", trace.workflow_id},
        {"seed", trace.seed},
        {"steps", trace.totals.steps},
        {"hits", trace.totals.hits},
        {"misses", trace.totals.misses},
        {"synthesized_states", trace.totals.synthesized_states},
        {"tokens", nlohmann::ordered_json{{"input_tokens", trace.totals.tokens.input_tokens},
                                          {"output_tokens", trace.totals.tokens.output_tokens}}},
        {"cost", trace.totals.cost}};
    out += totals.dump() + "\n";
    return out;
}

RunTotals recompute_totals(const RunTrace& trace, const synth::CostModel& model) {
    RunTotals t;
    for (const auto& e : trace.events) {
        switch (e.kind) {
            case EventKind::observe: ++t.steps; break;
            case EventKind::cache_hit: ++t.hits; break;
            case EventKind::cache_miss: ++t.misses; break;
            case EventKind::synthesized: ++t.synthesized_states; break;
            default: break;
        }
        if (e.tokens) t.tokens += *e.tokens;
    }
    t.cost = synth::cost_dollars(t.tokens, model);
    return t;
}

std::string save_trace(const RunTrace& trace, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const int64_t stamp = repo::now_epoch_ms();
    const std::string name = "trace-" + trace.workflow_id + "-" + std::to_string(trace.seed) +
                             "-" + std::to_string(stamp) + ".jsonl";
    const std::string path = (std::filesystem::path(dir) / name).string();
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write trace file " + path);
    out << trace_to_jsonl(trace);
    return path;
}

} // namespace netgent::control
