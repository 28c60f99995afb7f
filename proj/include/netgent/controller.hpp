#pragma once

#include "netgent/environment.hpp"
#include "netgent/state_repo.hpp"
#include "netgent/synthesis.hpp"
#include "netgent/workflow.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace netgent::control {

struct RunConfig {
    int max_steps = 0;                // 0 = use the workflow's bound
    int max_resynth_per_state = 2;
    int poll_interval_ms = 100;
    int end_progress_polls = 3;
    actions::RealismParams realism;
    uint64_t seed = 0;
    synth::CostModel cost_model{0.0, 0.0, 0.35};
    synth::SynthesisOptions synth_options;
};

enum class EventKind {
    observe,
    cache_hit,
    cache_miss,
    synthesized,
    executed,
    exec_failed,
    invalidated,
    end_detected,
    aborted,
};

const char* event_kind_name(EventKind k);

struct TraceEvent {
    int64_t tick = 0;
    EventKind kind = EventKind::observe;
    std::optional<std::string> abstract_name;
    std::optional<std::string> state_id;
    std::optional<repo::TokenUsage> tokens;
    std::string detail;
};

struct RunTotals {
    int64_t steps = 0;
    int64_t hits = 0;
    int64_t misses = 0;
    int64_t synthesized_states = 0;
    repo::TokenUsage tokens;
    double cost = 0.0;
};

struct RunTrace {
    std::string workflow_id;
    uint64_t seed = 0;
    std::vector<TraceEvent> events;
    RunTotals totals;

    bool reached_end() const {
        return !events.empty() && events.back().kind == EventKind::end_detected;
    }
    std::string abort_reason() const {
        if (events.empty() || events.back().kind != EventKind::aborted) return {};
        return events.back().detail;
    }
};

// True iff the sequence strictly increases; fewer than two observations are
// never evidence of progress.
bool progress_increasing(const std::vector<double>& values);

// End recognition is hint-driven: hint.progress_selector/progress_attribute
// give the "value is advancing" clause; hint.end_url_glob / hint.end_text /
// hint.end_selector add recognition detectors. An end state with no such
// hints is never detected (the run stops at max_steps).
struct EndRealization {
    std::string abstract_name;
    detect::DetectorSet detectors;
    std::optional<std::pair<page::SelectorAst, std::string>> progress;
    bool configured = false;
};

EndRealization end_realization_from(const workflow::AbstractState& s);

// Detectors must match, and when a progress clause is configured the
// attribute must strictly increase across end_progress_polls observations
// taken poll_interval_ms apart.
bool check_end(env::Environment& environment, const EndRealization& er, const RunConfig& cfg);

// The runtime loop: observe -> end-check -> cache lookup -> replay or
// synthesize -> repeat. Failures invalidate only the failing state and
// regenerate it from its abstract rule. Always returns the trace, partial
// on aborts.
RunTrace run_workflow(const workflow::AbstractWorkflow& w, env::Environment& environment,
                      repo::StateRepo& state_repo, synth::Synthesizer& backend,
                      const RunConfig& cfg);

nlohmann::ordered_json trace_event_to_json(const TraceEvent& e);
std::string trace_to_jsonl(const RunTrace& trace);

// Recomputes totals from the event list (steps = observe events; tokens =
// summed event tokens). Used to check trace conservation.
RunTotals recompute_totals(const RunTrace& trace, const synth::CostModel& model);

// Writes trace-<workflow>-<seed>-<timestamp>.jsonl into dir; returns the path.
std::string save_trace(const RunTrace& trace, const std::string& dir);

} // namespace netgent::control
