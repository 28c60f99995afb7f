#pragma once

#include "netgent/detectors.hpp"
#include "netgent/environment.hpp"
#include "netgent/page_model.hpp"
#include "netgent/state_repo.hpp"
#include "netgent/workflow.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace netgent::synth {

struct SynthesisRequest {
    workflow::AbstractWorkflow workflow;
    page::PageSnapshot snapshot;
    std::optional<std::pair<std::string, env::StepResult>> last_transition;
    std::vector<std::string> history;              // visited abstract names
    std::optional<std::string> forced_state;       // drift regeneration targets one state
};

struct SynthesisStepRecord {
    std::string step;    // observe | select | generate | decompose
    std::string detail;
    repo::TokenUsage usage;
};

struct SynthesisResult {
    std::string selected_state;
    repo::ConcreteState concrete;   // not yet stored; the controller stores it
    repo::TokenUsage usage;
    std::vector<SynthesisStepRecord> steps_log;
};

struct CostModel {
    double input_rate = 0.0;     // dollars per million input tokens
    double output_rate = 0.0;    // dollars per million output tokens
    double blended_rate = 0.0;   // used when only totals are known
};

// Blended when a blended rate is configured, split otherwise.
double cost_dollars(const repo::TokenUsage& usage, const CostModel& m);

class SelectionError : public Error {
public:
    using Error::Error;
};
class DetectorRejected : public Error {
public:
    using Error::Error;
};
class BackendError : public Error {
public:
    using Error::Error;
};
class BudgetExceeded : public Error {
public:
    using Error::Error;
};

// What a backend sees: the marked snapshot, the prose rules, visit history,
// and (on retries) the failure being corrected.
struct SynthesisContext {
    const workflow::AbstractWorkflow* workflow = nullptr;
    const page::PageSnapshot* marked_snapshot = nullptr;
    std::string snapshot_text;
    std::string rules_text;
    std::vector<std::string> history;
    std::optional<std::pair<std::string, env::StepResult>> last_transition;
    std::string failure_note;   // non-empty only on the retry pass
};

struct StepReply {
    nlohmann::json payload;
    repo::TokenUsage usage;
};

// Visit history, last transition and any retry failure as one prose line.
std::string context_history_text(const SynthesisContext& ctx);

// The three model-driven steps of synthesis. Observe (context assembly) is
// the driver's job. Implementations must tolerate concurrent calls.
class Synthesizer {
public:
    virtual ~Synthesizer() = default;
    virtual StepReply select_state(const SynthesisContext& ctx) = 0;
    virtual StepReply generate_detectors(const SynthesisContext& ctx,
                                         const std::string& state_name) = 0;
    virtual StepReply decompose_actions(const SynthesisContext& ctx,
                                        const std::string& state_name) = 0;
};

struct SynthesisOptions {
    int64_t token_budget = 150000;   // per-state cap
};

// Numbers interactable nodes (a/button/input/select/textarea, role=button,
// or onclick) with data-mark = 1..N in document order. Re-marking replaces
// existing marks; other nodes are untouched.
page::PageSnapshot assign_som_marks(const page::PageSnapshot& snap);

// Serialized context document handed to backends ({{snapshot}} placeholder).
std::string snapshot_context_text(const page::PageSnapshot& marked);

// Observe -> Select -> Generate (locally verified against the triggering
// snapshot) -> Decompose. Each failed step is retried once with the failure
// appended to the context, then surfaces as its typed error.
SynthesisResult synthesize(const SynthesisRequest& req, Synthesizer& backend,
                           const SynthesisOptions& options = {});

} // namespace netgent::synth
