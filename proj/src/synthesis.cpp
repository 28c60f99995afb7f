#include "netgent/synthesis.hpp"

#include <algorithm>

namespace netgent::synth {
namespace {

bool is_interactable(const page::DomNode& n) {
    static const char* tags[] = {"a", "button", "input", "select", "textarea"};
    for (const char* t : tags) {
        if (n.tag == t) return true;
    }
    auto role = n.attributes.find("role");
    if (role != n.attributes.end() && role->second == "button") return true;
    return n.attributes.count("onclick") > 0;
}

void strip_marks(page::DomNode& n) {
    n.attributes.erase("data-mark");
    for (auto& c : n.children) strip_marks(c);
}

void mark_in_order(page::DomNode& n, int& next) {
    if (is_interactable(n)) n.attributes["data-mark"] = std::to_string(next++);
    for (auto& c : n.children) mark_in_order(c, next);
}

} // namespace

std::string context_history_text(const SynthesisContext& ctx) {
    std::string out;
    for (const auto& name : ctx.history) {
        if (!out.empty()) out += " -> ";
        out += name;
    }
    if (out.empty()) out = "(none)";
    if (ctx.last_transition) {
        out += "; last transition: " + ctx.last_transition->first;
        if (!ctx.last_transition->second.ok && ctx.last_transition->second.failure) {
            out += " failed (" +
                   std::string(env::failure_kind_name(ctx.last_transition->second.failure->kind)) +
                   ": " + ctx.last_transition->second.failure->detail + ")";
        }
    }
    if (!ctx.failure_note.empty()) out += "; correcting failure: " + ctx.failure_note;
    return out;
}

double cost_dollars(const repo::TokenUsage& usage, const CostModel& m) {
    if (m.blended_rate > 0.0) {
        return static_cast<double>(usage.total()) * m.blended_rate * 1e-6;
    }
    return static_cast<double>(usage.input_tokens) * m.input_rate * 1e-6 +
           static_cast<double>(usage.output_tokens) * m.output_rate * 1e-6;
}

page::PageSnapshot assign_som_marks(const page::PageSnapshot& snap) {
    page::PageSnapshot marked = snap;
    strip_marks(marked.root);
    int next = 1;
    mark_in_order(marked.root, next);
    return marked;
}

std::string snapshot_context_text(const page::PageSnapshot& marked) {
    nlohmann::ordered_json j;
    j["url"] = marked.url;
    j["title"] = marked.title;
    j["dom"] = page::dom_to_json(marked.root);
    return j.dump();
}

SynthesisResult synthesize(const SynthesisRequest& req, Synthesizer& backend,
                           const SynthesisOptions& options) {
    if (static_cast<int>(req.history.size()) > req.workflow.max_steps)
        throw BackendError("history exceeds workflow max_steps");

    SynthesisResult result;
    const page::PageSnapshot marked = assign_som_marks(req.snapshot);

    SynthesisContext ctx;
    ctx.workflow = &req.workflow;
    ctx.marked_snapshot = &marked;
    ctx.snapshot_text = snapshot_context_text(marked);
    ctx.rules_text = workflow::states_as_rules(req.workflow);
    ctx.history = req.history;
    ctx.last_transition = req.last_transition;
    ctx.failure_note.clear();

    repo::TokenUsage total;
    auto charge = [&](const repo::TokenUsage& u) {
        total += u;
        if (total.total() > options.token_budget) {
            throw BudgetExceeded("synthesis exceeded per-state token budget of " +
                                 std::to_string(options.token_budget));
        }
    };

    result.steps_log.push_back(
        {"observe", "context of " + std::to_string(ctx.snapshot_text.size()) + " chars", {}});

    // Select
    std::string state_name;
    if (req.forced_state) {
        state_name = *req.forced_state;
        if (!req.workflow.find_state(state_name))
            throw SelectionError("forced state '" + state_name + "' is not in the workflow");
        result.steps_log.push_back({"select", "forced regeneration of " + state_name, {}});
    } else {
        auto try_select = [&]() -> std::string {
            StepReply r = backend.select_state(ctx);
            charge(r.usage);
            result.steps_log.push_back({"select", r.payload.dump(), r.usage});
            if (!r.payload.is_object() || !r.payload.contains("state") ||
                !r.payload.at("state").is_string())
                return {};
            return r.payload.at("state").get<std::string>();
        };
        state_name = try_select();
        if (!req.workflow.find_state(state_name)) {
            ctx.failure_note = "selected state '" + state_name + "' is not one of the workflow's states";
            const std::string retry_name = try_select();
            if (!req.workflow.find_state(retry_name))
                throw SelectionError("backend selected unknown state '" +
                                     (retry_name.empty() ? state_name : retry_name) + "'");
            state_name = retry_name;
            ctx.failure_note.clear();
        }
    }

    // Generate, with local verification against the triggering snapshot.
    std::vector<detect::DetectorSet> sets;
    auto try_generate = [&](std::string& why) -> bool {
        StepReply r = backend.generate_detectors(ctx, state_name);
        charge(r.usage);
        result.steps_log.push_back({"generate", r.payload.dump(), r.usage});
        sets.clear();
        try {
            if (!r.payload.is_object() || !r.payload.contains("detector_sets")) {
                why = "payload has no detector_sets";
                return false;
            }
            for (const auto& ds : r.payload.at("detector_sets"))
                sets.push_back(detect::detector_set_from_json(ds));
        } catch (const std::exception& e) {
            why = std::string("malformed detector payload: ") + e.what();
            return false;
        }
        if (sets.empty()) {
            why = "no detector sets emitted";
            return false;
        }
        for (size_t i = 0; i < sets.size(); ++i) {
            const detect::MatchResult m = detect::match_detector_set(sets[i], req.snapshot);
            if (!m.matched) {
                why = "detector set " + std::to_string(i) + " does not match the current page";
                return false;
            }
        }
        return true;
    };
    std::string why;
    if (!try_generate(why)) {
        ctx.failure_note = why;
        std::string why2;
        if (!try_generate(why2))
            throw DetectorRejected("generated detectors rejected after one retry: " + why2);
        ctx.failure_note.clear();
    }

    // Decompose
    actions::ActionProgram program;
    auto try_decompose = [&](std::string& reason) -> bool {
        StepReply r = backend.decompose_actions(ctx, state_name);
        charge(r.usage);
        result.steps_log.push_back({"decompose", r.payload.dump(), r.usage});
        try {
            if (!r.payload.is_object() || !r.payload.contains("program")) {
                reason = "payload has no program";
                return false;
            }
            program = actions::program_from_json(r.payload.at("program"));
            return true;
        } catch (const std::exception& e) {
            reason = std::string("malformed program payload: ") + e.what();
            return false;
        }
    };
    std::string reason;
    if (!try_decompose(reason)) {
        ctx.failure_note = reason;
        std::string reason2;
        if (!try_decompose(reason2))
            throw BackendError("decompose failed after one retry: " + reason2);
    }

    result.selected_state = state_name;
    result.usage = total;

    repo::ConcreteState cs;
    cs.workflow_id = req.workflow.workflow_id;
    cs.abstract_name = state_name;
    cs.detector_sets = std::move(sets);
    cs.program = std::move(program);
    cs.created_at = repo::now_epoch_ms();
    cs.synthesis_tokens = total;
    cs.status = repo::StateStatus::active;
    cs.state_id = repo::compute_state_id(cs);
    result.concrete = std::move(cs);
    return result;
}

} // namespace netgent::synth
