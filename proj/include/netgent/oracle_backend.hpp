#pragma once

#include "netgent/synthesis.hpp"

#include <cstdint>
#include <map>
#include <string>

namespace netgent::synth {

// Deterministic scripted synthesizer for tests and desk-scale experiments.
// A playbook maps page conditions to (state, detector sets, program). Entries
// may bind selectors through a `find` query resolved against the live
// snapshot (preferring the node's id), so regeneration after drift binds to
// the renamed element.
//
// Playbook document:
//   {
//     "default_tokens": 42600,
//     "state_tokens": {"type_pin": 20000},
//     "entries": [
//       {"state": "login",
//        "match": {"url_glob": "*host/login*", "element": "#login-btn"?},
//        "detector_sets": [[ detector... ]],         // element kind may use "find"
//        "program": [ instruction... ]}              // selector ops may use "find"
//     ]
//   }
// find = {"selector": "...", "text": "..."} with at least one key; resolution
// picks the first document-order node matching both.
struct OracleCosts {
    int64_t default_tokens = 42600;
    std::map<std::string, int64_t> per_state;

    int64_t for_state(const std::string& name) const {
        auto it = per_state.find(name);
        return it == per_state.end() ? default_tokens : it->second;
    }
};

class OracleBackend : public Synthesizer {
public:
    OracleBackend(nlohmann::json playbook, OracleCosts costs);
    static OracleBackend from_file(const std::string& path, OracleCosts costs);

    // Costs declared inside a playbook document, if any.
    static OracleCosts costs_from_playbook(const nlohmann::json& playbook);

    StepReply select_state(const SynthesisContext& ctx) override;
    StepReply generate_detectors(const SynthesisContext& ctx,
                                 const std::string& state_name) override;
    StepReply decompose_actions(const SynthesisContext& ctx,
                                const std::string& state_name) override;

private:
    const nlohmann::json* entry_matching(const page::PageSnapshot& snap) const;
    const nlohmann::json* entry_for_state(const std::string& state_name) const;
    repo::TokenUsage step_share(const std::string& state_name, int step_index) const;

    nlohmann::json playbook_;
    OracleCosts costs_;
};

// Resolves a find query to a stable selector string (prefers "#id").
std::string resolve_find_selector(const page::PageSnapshot& snap, const nlohmann::json& find);

} // namespace netgent::synth
