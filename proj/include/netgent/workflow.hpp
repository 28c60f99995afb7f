#pragma once

#include "netgent/errors.hpp"

#include <map>
#include <string>
#include <vector>

namespace netgent::workflow {

// One trigger-action rule of the abstract automaton. The prose is opaque to
// the engine; only the synthesis backend interprets it.
struct AbstractState {
    std::string name;                          // [a-z][a-z0-9_]*, unique per workflow
    std::string trigger_prose;                 // non-empty
    std::string action_prose;                  // non-empty unless is_end
    bool is_end = false;
    std::map<std::string, std::string> hints;  // secrets only as ${ENV_NAME} placeholders
    int declaration_index = 0;

    bool operator==(const AbstractState&) const = default;
};

struct AbstractWorkflow {
    std::string workflow_id;
    std::string app_label;
    std::string entry_url;
    std::vector<AbstractState> states;         // at least one end state
    int max_steps = 60;

    const AbstractState* find_state(const std::string& name) const;
    bool operator==(const AbstractWorkflow&) const = default;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, int line)
        : Error(what + " (line " + std::to_string(line) + ")"), line(line) {}
    int line;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

// Workflow file format: header lines (workflow:/app:/entry:/max_steps:)
// followed by [state] blocks with trigger:/action:/end:/hint.<key>: lines.
// trigger/action values may continue across lines with a trailing backslash.
AbstractWorkflow parse_workflow(const std::string& document);
std::string serialize_workflow(const AbstractWorkflow& w);

void validate_workflow(const AbstractWorkflow& w);
bool valid_state_name(const std::string& name);

// The states rendered as prose rules for a synthesis backend's context.
std::string states_as_rules(const AbstractWorkflow& w);

} // namespace netgent::workflow
