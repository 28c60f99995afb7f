#pragma once

#include "netgent/actions.hpp"
#include "netgent/page_model.hpp"

#include <optional>
#include <string>

namespace netgent::env {

enum class FailureKind { selector_not_found, timeout, navigation_error, adapter_error };

const char* failure_kind_name(FailureKind k);

struct StepFailure {
    int instruction_index = 0;
    FailureKind kind = FailureKind::adapter_error;
    std::string detail;
};

// Outcome of performing one instruction. Failures are data, not exceptions,
// so the controller can react (drift handling).
struct StepResult {
    bool ok = true;
    std::optional<StepFailure> failure;
    page::PageSnapshot observed_after;

    static StepResult failed(int index, FailureKind kind, std::string detail,
                             page::PageSnapshot after) {
        StepResult r;
        r.ok = false;
        r.failure = StepFailure{index, kind, std::move(detail)};
        r.observed_after = std::move(after);
        return r;
    }
};

struct EnvCapabilities {
    bool supports_mouse_paths = false;
    bool supports_proxy = false;
    bool supports_profile_dir = false;
};

class AdapterError : public Error {
public:
    using Error::Error;
};

// The interaction contract: observe a snapshot, perform one instruction.
// One environment instance is owned by exactly one run at a time.
class Environment {
public:
    virtual ~Environment() = default;

    // Side-effect free at page level; successive calls differ only in
    // captured_at when nothing performed in between.
    virtual page::PageSnapshot observe() = 0;

    // instruction_index tags failures for multi-instruction programs.
    virtual StepResult perform(const actions::Instruction& ins,
                               const actions::RealismParams& realism,
                               int instruction_index = 0) = 0;

    virtual EnvCapabilities capabilities() const = 0;
};

// Replays a whole program, stopping at the first failure.
StepResult run_program(Environment& env, const actions::ActionProgram& program,
                       const actions::RealismParams& realism);

// Resolves ${ENV_NAME} placeholders against process environment variables;
// unset names resolve to the empty string. Non-placeholder text passes through.
std::string resolve_secret_text(const std::string& text);

} // namespace netgent::env
