#include "netgent/environment.hpp"

#include <cstdlib>

namespace netgent::env {

const char* failure_kind_name(FailureKind k) {
    switch (k) {
        case FailureKind::selector_not_found: return "selector_not_found";
        case FailureKind::timeout: return "timeout";
        case FailureKind::navigation_error: return "navigation_error";
        case FailureKind::adapter_error: return "adapter_error";
    }
    return "adapter_error";
}

StepResult run_program(Environment& env, const actions::ActionProgram& program,
                       const actions::RealismParams& realism) {
    StepResult last;
    last.observed_after = env.observe();
    for (size_t i = 0; i < program.instructions.size(); ++i) {
        last = env.perform(program.instructions[i], realism, static_cast<int>(i));
        if (!last.ok) return last;
    }
    return last;
}

std::string resolve_secret_text(const std::string& text) {
    if (!actions::is_secret_placeholder(text)) return text;
    const std::string name = text.substr(2, text.size() - 3);
    const char* value = std::getenv(name.c_str());
    return value ? std::string(value) : std::string();
}

} // namespace netgent::env
