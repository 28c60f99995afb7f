#pragma once

#include "netgent/synthesis.hpp"

#include <string>

namespace netgent::synth {

// Generic chat-completion wire format:
//   request  = {model, temperature, messages: [{role, content}]}
//   response = {content: string, usage: {input_tokens, output_tokens}}
// Prompt templates are external assets keyed by step name (select.txt,
// generate.txt, decompose.txt) with {{snapshot}}, {{rules}} and {{history}}
// placeholders; built-in copies are used when prompt_dir is empty.
struct ChatBackendConfig {
    std::string endpoint;        // full URL of the completion endpoint
    std::string model = "default";
    double temperature = 0.2;
    std::string api_key;         // falls back to NETGENT_LLM_KEY
    std::string prompt_dir;
    bool multimodal = false;     // forward the snapshot's screenshot ref opaquely
    int timeout_seconds = 120;
};

class ChatBackend : public Synthesizer {
public:
    explicit ChatBackend(ChatBackendConfig config);

    StepReply select_state(const SynthesisContext& ctx) override;
    StepReply generate_detectors(const SynthesisContext& ctx,
                                 const std::string& state_name) override;
    StepReply decompose_actions(const SynthesisContext& ctx,
                                const std::string& state_name) override;

private:
    StepReply complete(const std::string& step_name, const SynthesisContext& ctx,
                       const std::string& state_name);
    std::string render_template(const std::string& step_name, const SynthesisContext& ctx,
                                const std::string& state_name) const;

    ChatBackendConfig config_;
};

// {{placeholder}} substitution used for the prompt assets.
std::string render_placeholders(std::string text,
                                const std::vector<std::pair<std::string, std::string>>& values);

} // namespace netgent::synth
