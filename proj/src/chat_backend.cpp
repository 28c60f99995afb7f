#include "netgent/chat_backend.hpp"

#include <httplib.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace netgent::synth {
namespace {

const char* kSelectTemplate =
    "You drive a web workflow. The page below is annotated with data-mark numbers.\n"
    "Rules:\n{{rules}}\n"
    "History: {{history}}\n"
    "Page: {{snapshot}}\n"
    "Reply with JSON {\"state\": \"<name of the applicable rule>\"}.\n";

const char* kGenerateTemplate =
    "Emit detectors that reliably recognize the current page for state {{state}}.\n"
    "Rules:\n{{rules}}\n"
    "History: {{history}}\n"
    "Page: {{snapshot}}\n"
    "Reply with JSON {\"detector_sets\": [[{\"kind\": \"url\"|\"text\"|\"element\", ...}]]}.\n";

const char* kDecomposeTemplate =
    "Decompose the action of state {{state}} into the portable instruction set\n"
    "(navigate, click, type_text, press_key, hover, scroll, drag_to_fraction,\n"
    "wait_for, sleep, assert_detector).\n"
    "Rules:\n{{rules}}\n"
    "History: {{history}}\n"
    "Page: {{snapshot}}\n"
    "Reply with JSON {\"program\": {\"version\": 1, \"instructions\": [...]}}.\n";

const char* builtin_template(const std::string& step_name) {
    if (step_name == "select") return kSelectTemplate;
    if (step_name == "generate") return kGenerateTemplate;
    return kDecomposeTemplate;
}

// host part + path part of a URL for httplib.
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    const size_t scheme = endpoint.find("://");
    if (scheme == std::string::npos) throw BackendError("bad endpoint url: " + endpoint);
    const size_t path = endpoint.find('/', scheme + 3);
    if (path == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, path), endpoint.substr(path)};
}

nlohmann::json extract_json(const std::string& content) {
    try {
        return nlohmann::json::parse(content);
    } catch (const nlohmann::json::exception&) {
    }
    const size_t open = content.find('{');
    const size_t close = content.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close <= open)
        return nlohmann::json();   // null payload; the driver retries
    try {
        return nlohmann::json::parse(content.substr(open, close - open + 1));
    } catch (const nlohmann::json::exception&) {
        return nlohmann::json();
    }
}

} // namespace

std::string render_placeholders(std::string text,
                                const std::vector<std::pair<std::string, std::string>>& values) {
    for (const auto& [key, value] : values) {
        const std::string token = "{{" + key + "}}";
        size_t pos = 0;
        while ((pos = text.find(token, pos)) != std::string::npos) {
            text.replace(pos, token.size(), value);
            pos += value.size();
        }
    }
    return text;
}

ChatBackend::ChatBackend(ChatBackendConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) throw BackendError("chat backend requires an endpoint url");
    if (config_.api_key.empty()) {
        const char* key = std::getenv("NETGENT_LLM_KEY");
        if (key) config_.api_key = key;
    }
}

std::string ChatBackend::render_template(const std::string& step_name,
                                         const SynthesisContext& ctx,
                                         const std::string& state_name) const {
    std::string tmpl;
    if (!config_.prompt_dir.empty()) {
        std::ifstream in(config_.prompt_dir + "/" + step_name + ".txt");
        if (!in) throw BackendError("missing prompt template for step " + step_name);
        std::ostringstream buf;
        buf << in.rdbuf();
        tmpl = buf.str();
    } else {
        tmpl = builtin_template(step_name);
    }
    return render_placeholders(std::move(tmpl), {{"snapshot", ctx.snapshot_text},
                                                 {"rules", ctx.rules_text},
                                                 {"history", context_history_text(ctx)},
                                                 {"state", state_name}});
}

StepReply ChatBackend::complete(const std::string& step_name, const SynthesisContext& ctx,
                                const std::string& state_name) {
    const auto [base, path] = split_endpoint(config_.endpoint);
    httplib::Client client(base);
    client.set_read_timeout(config_.timeout_seconds, 0);
    client.set_connection_timeout(config_.timeout_seconds, 0);

    nlohmann::ordered_json request;
    request["model"] = config_.model;
    request["temperature"] = config_.temperature;
    request["messages"] = nlohmann::ordered_json::array(
        {nlohmann::ordered_json{{"role", "user"},
                                {"content", render_template(step_name, ctx, state_name)}}});
    if (config_.multimodal && ctx.marked_snapshot && ctx.marked_snapshot->screenshot_ref) {
        request["attachment"] = *ctx.marked_snapshot->screenshot_ref;
    }

    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    auto res = client.Post(path, headers, request.dump(), "application/json");
    if (!res) {
        throw BackendError("chat endpoint unreachable: " + config_.endpoint + " (" +
                           httplib::to_string(res.error()) + ")");
    }
    if (res->status != 200) {
        throw BackendError("chat endpoint returned HTTP " + std::to_string(res->status) + ": " +
                           res->body.substr(0, 200));
    }

    nlohmann::json body;
    try {
        body = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
        throw BackendError(std::string("chat response is not structured text: ") + e.what());
    }
    if (!body.contains("content") || !body.contains("usage"))
        throw BackendError("chat response lacks content/usage fields");

    StepReply reply;
    reply.payload = extract_json(body.at("content").get<std::string>());
    reply.usage.input_tokens = body.at("usage").value("input_tokens", int64_t{0});
    reply.usage.output_tokens = body.at("usage").value("output_tokens", int64_t{0});
    return reply;
}

StepReply ChatBackend::select_state(const SynthesisContext& ctx) {
    return complete("select", ctx, "");
}

StepReply ChatBackend::generate_detectors(const SynthesisContext& ctx,
                                          const std::string& state_name) {
    return complete("generate", ctx, state_name);
}

StepReply ChatBackend::decompose_actions(const SynthesisContext& ctx,
                                         const std::string& state_name) {
    return complete("decompose", ctx, state_name);
}

} // namespace netgent::synth
