#include "netgent/oracle_backend.hpp"

#include <fstream>

namespace netgent::synth {
namespace {

// Select gets one quarter of the state's configured cost, generate another,
// decompose the remainder, so the three shares always sum exactly.
int64_t quarter(int64_t total) { return total / 4; }

repo::TokenUsage split_usage(int64_t share) {
    repo::TokenUsage u;
    u.input_tokens = share * 4 / 5;
    u.output_tokens = share - u.input_tokens;
    return u;
}

nlohmann::json resolve_json(const page::PageSnapshot& snap, const nlohmann::json& node);

nlohmann::json resolve_object(const page::PageSnapshot& snap, const nlohmann::json& obj) {
    nlohmann::json out = nlohmann::json::object();
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (it.key() == "find") {
            out["selector"] = resolve_find_selector(snap, it.value());
        } else {
            out[it.key()] = resolve_json(snap, it.value());
        }
    }
    return out;
}

nlohmann::json resolve_json(const page::PageSnapshot& snap, const nlohmann::json& node) {
    if (node.is_object()) return resolve_object(snap, node);
    if (node.is_array()) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& item : node) out.push_back(resolve_json(snap, item));
        return out;
    }
    return node;
}

void collect_nodes(const page::DomNode& n, std::vector<const page::DomNode*>& out) {
    out.push_back(&n);
    for (const auto& c : n.children) collect_nodes(c, out);
}

} // namespace

std::string resolve_find_selector(const page::PageSnapshot& snap, const nlohmann::json& find) {
    std::vector<const page::DomNode*> candidates;
    if (find.contains("selector")) {
        const auto ast = page::parse_selector(find.at("selector").get<std::string>());
        candidates = page::query_selector(snap.root, ast);
    } else {
        collect_nodes(snap.root, candidates);
    }
    if (find.contains("text")) {
        const std::string needle = find.at("text").get<std::string>();
        std::erase_if(candidates, [&](const page::DomNode* n) {
            return n->text.find(needle) == std::string::npos;
        });
    }
    if (candidates.empty())
        throw BackendError("oracle find matched nothing: " + find.dump());

    const page::DomNode* node = candidates.front();
    if (node->id) return "#" + *node->id;
    page::SimpleSelector step;
    step.tag = node->tag;
    if (!node->classes.empty()) step.classes.push_back(node->classes.front());
    return page::serialize_selector(page::SelectorAst{{step}});
}

OracleBackend::OracleBackend(nlohmann::json playbook, OracleCosts costs)
    : playbook_(std::move(playbook)), costs_(std::move(costs)) {
    if (!playbook_.contains("entries") || !playbook_.at("entries").is_array())
        throw BackendError("oracle playbook has no entries array");
}

OracleBackend OracleBackend::from_file(const std::string& path, OracleCosts costs) {
    std::ifstream in(path);
    if (!in) throw BackendError("cannot open oracle playbook " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw BackendError("bad oracle playbook " + path + ": " + e.what());
    }
    return OracleBackend(std::move(j), std::move(costs));
}

OracleCosts OracleBackend::costs_from_playbook(const nlohmann::json& playbook) {
    OracleCosts costs;
    if (playbook.contains("default_tokens"))
        costs.default_tokens = playbook.at("default_tokens").get<int64_t>();
    if (playbook.contains("state_tokens")) {
        for (auto it = playbook.at("state_tokens").begin(); it != playbook.at("state_tokens").end();
             ++it)
            costs.per_state[it.key()] = it.value().get<int64_t>();
    }
    return costs;
}

const nlohmann::json* OracleBackend::entry_matching(const page::PageSnapshot& snap) const {
    for (const auto& entry : playbook_.at("entries")) {
        const auto& match = entry.at("match");
        if (match.contains("url_glob") &&
            !detect::glob_match(match.at("url_glob").get<std::string>(), snap.url))
            continue;
        if (match.contains("element")) {
            const auto ast = page::parse_selector(match.at("element").get<std::string>());
            if (page::query_selector(snap.root, ast).empty()) continue;
        }
        return &entry;
    }
    return nullptr;
}

const nlohmann::json* OracleBackend::entry_for_state(const std::string& state_name) const {
    for (const auto& entry : playbook_.at("entries")) {
        if (entry.at("state").get<std::string>() == state_name) return &entry;
    }
    return nullptr;
}

repo::TokenUsage OracleBackend::step_share(const std::string& state_name, int step_index) const {
    const int64_t total = costs_.for_state(state_name);
    const int64_t q = quarter(total);
    if (step_index == 0 || step_index == 1) return split_usage(q);
    return split_usage(total - 2 * q);
}

StepReply OracleBackend::select_state(const SynthesisContext& ctx) {
    const nlohmann::json* entry = entry_matching(*ctx.marked_snapshot);
    if (!entry)
        throw BackendError("oracle playbook has no entry matching " + ctx.marked_snapshot->url);
    const std::string state = entry->at("state").get<std::string>();
    StepReply r;
    r.payload = nlohmann::json{{"state", state}};
    r.usage = step_share(state, 0);
    return r;
}

StepReply OracleBackend::generate_detectors(const SynthesisContext& ctx,
                                            const std::string& state_name) {
    const nlohmann::json* entry = entry_for_state(state_name);
    if (!entry) throw BackendError("oracle playbook has no entry for state " + state_name);
    StepReply r;
    nlohmann::json sets = nlohmann::json::array();
    for (const auto& ds : entry->at("detector_sets")) {
        nlohmann::json detectors = nlohmann::json::array();
        for (const auto& d : ds) detectors.push_back(resolve_json(*ctx.marked_snapshot, d));
        sets.push_back(nlohmann::json{{"detectors", detectors}});
    }
    r.payload = nlohmann::json{{"detector_sets", sets}};
    r.usage = step_share(state_name, 1);
    return r;
}

StepReply OracleBackend::decompose_actions(const SynthesisContext& ctx,
                                           const std::string& state_name) {
    const nlohmann::json* entry = entry_for_state(state_name);
    if (!entry) throw BackendError("oracle playbook has no entry for state " + state_name);
    StepReply r;
    nlohmann::json instructions = nlohmann::json::array();
    for (const auto& ins : entry->at("program"))
        instructions.push_back(resolve_json(*ctx.marked_snapshot, ins));
    r.payload = nlohmann::json{
        {"program", nlohmann::json{{"version", actions::kProgramFormatVersion},
                                   {"instructions", instructions}}}};
    r.usage = step_share(state_name, 2);
    return r;
}

} // namespace netgent::synth
