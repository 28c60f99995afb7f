#include "netgent/sim_env.hpp"

#include "netgent/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace netgent::sim {
namespace {

using page::DomNode;

std::string normalize_selector(const std::string& s) {
    return page::serialize_selector(page::parse_selector(s));
}

std::string format_number(double v) {
    if (std::fabs(v - std::llround(v)) < 1e-9) {
        return std::to_string(std::llround(v));
    }
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

bool parse_number(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

// Mutable counterpart of query_selector: collects non-const matches.
void collect_mut(DomNode& node, const page::SelectorAst& sel, std::vector<char> mask,
                 std::vector<DomNode*>& out) {
    const size_t k = sel.steps.size();
    if (mask[k - 1] && page::simple_selector_matches(sel.steps[k - 1], node)) out.push_back(&node);
    std::vector<char> child_mask = mask;
    for (size_t i = 0; i + 1 < k; ++i) {
        if (mask[i] && page::simple_selector_matches(sel.steps[i], node)) child_mask[i + 1] = 1;
    }
    for (DomNode& child : node.children) collect_mut(child, sel, child_mask, out);
}

std::vector<DomNode*> query_mut(DomNode& root, const page::SelectorAst& sel) {
    std::vector<DomNode*> out;
    if (sel.steps.empty()) return out;
    std::vector<char> mask(sel.steps.size(), 0);
    mask[0] = 1;
    collect_mut(root, sel, mask, out);
    return out;
}

// Removes every node matching sel (the root itself is never removed).
bool remove_matching(DomNode& node, const page::SelectorAst& sel, const DomNode& root) {
    bool removed = false;
    auto& kids = node.children;
    for (auto it = kids.begin(); it != kids.end();) {
        const auto matches = page::query_selector(root, sel);
        const bool hit = std::find(matches.begin(), matches.end(), &*it) != matches.end();
        if (hit) {
            it = kids.erase(it);
            removed = true;
        } else {
            removed = remove_matching(*it, sel, root) || removed;
            ++it;
        }
    }
    return removed;
}

DomNode el(std::string tag, std::string id = "", std::vector<std::string> classes = {},
           std::string text = "", std::map<std::string, std::string> attrs = {},
           std::vector<DomNode> children = {}) {
    DomNode n;
    n.tag = std::move(tag);
    if (!id.empty()) n.id = std::move(id);
    n.classes = std::move(classes);
    n.text = std::move(text);
    n.attributes = std::move(attrs);
    n.children = std::move(children);
    return n;
}

SimPage make_page(std::string url, std::string title, DomNode body) {
    SimPage p;
    p.url = std::move(url);
    p.title = std::move(title);
    p.dom = el("html", "", {}, "", {}, {std::move(body)});
    page::assign_node_indexes(p.dom);
    return p;
}

std::vector<std::string> split_on(const std::string& s, char sep, size_t max_parts) {
    std::vector<std::string> parts;
    size_t start = 0;
    while (parts.size() + 1 < max_parts) {
        const size_t pos = s.find(sep, start);
        if (pos == std::string::npos) break;
        parts.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    parts.push_back(s.substr(start));
    return parts;
}

SimPage standard_pin_page(const std::string& url) {
    return make_page(
        url, "Enter PIN",
        el("body", "", {}, "",
           {},
           {el("div", "pin-panel", {"panel"}, "", {},
               {el("h1", "", {}, "Enter your PIN"),
                el("input", "pin-input", {}, "", {{"type", "password"}, {"value", ""}}),
                el("button", "pin-submit", {}, "Continue")})}));
}

} // namespace

SimApp build_espnlike_app(const EspnLikeConfig& cfg) {
    SimApp app;
    app.app_label = "espnlike";
    app.seed = cfg.seed;
    app.initial_page = "login";
    const std::string base = "https://espnlike.sim";

    app.pages["login"] = make_page(
        base + "/login", "Sign In",
        el("body", "", {}, "", {},
           {el("div", "login-panel", {"panel"}, "", {},
               {el("h1", "", {}, "Sign in to continue"),
                el("label", "", {}, "Email"),
                el("input", "user", {}, "", {{"type", "text"}, {"value", ""}}),
                el("label", "", {}, "Password"),
                el("input", "pass", {}, "", {{"type", "password"}, {"value", ""}}),
                el("button", "login-btn", {"primary"}, "Log In")})}));

    app.pages["profiles"] = make_page(
        base + "/profiles", "Who's watching?",
        el("body", "", {}, "", {},
           {el("div", "", {"profiles"}, "", {},
               {el("h1", "", {}, "Who's watching?"),
                el("button", "profile-snlclient", {"profile-avatar"}, "snlclient"),
                el("button", "profile-kids", {"profile-avatar"}, "kids")})}));

    if (cfg.pin_required) {
        app.pages["pin"] = standard_pin_page(base + "/profiles/pin");
    }

    app.pages["home"] = make_page(
        base + "/home", "Home",
        el("body", "", {}, "", {},
           {el("nav", "", {"top-nav"}, "", {},
               {el("a", "espn-link", {"nav-item"}, "ESPN", {{"href", "/espn"}}),
                el("a", "movies-link", {"nav-item"}, "Movies", {{"href", "/movies"}})}),
            el("div", "", {"hero"}, "Featured today")}));

    app.pages["espn_hub"] = make_page(
        base + "/espn", "ESPN Hub",
        el("body", "", {}, "", {},
           {el("h1", "", {}, "ESPN"),
            el("div", "", {"rail"}, "", {},
               {el("a", "first-video", {"tile"}, "Top Play of the Day", {{"href", "/espn/video/first"}}),
                el("a", "second-video", {"tile"}, "Full Game Replay", {{"href", "/espn/video/second"}})})}));

    app.pages["video_page"] = make_page(
        base + "/espn/video/first", "Top Play of the Day",
        el("body", "", {}, "", {},
           {el("h1", "", {}, "Top Play of the Day"),
            el("button", "play-button", {"primary"}, "Play")}));

    app.pages["playback"] = make_page(
        base + "/watch/first", "Now Playing",
        el("body", "", {}, "", {},
           {el("div", "player", {}, "", {},
               {el("video", "video-player", {}, "",
                   {{"currenttime", "0"}, {"paused", "false"}, {"duration", "3600"}}),
                el("input", "seek-slider", {}, "",
                   {{"type", "range"}, {"min", "0"}, {"max", "3600"}, {"value", "0"}}),
                el("span", "", {"overlay"}, "Now Playing")})}));

    app.transitions[{"login", "#login-btn", "click"}] = Effect{"profiles", {}, {}};
    app.transitions[{"profiles", "#profile-snlclient", "click"}] =
        Effect{cfg.pin_required ? "pin" : "home", {}, {}};
    if (cfg.pin_required) {
        app.transitions[{"pin", "#pin-submit", "click"}] = Effect{"home", {}, {}};
    }
    app.transitions[{"home", "#espn-link", "click"}] = Effect{"espn_hub", {}, {}};
    app.transitions[{"espn_hub", "#first-video", "click"}] = Effect{"video_page", {}, {}};
    app.transitions[{"video_page", "#play-button", "click"}] = Effect{"playback", {}, {}};

    if (cfg.ad_probability > 0.0) {
        app.pages["ad"] = make_page(
            base + "/ad/preroll", "Advertisement",
            el("body", "", {}, "", {},
               {el("div", "ad-banner", {}, "Your video will begin shortly"),
                el("button", "skip-ad", {}, "Skip Ad")}));
        app.transitions[{"ad", "#skip-ad", "click"}] = Effect{"playback", {}, {}};
        app.interstitials.push_back(Interstitial{cfg.ad_probability, "ad", "#skip-ad", "playback"});
    }

    app.dynamics.push_back(
        Dynamic{"playback", "#video-player", "currenttime", 1.0, "paused", "false"});
    return app;
}

std::string drift_kind_name(DriftKind k) {
    switch (k) {
        case DriftKind::rename_class: return "rename_class";
        case DriftKind::rename_id: return "rename_id";
        case DriftKind::change_text: return "change_text";
        case DriftKind::reorder_children: return "reorder_children";
        case DriftKind::insert_interstitial: return "insert_interstitial";
        case DriftKind::require_pin: return "require_pin";
    }
    return "rename_id";
}

DriftOp parse_drift_spec(const std::string& spec) {
    DriftOp op;
    if (spec == "require_pin" || spec.rfind("require_pin:", 0) == 0) {
        op.kind = DriftKind::require_pin;
        op.page_id = "profiles";
        op.selector = "#profile-snlclient";
        if (spec != "require_pin") {
            const auto parts = split_on(spec, ':', 3);
            if (parts.size() != 3 || parts[1].empty() || parts[2].empty())
                throw Error("bad drift spec: " + spec);
            op.page_id = parts[1];
            op.selector = parts[2];
        }
        op.new_page_id = "pin";
        op.continue_selector = "#pin-submit";
        return op;
    }
    if (spec.rfind("rename_id:", 0) == 0) {
        const auto parts = split_on(spec, ':', 4);
        if (parts.size() != 4) throw Error("bad drift spec: " + spec);
        op.kind = DriftKind::rename_id;
        op.page_id = parts[1];
        op.selector = parts[2];
        op.arg_a = parts[3];
        return op;
    }
    if (spec.rfind("rename_class:", 0) == 0) {
        const auto parts = split_on(spec, ':', 5);
        if (parts.size() != 5) throw Error("bad drift spec: " + spec);
        op.kind = DriftKind::rename_class;
        op.page_id = parts[1];
        op.selector = parts[2];
        op.arg_a = parts[3];
        op.arg_b = parts[4];
        return op;
    }
    if (spec.rfind("change_text:", 0) == 0) {
        const auto parts = split_on(spec, ':', 4);
        if (parts.size() != 4) throw Error("bad drift spec: " + spec);
        op.kind = DriftKind::change_text;
        op.page_id = parts[1];
        op.selector = parts[2];
        op.arg_a = parts[3];
        return op;
    }
    if (spec.rfind("reorder_children:", 0) == 0) {
        const auto parts = split_on(spec, ':', 3);
        if (parts.size() != 3) throw Error("bad drift spec: " + spec);
        op.kind = DriftKind::reorder_children;
        op.page_id = parts[1];
        op.selector = parts[2];
        return op;
    }
    if (spec.rfind("insert_interstitial:", 0) == 0) {
        const auto parts = split_on(spec, ':', 3);
        if (parts.size() != 3) throw Error("bad drift spec: " + spec);
        op.kind = DriftKind::insert_interstitial;
        op.page_id = parts[1];   // the page the interstitial appears before
        double prob = 0.0;
        if (!parse_number(parts[2], prob) || prob < 0.0 || prob > 1.0)
            throw Error("bad interstitial probability in: " + spec);
        op.interstitial = Interstitial{prob, "interstitial", "#dismiss", parts[1]};
        op.new_page_id = "interstitial";
        return op;
    }
    throw Error("unknown drift spec: " + spec);
}

SimApp apply_drift(const SimApp& app, const DriftOp& op) {
    SimApp out = app;

    auto page_it = out.pages.find(op.page_id);
    if (page_it == out.pages.end())
        throw TargetNotFound("drift target page '" + op.page_id + "' does not exist");
    SimPage& target_page = page_it->second;

    // Rewrites transition keys on the target page via a selector-step edit.
    auto rewrite_transitions = [&](auto&& edit_step) {
        std::map<TransitionKey, Effect> updated;
        for (const auto& [key, effect] : out.transitions) {
            const auto& [page_id, selector, kind] = key;
            if (page_id != op.page_id) {
                updated[key] = effect;
                continue;
            }
            page::SelectorAst ast = page::parse_selector(selector);
            for (auto& step : ast.steps) edit_step(step);
            updated[{page_id, page::serialize_selector(ast), kind}] = effect;
        }
        out.transitions = std::move(updated);
    };

    switch (op.kind) {
        case DriftKind::rename_id: {
            const page::SelectorAst sel = page::parse_selector(op.selector);
            auto nodes = query_mut(target_page.dom, sel);
            if (nodes.empty()) throw TargetNotFound("no node matches " + op.selector);
            std::string old_id;
            for (DomNode* n : nodes) {
                if (n->id) old_id = *n->id;
                n->id = op.arg_a;
            }
            if (!old_id.empty()) {
                rewrite_transitions([&](page::SimpleSelector& step) {
                    if (step.id && *step.id == old_id) step.id = op.arg_a;
                });
            }
            break;
        }
        case DriftKind::rename_class: {
            const page::SelectorAst sel = page::parse_selector(op.selector);
            auto nodes = query_mut(target_page.dom, sel);
            if (nodes.empty()) throw TargetNotFound("no node matches " + op.selector);
            for (DomNode* n : nodes) {
                auto it = std::find(n->classes.begin(), n->classes.end(), op.arg_a);
                if (it != n->classes.end()) *it = op.arg_b;
            }
            rewrite_transitions([&](page::SimpleSelector& step) {
                for (auto& cls : step.classes) {
                    if (cls == op.arg_a) cls = op.arg_b;
                }
            });
            break;
        }
        case DriftKind::change_text: {
            const page::SelectorAst sel = page::parse_selector(op.selector);
            auto nodes = query_mut(target_page.dom, sel);
            if (nodes.empty()) throw TargetNotFound("no node matches " + op.selector);
            for (DomNode* n : nodes) n->text = op.arg_a;
            break;
        }
        case DriftKind::reorder_children: {
            const page::SelectorAst sel = page::parse_selector(op.selector);
            auto nodes = query_mut(target_page.dom, sel);
            if (nodes.empty()) throw TargetNotFound("no node matches " + op.selector);
            for (DomNode* n : nodes) std::reverse(n->children.begin(), n->children.end());
            page::assign_node_indexes(target_page.dom);
            break;
        }
        case DriftKind::insert_interstitial: {
            if (!op.interstitial) throw Error("insert_interstitial without payload");
            Interstitial inter = *op.interstitial;
            if (op.new_page) {
                out.pages[inter.page_id] = *op.new_page;
            } else if (!out.pages.count(inter.page_id)) {
                const std::string base = target_page.url.substr(0, target_page.url.find('/', 8));
                out.pages[inter.page_id] = make_page(
                    base + "/interstitial", "One moment",
                    el("body", "", {}, "", {},
                       {el("div", "notice", {}, "Before you continue"),
                        el("button", "dismiss", {}, "Dismiss")}));
            }
            out.transitions[{inter.page_id, normalize_selector(inter.dismiss_selector), "click"}] =
                Effect{inter.before_page, {}, {}};
            out.interstitials.push_back(std::move(inter));
            break;
        }
        case DriftKind::require_pin: {
            const TransitionKey key{op.page_id, normalize_selector(op.selector), "click"};
            auto it = out.transitions.find(key);
            if (it == out.transitions.end() || !it->second.goto_page)
                throw TargetNotFound("no navigating transition at " + op.page_id + " " + op.selector);
            const std::string original_target = *it->second.goto_page;
            const std::string pin_id = op.new_page_id.empty() ? "pin" : op.new_page_id;
            if (!out.pages.count(pin_id)) {
                const std::string base = target_page.url.substr(0, target_page.url.find('/', 8));
                SimPage pin = op.new_page ? *op.new_page : standard_pin_page(base + "/profiles/pin");
                out.pages[pin_id] = std::move(pin);
            }
            it->second.goto_page = pin_id;
            const std::string submit =
                op.continue_selector.empty() ? "#pin-submit" : op.continue_selector;
            out.transitions[{pin_id, normalize_selector(submit), "click"}] =
                Effect{original_target, {}, {}};
            break;
        }
    }

    for (const auto& [key, effect] : out.transitions) {
        if (effect.goto_page && !out.pages.count(*effect.goto_page))
            throw Error("drift left transition to unknown page " + *effect.goto_page);
    }
    return out;
}

nlohmann::ordered_json sim_app_to_json(const SimApp& app) {
    nlohmann::ordered_json j;
    j["app"] = app.app_label;
    j["seed"] = app.seed;
    j["initial_page"] = app.initial_page;
    nlohmann::ordered_json pages = nlohmann::ordered_json::object();
    for (const auto& [id, p] : app.pages) {
        pages[id] = nlohmann::ordered_json{
            {"url", p.url}, {"title", p.title}, {"dom", page::dom_to_json(p.dom)}};
    }
    j["pages"] = std::move(pages);
    nlohmann::ordered_json transitions = nlohmann::ordered_json::array();
    for (const auto& [key, effect] : app.transitions) {
        const auto& [page_id, selector, kind] = key;
        nlohmann::ordered_json t{{"page", page_id}, {"selector", selector}, {"op", kind}};
        nlohmann::ordered_json e = nlohmann::ordered_json::object();
        if (effect.goto_page) e["goto"] = *effect.goto_page;
        if (!effect.set_attributes.empty()) {
            nlohmann::ordered_json sets = nlohmann::ordered_json::array();
            for (const auto& s : effect.set_attributes) {
                sets.push_back(nlohmann::ordered_json{
                    {"selector", s.selector}, {"attribute", s.attribute}, {"value", s.value}});
            }
            e["set"] = std::move(sets);
        }
        if (!effect.remove_nodes.empty()) e["remove"] = effect.remove_nodes;
        t["effect"] = std::move(e);
        transitions.push_back(std::move(t));
    }
    j["transitions"] = std::move(transitions);
    nlohmann::ordered_json inters = nlohmann::ordered_json::array();
    for (const auto& i : app.interstitials) {
        inters.push_back(nlohmann::ordered_json{{"probability", i.probability},
                                                {"page", i.page_id},
                                                {"dismiss_selector", i.dismiss_selector},
                                                {"before", i.before_page}});
    }
    j["interstitials"] = std::move(inters);
    nlohmann::ordered_json dyns = nlohmann::ordered_json::array();
    for (const auto& d : app.dynamics) {
        nlohmann::ordered_json dj{{"page", d.page_id},
                                  {"selector", d.selector},
                                  {"attribute", d.attribute},
                                  {"delta", d.per_tick_delta}};
        if (d.gate_attribute) {
            dj["gate_attribute"] = *d.gate_attribute;
            dj["gate_value"] = d.gate_value;
        }
        dyns.push_back(std::move(dj));
    }
    j["dynamics"] = std::move(dyns);
    return j;
}

SimApp sim_app_from_json(const nlohmann::json& j) {
    SimApp app;
    app.app_label = j.at("app").get<std::string>();
    app.seed = j.value("seed", uint64_t{0});
    app.initial_page = j.at("initial_page").get<std::string>();
    for (auto it = j.at("pages").begin(); it != j.at("pages").end(); ++it) {
        SimPage p;
        p.url = it.value().at("url").get<std::string>();
        p.title = it.value().value("title", std::string());
        if (!page::is_valid_url(p.url)) throw Error("sim page with invalid url: " + p.url);
        p.dom = page::dom_from_json(it.value().at("dom"));
        page::assign_node_indexes(p.dom);
        app.pages[it.key()] = std::move(p);
    }
    for (const auto& t : j.value("transitions", nlohmann::json::array())) {
        Effect e;
        const auto& ej = t.at("effect");
        if (ej.contains("goto")) e.goto_page = ej.at("goto").get<std::string>();
        for (const auto& s : ej.value("set", nlohmann::json::array())) {
            e.set_attributes.push_back(AttrSet{s.at("selector").get<std::string>(),
                                               s.at("attribute").get<std::string>(),
                                               s.at("value").get<std::string>()});
        }
        for (const auto& r : ej.value("remove", nlohmann::json::array()))
            e.remove_nodes.push_back(r.get<std::string>());
        app.transitions[{t.at("page").get<std::string>(),
                         normalize_selector(t.at("selector").get<std::string>()),
                         t.value("op", std::string("click"))}] = std::move(e);
    }
    for (const auto& i : j.value("interstitials", nlohmann::json::array())) {
        app.interstitials.push_back(Interstitial{i.at("probability").get<double>(),
                                                 i.at("page").get<std::string>(),
                                                 i.at("dismiss_selector").get<std::string>(),
                                                 i.at("before").get<std::string>()});
    }
    for (const auto& d : j.value("dynamics", nlohmann::json::array())) {
        Dynamic dyn;
        dyn.page_id = d.at("page").get<std::string>();
        dyn.selector = d.at("selector").get<std::string>();
        dyn.attribute = d.at("attribute").get<std::string>();
        dyn.per_tick_delta = d.at("delta").get<double>();
        if (d.contains("gate_attribute")) {
            dyn.gate_attribute = d.at("gate_attribute").get<std::string>();
            dyn.gate_value = d.value("gate_value", std::string());
        }
        app.dynamics.push_back(std::move(dyn));
    }
    if (!app.pages.count(app.initial_page)) throw Error("initial page missing from pages");
    for (const auto& [key, effect] : app.transitions) {
        if (effect.goto_page && !app.pages.count(*effect.goto_page))
            throw Error("transition to unknown page " + *effect.goto_page);
    }
    return app;
}

SimApp load_sim_app(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open sim fixture " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("bad sim fixture " + path + ": " + e.what());
    }
    return sim_app_from_json(j);
}

void save_sim_app(const SimApp& app, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write sim fixture " + path);
    out << sim_app_to_json(app).dump(2) << "\n";
}

SimSession::SimSession(SimApp app, uint64_t seed)
    : app_(std::move(app)), rng_(seed), current_page_(app_.initial_page) {
    if (!app_.pages.count(current_page_)) throw Error("sim app has no initial page");
}

page::DomNode& SimSession::live_dom(const std::string& page_id) {
    auto it = live_.find(page_id);
    if (it == live_.end()) {
        it = live_.emplace(page_id, app_.pages.at(page_id).dom).first;
    }
    return it->second;
}

env::EnvCapabilities SimSession::capabilities() const {
    return env::EnvCapabilities{false, false, false};
}

page::PageSnapshot SimSession::observe() {
    const SimPage& p = app_.pages.at(current_page_);
    page::PageSnapshot snap;
    snap.url = p.url;
    snap.title = p.title;
    snap.root = live_dom(current_page_);
    snap.captured_at = ++capture_seq_;
    snap.env_revision = revision_;
    return snap;
}

void SimSession::advance_ticks(int n) {
    for (int i = 0; i < n; ++i) {
        ++tick_;
        for (const Dynamic& dyn : app_.dynamics) {
            if (dyn.page_id != current_page_) continue;
            DomNode& root = live_dom(current_page_);
            for (DomNode* node : query_mut(root, page::parse_selector(dyn.selector))) {
                if (dyn.gate_attribute) {
                    auto gate = node->attributes.find(*dyn.gate_attribute);
                    if (gate == node->attributes.end() || gate->second != dyn.gate_value) continue;
                }
                auto attr = node->attributes.find(dyn.attribute);
                double value = 0.0;
                if (attr != node->attributes.end() && !parse_number(attr->second, value)) continue;
                const std::string next = format_number(value + dyn.per_tick_delta);
                if (node->attributes[dyn.attribute] != next) {
                    node->attributes[dyn.attribute] = next;
                    bump_revision();
                }
            }
        }
    }
}

void SimSession::go_to_page(const std::string& page_id) {
    current_page_ = page_id;
    live_dom(page_id);
    bump_revision();
}

env::StepResult SimSession::ok_result(int index) {
    (void)index;
    env::StepResult r;
    r.ok = true;
    r.observed_after = observe();
    return r;
}

env::StepResult SimSession::perform(const actions::Instruction& ins,
                                    const actions::RealismParams& realism, int index) {
    (void)realism;   // no screen: OS-level realism degrades to symbolic execution
    using namespace actions;

    if (const auto* nav = std::get_if<Navigate>(&ins)) {
        for (const auto& [id, p] : app_.pages) {
            if (p.url == nav->url) {
                go_to_page(id);
                return ok_result(index);
            }
        }
        return env::StepResult::failed(index, env::FailureKind::navigation_error,
                                       "no page serves " + nav->url, observe());
    }

    if (const auto* wf = std::get_if<WaitFor>(&ins)) {
        int waited_ms = 0;
        while (true) {
            if (detect::match_detector(wf->detector, observe())) return ok_result(index);
            if (waited_ms >= wf->timeout_ms) {
                return env::StepResult::failed(index, env::FailureKind::timeout,
                                               "wait_for timed out after " +
                                                   std::to_string(waited_ms) + "ms",
                                               observe());
            }
            advance_ticks(1);   // 1 tick per poll
            waited_ms += 100;
        }
    }

    if (const auto* sl = std::get_if<Sleep>(&ins)) {
        advance_ticks((sl->ms + 99) / 100);
        return ok_result(index);
    }

    if (const auto* as = std::get_if<AssertDetector>(&ins)) {
        if (detect::match_detector(as->detector, observe())) return ok_result(index);
        return env::StepResult::failed(index, env::FailureKind::selector_not_found,
                                       "assert_detector: detector did not match", observe());
    }

    if (const auto* sc = std::get_if<Scroll>(&ins)) {
        DomNode& root = live_dom(current_page_);
        double y = 0.0;
        auto it = root.attributes.find("data-scroll-y");
        if (it != root.attributes.end()) parse_number(it->second, y);
        const std::string next = format_number(y + sc->delta_y);
        if (root.attributes["data-scroll-y"] != next) {
            root.attributes["data-scroll-y"] = next;
            bump_revision();
        }
        return ok_result(index);
    }

    if (const auto* pk = std::get_if<PressKey>(&ins)) {
        (void)pk;   // keys reach no focused widget in the simulated DOM
        return ok_result(index);
    }

    // Selector-addressed instructions resolve before acting (fail-before-act).
    const page::SelectorAst* sel = nullptr;
    if (const auto* cl = std::get_if<Click>(&ins)) sel = &cl->selector;
    else if (const auto* ty = std::get_if<TypeText>(&ins)) sel = &ty->selector;
    else if (const auto* hv = std::get_if<Hover>(&ins)) sel = &hv->selector;
    else if (const auto* dr = std::get_if<DragToFraction>(&ins)) sel = &dr->selector;

    DomNode& root = live_dom(current_page_);
    std::vector<DomNode*> nodes = query_mut(root, *sel);
    if (nodes.empty()) {
        return env::StepResult::failed(index, env::FailureKind::selector_not_found,
                                       page::serialize_selector(*sel) + " matched nothing",
                                       observe());
    }
    DomNode* node = nodes.front();

    if (std::get_if<Hover>(&ins)) return ok_result(index);

    if (const auto* ty = std::get_if<TypeText>(&ins)) {
        const std::string resolved = env::resolve_secret_text(ty->text);
        if (node->attributes["value"] != resolved) {
            node->attributes["value"] = resolved;
            bump_revision();
        }
        return ok_result(index);
    }

    if (const auto* dr = std::get_if<DragToFraction>(&ins)) {
        double lo = 0.0, hi = 100.0;
        auto mn = node->attributes.find("min");
        auto mx = node->attributes.find("max");
        if (mn != node->attributes.end()) parse_number(mn->second, lo);
        if (mx != node->attributes.end()) parse_number(mx->second, hi);
        const std::string next = format_number(lo + dr->fraction * (hi - lo));
        if (node->attributes["value"] != next) {
            node->attributes["value"] = next;
            bump_revision();
        }
        return ok_result(index);
    }

    // Click: apply the wired transition, if any.
    const TransitionKey key{current_page_, page::serialize_selector(*sel), "click"};
    auto tr = app_.transitions.find(key);
    if (tr == app_.transitions.end()) return ok_result(index);

    const Effect& effect = tr->second;
    bool mutated = false;
    for (const AttrSet& s : effect.set_attributes) {
        for (DomNode* n : query_mut(root, page::parse_selector(s.selector))) {
            if (n->attributes[s.attribute] != s.value) {
                n->attributes[s.attribute] = s.value;
                mutated = true;
            }
        }
    }
    for (const std::string& r : effect.remove_nodes) {
        if (remove_matching(root, page::parse_selector(r), root)) {
            page::assign_node_indexes(root);
            mutated = true;
        }
    }
    if (mutated) bump_revision();

    if (effect.goto_page) {
        std::string target = *effect.goto_page;
        for (const Interstitial& inter : app_.interstitials) {
            if (inter.before_page == target && rng_.bernoulli(inter.probability)) {
                target = inter.page_id;
                break;
            }
        }
        go_to_page(target);
    }
    return ok_result(index);
}

} // namespace netgent::sim
