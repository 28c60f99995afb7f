#pragma once

#include "netgent/environment.hpp"
#include "netgent/page_model.hpp"
#include "netgent/rng.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace netgent::sim {

// Deterministic simulated web application: a seeded page graph with
// stochastic interstitials and per-tick attribute dynamics. Time is a logical
// tick counter advanced by sleep/wait_for, never wall-clock.
struct SimPage {
    std::string url;
    std::string title;
    page::DomNode dom;   // template; sessions mutate private copies
};

struct AttrSet {
    std::string selector;
    std::string attribute;
    std::string value;
};

struct Effect {
    std::optional<std::string> goto_page;
    std::vector<AttrSet> set_attributes;     // applied to the page the action ran on
    std::vector<std::string> remove_nodes;   // selectors removed from that page
};

// (page, normalized selector, op) -> effect
using TransitionKey = std::tuple<std::string, std::string, std::string>;

struct Interstitial {
    double probability = 0.0;
    std::string page_id;
    std::string dismiss_selector;
    std::string before_page;   // intercepts transitions into this page
};

struct Dynamic {
    std::string page_id;
    std::string selector;
    std::string attribute;
    double per_tick_delta = 0.0;
    std::optional<std::string> gate_attribute;   // delta applies only when gate holds
    std::string gate_value;
};

struct SimApp {
    std::string app_label;
    std::map<std::string, SimPage> pages;
    std::map<TransitionKey, Effect> transitions;
    std::string initial_page;
    std::vector<Interstitial> interstitials;
    std::vector<Dynamic> dynamics;
    uint64_t seed = 0;
};

struct EspnLikeConfig {
    bool pin_required = false;
    double ad_probability = 0.0;
    uint64_t seed = 7;
};

// login -> profiles -> [pin] -> home -> espn_hub -> video_page -> playback,
// with an ad interstitial ahead of playback when ad_probability > 0. The
// playback video advances currenttime one unit per tick while unpaused.
SimApp build_espnlike_app(const EspnLikeConfig& cfg);

enum class DriftKind {
    rename_class,
    rename_id,
    change_text,
    reorder_children,
    insert_interstitial,
    require_pin,
};

class TargetNotFound : public Error {
public:
    using Error::Error;
};

struct DriftOp {
    DriftKind kind = DriftKind::rename_id;
    std::string page_id;
    std::string selector;
    // kind-specific payload
    std::string arg_a;   // new id / old class / new text
    std::string arg_b;   // new class
    std::optional<Interstitial> interstitial;
    std::optional<SimPage> new_page;
    std::string new_page_id;
    std::string continue_selector;   // require_pin: submit selector on the pin page
};

// CLI drift spec, colon-separated:
//   rename_id:<page>:<selector>:<new_id>
//   rename_class:<page>:<selector>:<old_class>:<new_class>
//   change_text:<page>:<selector>:<new text>
//   reorder_children:<page>:<selector>
//   require_pin[:<page>:<selector>]          (defaults: profiles, #profile-snlclient)
//   insert_interstitial:<before_page>:<probability>
DriftOp parse_drift_spec(const std::string& spec);
std::string drift_kind_name(DriftKind k);

// Pure: returns a mutated copy; pages not targeted are byte-identical.
SimApp apply_drift(const SimApp& app, const DriftOp& op);

nlohmann::ordered_json sim_app_to_json(const SimApp& app);
SimApp sim_app_from_json(const nlohmann::json& j);
SimApp load_sim_app(const std::string& path);
void save_sim_app(const SimApp& app, const std::string& path);

// One run's private, mutable instantiation of a SimApp. Fully deterministic:
// (app, seed, instruction sequence) reproduces the snapshot sequence
// byte-for-byte.
class SimSession : public env::Environment {
public:
    SimSession(SimApp app, uint64_t seed);

    page::PageSnapshot observe() override;
    env::StepResult perform(const actions::Instruction& ins,
                            const actions::RealismParams& realism,
                            int instruction_index = 0) override;
    env::EnvCapabilities capabilities() const override;

    int64_t tick() const { return tick_; }
    const std::string& current_page_id() const { return current_page_; }

private:
    page::DomNode& live_dom(const std::string& page_id);
    void advance_ticks(int n);
    void bump_revision() { ++revision_; }
    void go_to_page(const std::string& page_id);
    env::StepResult ok_result(int index);

    SimApp app_;
    SeededRng rng_;
    std::string current_page_;
    std::map<std::string, page::DomNode> live_;
    int64_t tick_ = 0;
    int64_t capture_seq_ = 0;
    int64_t revision_ = 0;
};

} // namespace netgent::sim
