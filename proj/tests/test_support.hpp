#pragma once

// Shared generators and independent oracles for the test suites. Oracles here
// deliberately re-derive semantics from scratch (recursive ancestor-chain
// search, recursive glob) so they cannot share bugs with the engine's
// implementations.

#include "netgent/actions.hpp"
#include "netgent/detectors.hpp"
#include "netgent/page_model.hpp"
#include "netgent/rng.hpp"
#include "netgent/workflow.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <string>
#include <unistd.h>
#include <vector>

namespace test_support {

using netgent::SeededRng;
using netgent::page::DomNode;
using netgent::page::PageSnapshot;
using netgent::page::SelectorAst;
using netgent::page::SimpleSelector;

inline std::string pick_word(SeededRng& rng, const std::vector<std::string>& pool) {
    return pool[static_cast<size_t>(rng.below(pool.size()))];
}

inline const std::vector<std::string>& tag_pool() {
    static const std::vector<std::string> pool = {"div", "span", "button", "a", "input", "p"};
    return pool;
}

inline const std::vector<std::string>& word_pool() {
    static const std::vector<std::string> pool = {"alpha", "beta", "gamma", "delta", "login",
                                                  "play", "card", "hero", "nav", "tile"};
    return pool;
}

// Random tree of about `target_nodes` nodes with ids/classes/attributes drawn
// from small pools so selectors and trees collide often.
inline DomNode random_tree(SeededRng& rng, int target_nodes) {
    std::vector<DomNode*> open;
    DomNode root;
    root.tag = "html";
    open.push_back(&root);
    for (int i = 1; i < target_nodes; ++i) {
        DomNode* parent = open[static_cast<size_t>(rng.below(open.size()))];
        DomNode child;
        child.tag = pick_word(rng, tag_pool());
        if (rng.bernoulli(0.4))
            child.id = pick_word(rng, word_pool()) + std::to_string(rng.below(6));
        const uint64_t n_classes = rng.below(3);
        for (uint64_t c = 0; c < n_classes; ++c) {
            const std::string cls = pick_word(rng, word_pool());
            if (std::find(child.classes.begin(), child.classes.end(), cls) == child.classes.end())
                child.classes.push_back(cls);
        }
        if (rng.bernoulli(0.4))
            child.attributes[pick_word(rng, {"role", "href", "value", "aria-label"})] =
                pick_word(rng, word_pool());
        if (rng.bernoulli(0.5)) child.text = pick_word(rng, word_pool());
        parent->children.push_back(std::move(child));
        open.push_back(&parent->children.back());
        // Re-collect pointers: vector growth may have moved children.
        open.clear();
        std::vector<DomNode*> stack{&root};
        while (!stack.empty()) {
            DomNode* n = stack.back();
            stack.pop_back();
            open.push_back(n);
            for (auto& c : n->children) stack.push_back(&c);
        }
    }
    netgent::page::assign_node_indexes(root);
    return root;
}

inline SimpleSelector random_step(SeededRng& rng) {
    SimpleSelector step;
    while (step.empty()) {
        if (rng.bernoulli(0.5)) step.tag = pick_word(rng, tag_pool());
        if (rng.bernoulli(0.35))
            step.id = pick_word(rng, word_pool()) + std::to_string(rng.below(6));
        if (rng.bernoulli(0.35)) step.classes.push_back(pick_word(rng, word_pool()));
        if (rng.bernoulli(0.25))
            step.attr_equals.emplace_back(pick_word(rng, {"role", "href", "value"}),
                                          pick_word(rng, word_pool()));
    }
    return step;
}

inline SelectorAst random_selector(SeededRng& rng, int max_steps = 3) {
    SelectorAst ast;
    const int n = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(max_steps)));
    for (int i = 0; i < n; ++i) ast.steps.push_back(random_step(rng));
    return ast;
}

// --- Independent brute-force selector oracle -------------------------------

inline bool oracle_simple_match(const SimpleSelector& s, const DomNode& n) {
    if (s.tag && n.tag != *s.tag) return false;
    if (s.id) {
        if (!n.id || *n.id != *s.id) return false;
    }
    for (const auto& cls : s.classes) {
        bool found = false;
        for (const auto& have : n.classes) found = found || have == cls;
        if (!found) return false;
    }
    for (const auto& [k, v] : s.attr_equals) {
        auto it = n.attributes.find(k);
        if (it == n.attributes.end() || it->second != v) return false;
    }
    return true;
}

inline bool oracle_chain_exists(const std::vector<const DomNode*>& ancestors, size_t from,
                                const std::vector<SimpleSelector>& steps, size_t step) {
    if (step == steps.size()) return true;
    for (size_t i = from; i < ancestors.size(); ++i) {
        if (oracle_simple_match(steps[step], *ancestors[i]) &&
            oracle_chain_exists(ancestors, i + 1, steps, step + 1))
            return true;
    }
    return false;
}

inline void oracle_query_walk(const DomNode& node, std::vector<const DomNode*>& path,
                              const SelectorAst& sel, std::vector<const DomNode*>& out) {
    if (oracle_simple_match(sel.steps.back(), node)) {
        std::vector<SimpleSelector> prefix(sel.steps.begin(), sel.steps.end() - 1);
        if (oracle_chain_exists(path, 0, prefix, 0)) out.push_back(&node);
    }
    path.push_back(&node);
    for (const auto& c : node.children) oracle_query_walk(c, path, sel, out);
    path.pop_back();
}

// Tests every node and every ancestor chain by exhaustive recursion.
inline std::vector<const DomNode*> oracle_query(const DomNode& root, const SelectorAst& sel) {
    std::vector<const DomNode*> out;
    std::vector<const DomNode*> path;
    oracle_query_walk(root, path, sel, out);
    return out;
}

// --- Independent glob oracle (plain recursion) ------------------------------

inline bool oracle_glob(const std::string& g, size_t gi, const std::string& t, size_t ti) {
    if (gi == g.size()) return ti == t.size();
    if (g[gi] == '*') {
        for (size_t skip = 0; ti + skip <= t.size(); ++skip) {
            if (oracle_glob(g, gi + 1, t, ti + skip)) return true;
        }
        return false;
    }
    if (ti == t.size()) return false;
    if (g[gi] == '?' || g[gi] == t[ti]) return oracle_glob(g, gi + 1, t, ti + 1);
    return false;
}

inline bool oracle_glob_match(const std::string& glob, const std::string& text) {
    return oracle_glob(glob, 0, text, 0);
}

// Aggregated subtree text recomputed independently of the engine.
inline void oracle_collect_text(const DomNode& n, std::string& out) {
    if (!n.text.empty()) {
        if (!out.empty()) out += " ";
        out += n.text;
    }
    for (const auto& c : n.children) oracle_collect_text(c, out);
}

// --- Random structured values ------------------------------------------------

inline netgent::detect::Detector random_detector(SeededRng& rng, const DomNode& root) {
    using namespace netgent::detect;
    Detector d;
    d.required = rng.bernoulli(0.7);
    const uint64_t kind = rng.below(3);
    if (kind == 0) {
        d.payload = ElementPayload{random_selector(rng, 2)};
    } else if (kind == 1) {
        // Mix needles that exist in the tree with ones that rarely do.
        std::string text;
        oracle_collect_text(root, text);
        std::string needle;
        if (!text.empty() && rng.bernoulli(0.5)) {
            const size_t start = static_cast<size_t>(rng.below(text.size()));
            const size_t len = 1 + static_cast<size_t>(rng.below(5));
            needle = text.substr(start, len);
        }
        if (needle.empty() || needle == " ") needle = pick_word(rng, word_pool());
        TextPayload tx;
        tx.needle = needle;
        if (rng.bernoulli(0.3)) tx.subtree_of = random_selector(rng, 1);
        d.payload = std::move(tx);
    } else {
        std::string glob = rng.bernoulli(0.5) ? "*" + pick_word(rng, word_pool()) + "*"
                                              : "https://?ite.example/" + pick_word(rng, word_pool());
        d.payload = UrlPayload{glob};
    }
    return d;
}

inline netgent::workflow::AbstractWorkflow random_workflow(SeededRng& rng) {
    using namespace netgent::workflow;
    AbstractWorkflow w;
    w.workflow_id = "wf_" + std::to_string(rng.below(100000));
    w.app_label = pick_word(rng, word_pool());
    w.entry_url = "https://app.example/" + pick_word(rng, word_pool());
    w.max_steps = 1 + static_cast<int>(rng.below(200));
    const int n = 1 + static_cast<int>(rng.below(6));
    for (int i = 0; i < n; ++i) {
        AbstractState s;
        s.name = std::string(1, static_cast<char>('a' + i)) + "_" +
                 pick_word(rng, word_pool()) + std::to_string(i);
        s.trigger_prose = "when the " + pick_word(rng, word_pool()) + " page shows " +
                          pick_word(rng, word_pool());
        s.is_end = false;
        s.action_prose = "press " + pick_word(rng, word_pool()) + " and wait";
        const uint64_t hints = rng.below(3);
        for (uint64_t h = 0; h < hints; ++h)
            s.hints["k" + std::to_string(h)] = pick_word(rng, word_pool());
        s.declaration_index = i;
        w.states.push_back(std::move(s));
    }
    w.states.back().is_end = true;
    if (rng.bernoulli(0.5)) w.states.back().action_prose.clear();
    return w;
}

inline netgent::actions::ActionProgram random_program(SeededRng& rng) {
    using namespace netgent::actions;
    ActionProgram p;
    const int n = 1 + static_cast<int>(rng.below(6));
    for (int i = 0; i < n; ++i) {
        switch (rng.below(10)) {
            case 0: p.instructions.push_back(Navigate{"https://app.example/p" +
                                                      std::to_string(rng.below(10))}); break;
            case 1: p.instructions.push_back(Click{random_selector(rng, 2)}); break;
            case 2:
                p.instructions.push_back(TypeText{random_selector(rng, 1), "hello world", false});
                break;
            case 3:
                p.instructions.push_back(
                    TypeText{random_selector(rng, 1), "${SOME_SECRET}", true});
                break;
            case 4: p.instructions.push_back(PressKey{"Enter"}); break;
            case 5: p.instructions.push_back(Hover{random_selector(rng, 1)}); break;
            case 6: p.instructions.push_back(Scroll{static_cast<int>(rng.below(600)) - 300}); break;
            case 7:
                p.instructions.push_back(DragToFraction{
                    random_selector(rng, 1), static_cast<double>(rng.below(101)) / 100.0});
                break;
            case 8: p.instructions.push_back(Sleep{static_cast<int>(rng.below(500))}); break;
            default: {
                netgent::detect::Detector d;
                d.payload = netgent::detect::UrlPayload{"*" + pick_word(rng, word_pool()) + "*"};
                if (rng.bernoulli(0.5)) {
                    p.instructions.push_back(WaitFor{d, 1 + static_cast<int>(rng.below(2000))});
                } else {
                    p.instructions.push_back(AssertDetector{d});
                }
                break;
            }
        }
    }
    return p;
}

inline PageSnapshot snapshot_of(DomNode root, std::string url = "https://site.example/page",
                                std::string title = "Page") {
    netgent::page::assign_node_indexes(root);
    PageSnapshot snap;
    snap.url = std::move(url);
    snap.title = std::move(title);
    snap.root = std::move(root);
    snap.captured_at = 1;
    snap.env_revision = 0;
    return snap;
}

// Unique scratch directory under the system temp root, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<uint64_t> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("netgent-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
                 std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::string str() const { return path_.string(); }

private:
    std::filesystem::path path_;
};

} // namespace test_support
