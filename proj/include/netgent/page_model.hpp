#pragma once

#include "netgent/errors.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace netgent::page {

// One element of the observed page tree. Values only; trees are shared by copy.
struct DomNode {
    std::string tag;                            // lowercase, non-empty
    std::optional<std::string> id;
    std::vector<std::string> classes;           // ordered, no duplicates
    std::map<std::string, std::string> attributes;
    std::string text;                           // own text, not descendants'
    std::vector<DomNode> children;
    int node_index = 0;                         // depth-first pre-order position

    bool operator==(const DomNode&) const = default;
};

struct PageSnapshot {
    std::string url;
    std::string title;
    DomNode root;
    int64_t captured_at = 0;                    // monotonic tick
    int64_t env_revision = 0;                   // bumps on any environment mutation
    std::optional<std::string> screenshot_ref;  // opaque attachment, never interpreted
};

// Minimal selector grammar: descendant-combined simple steps.
//   step ( ' ' step )*    step = tag? ('#'id)? ('.'class)* ('['name'='value']')*
// Attribute values are bare tokens or double-quoted strings (no escapes).
struct SimpleSelector {
    std::optional<std::string> tag;
    std::optional<std::string> id;
    std::vector<std::string> classes;
    std::vector<std::pair<std::string, std::string>> attr_equals;

    bool empty() const {
        return !tag && !id && classes.empty() && attr_equals.empty();
    }
    bool operator==(const SimpleSelector&) const = default;
};

struct SelectorAst {
    std::vector<SimpleSelector> steps;          // non-empty

    bool operator==(const SelectorAst&) const = default;
};

class SyntaxError : public Error {
public:
    SyntaxError(const std::string& what, size_t offset)
        : Error(what + " at offset " + std::to_string(offset)), offset(offset) {}
    size_t offset;
};

SelectorAst parse_selector(const std::string& input);
std::string serialize_selector(const SelectorAst& sel);

// All nodes matching the descendant chain, in document order, duplicate-free.
std::vector<const DomNode*> query_selector(const DomNode& root, const SelectorAst& sel);

bool simple_selector_matches(const SimpleSelector& step, const DomNode& node);

// Own text of every node in the subtree, document order, joined with single
// spaces between non-empty pieces (approximates rendered text).
std::string subtree_text(const DomNode& node);

// Assigns depth-first pre-order node_index values starting at 0.
void assign_node_indexes(DomNode& root);

// Canonical serialization: objects with keys tag/id/classes/attributes/text/
// children in exactly that order, so dumps are byte-stable for hashing.
nlohmann::ordered_json dom_to_json(const DomNode& node);
DomNode dom_from_json(const nlohmann::json& j);   // node_index reassigned by caller
std::string dom_to_canonical_text(const DomNode& root);
DomNode dom_from_canonical_text(const std::string& text);

// scheme://host[/path][?query]
bool is_valid_url(const std::string& url);

} // namespace netgent::page
