#include "netgent/page_model.hpp"

#include <algorithm>
#include <cctype>

namespace netgent::page {
namespace {

bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '-' || c == '_';
}

bool is_bare_value_char(char c) {
    // Bare attribute values stop at the closing bracket.
    return is_ident_char(c) || c == ':' || c == '/' || c == '.';
}

struct Cursor {
    const std::string& src;
    size_t pos = 0;

    bool done() const { return pos >= src.size(); }
    char peek() const { return src[pos]; }
};

std::string read_ident(Cursor& c) {
    const size_t start = c.pos;
    while (!c.done() && is_ident_char(c.peek())) ++c.pos;
    return c.src.substr(start, c.pos - start);
}

SimpleSelector parse_step(Cursor& c) {
    SimpleSelector step;
    if (!c.done() && std::isalpha(static_cast<unsigned char>(c.peek()))) {
        std::string tag = read_ident(c);
        std::transform(tag.begin(), tag.end(), tag.begin(),
                       [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
        step.tag = tag;
    }
    while (!c.done()) {
        const char k = c.peek();
        if (k == '#') {
            if (step.id) throw SyntaxError("duplicate id constraint", c.pos);
            ++c.pos;
            std::string id = read_ident(c);
            if (id.empty()) throw SyntaxError("expected identifier after '#'", c.pos);
            step.id = id;
        } else if (k == '.') {
            ++c.pos;
            std::string cls = read_ident(c);
            if (cls.empty()) throw SyntaxError("expected class name after '.'", c.pos);
            step.classes.push_back(cls);
        } else if (k == '[') {
            ++c.pos;
            std::string name = read_ident(c);
            if (name.empty()) throw SyntaxError("expected attribute name", c.pos);
            if (c.done() || c.peek() != '=')
                throw SyntaxError("expected '=' in attribute selector", c.pos);
            ++c.pos;
            std::string value;
            if (!c.done() && c.peek() == '"') {
                ++c.pos;
                const size_t start = c.pos;
                while (!c.done() && c.peek() != '"') ++c.pos;
                if (c.done()) throw SyntaxError("unterminated quoted value", c.pos);
                value = c.src.substr(start, c.pos - start);
                ++c.pos;
            } else {
                const size_t start = c.pos;
                while (!c.done() && is_bare_value_char(c.peek())) ++c.pos;
                value = c.src.substr(start, c.pos - start);
            }
            if (c.done() || c.peek() != ']')
                throw SyntaxError("expected ']' in attribute selector", c.pos);
            ++c.pos;
            step.attr_equals.emplace_back(std::move(name), std::move(value));
        } else {
            break;
        }
    }
    return step;
}

bool bare_value_ok(const std::string& value) {
    if (value.empty()) return false;
    return std::all_of(value.begin(), value.end(), is_bare_value_char);
}

// Matching state walk: mask[i] means "the first i steps are satisfied along
// the ancestor chain". A node matches when the last step matches it and all
// earlier steps were satisfied strictly above it.
void query_walk(const DomNode& node, const std::vector<SimpleSelector>& steps,
                const std::vector<char>& mask, std::vector<const DomNode*>& out) {
    const size_t k = steps.size();
    if (mask[k - 1] && simple_selector_matches(steps[k - 1], node)) {
        out.push_back(&node);
    }
    std::vector<char> child_mask = mask;
    for (size_t i = 0; i + 1 < k; ++i) {
        if (mask[i] && simple_selector_matches(steps[i], node)) child_mask[i + 1] = 1;
    }
    for (const DomNode& child : node.children) {
        query_walk(child, steps, child_mask, out);
    }
}

void collect_text(const DomNode& node, std::string& out) {
    if (!node.text.empty()) {
        if (!out.empty()) out.push_back(' ');
        out += node.text;
    }
    for (const DomNode& child : node.children) collect_text(child, out);
}

int assign_indexes_from(DomNode& node, int next) {
    node.node_index = next++;
    for (DomNode& child : node.children) next = assign_indexes_from(child, next);
    return next;
}

} // namespace

SelectorAst parse_selector(const std::string& input) {
    Cursor c{input};
    SelectorAst ast;
    while (true) {
        while (!c.done() && c.peek() == ' ') ++c.pos;
        if (c.done()) break;
        const char k = c.peek();
        const bool step_start = std::isalpha(static_cast<unsigned char>(k)) ||
                                k == '#' || k == '.' || k == '[';
        if (!step_start) throw SyntaxError("unexpected token", c.pos);
        const size_t before = c.pos;
        SimpleSelector step = parse_step(c);
        if (step.empty()) throw SyntaxError("empty selector step", before);
        if (!c.done() && c.peek() != ' ') throw SyntaxError("unexpected token", c.pos);
        ast.steps.push_back(std::move(step));
    }
    if (ast.steps.empty()) throw SyntaxError("empty selector", 0);
    return ast;
}

std::string serialize_selector(const SelectorAst& sel) {
    std::string out;
    for (size_t i = 0; i < sel.steps.size(); ++i) {
        if (i) out.push_back(' ');
        const SimpleSelector& s = sel.steps[i];
        if (s.tag) out += *s.tag;
        if (s.id) { out.push_back('#'); out += *s.id; }
        for (const std::string& c : s.classes) { out.push_back('.'); out += c; }
        for (const auto& [name, value] : s.attr_equals) {
            out.push_back('[');
            out += name;
            out.push_back('=');
            if (bare_value_ok(value)) {
                out += value;
            } else {
                out.push_back('"');
                out += value;   // values may not contain '"'
                out.push_back('"');
            }
            out.push_back(']');
        }
    }
    return out;
}

bool simple_selector_matches(const SimpleSelector& step, const DomNode& node) {
    if (step.tag && node.tag != *step.tag) return false;
    if (step.id && (!node.id || *node.id != *step.id)) return false;
    for (const std::string& cls : step.classes) {
        if (std::find(node.classes.begin(), node.classes.end(), cls) == node.classes.end())
            return false;
    }
    for (const auto& [name, value] : step.attr_equals) {
        auto it = node.attributes.find(name);
        if (it == node.attributes.end() || it->second != value) return false;
    }
    return true;
}

std::vector<const DomNode*> query_selector(const DomNode& root, const SelectorAst& sel) {
    std::vector<const DomNode*> out;
    if (sel.steps.empty()) return out;
    std::vector<char> mask(sel.steps.size(), 0);
    mask[0] = 1;
    query_walk(root, sel.steps, mask, out);
    return out;
}

std::string subtree_text(const DomNode& node) {
    std::string out;
    collect_text(node, out);
    return out;
}

void assign_node_indexes(DomNode& root) {
    assign_indexes_from(root, 0);
}

nlohmann::ordered_json dom_to_json(const DomNode& node) {
    nlohmann::ordered_json j;
    j["tag"] = node.tag;
    j["id"] = node.id ? nlohmann::ordered_json(*node.id) : nlohmann::ordered_json(nullptr);
    j["classes"] = node.classes;
    j["attributes"] = node.attributes;
    j["text"] = node.text;
    nlohmann::ordered_json children = nlohmann::ordered_json::array();
    for (const DomNode& child : node.children) children.push_back(dom_to_json(child));
    j["children"] = std::move(children);
    return j;
}

DomNode dom_from_json(const nlohmann::json& j) {
    DomNode node;
    node.tag = j.at("tag").get<std::string>();
    if (node.tag.empty()) throw Error("dom node with empty tag");
    if (j.contains("id") && !j.at("id").is_null())
        node.id = j.at("id").get<std::string>();
    if (j.contains("classes")) {
        for (const auto& c : j.at("classes")) {
            std::string cls = c.get<std::string>();
            if (std::find(node.classes.begin(), node.classes.end(), cls) == node.classes.end())
                node.classes.push_back(std::move(cls));
        }
    }
    if (j.contains("attributes")) {
        for (auto it = j.at("attributes").begin(); it != j.at("attributes").end(); ++it)
            node.attributes[it.key()] = it.value().get<std::string>();
    }
    if (j.contains("text")) node.text = j.at("text").get<std::string>();
    if (j.contains("children")) {
        for (const auto& c : j.at("children")) node.children.push_back(dom_from_json(c));
    }
    return node;
}

std::string dom_to_canonical_text(const DomNode& root) {
    return dom_to_json(root).dump();
}

DomNode dom_from_canonical_text(const std::string& text) {
    DomNode root = dom_from_json(nlohmann::json::parse(text));
    assign_node_indexes(root);
    return root;
}

bool is_valid_url(const std::string& url) {
    const size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos || scheme_end == 0) return false;
    for (size_t i = 0; i < scheme_end; ++i) {
        if (!std::isalpha(static_cast<unsigned char>(url[i]))) return false;
    }
    const size_t host_start = scheme_end + 3;
    size_t host_end = url.find_first_of("/?", host_start);
    if (host_end == std::string::npos) host_end = url.size();
    return host_end > host_start;
}

} // namespace netgent::page
