#include "netgent/workflow.hpp"

#include "netgent/page_model.hpp"

#include <cctype>
#include <sstream>

namespace netgent::workflow {
namespace {

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            lines.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) lines.push_back(cur);
    return lines;
}

// "key: value" with the value trimmed; false when there is no colon.
bool split_kv(const std::string& line, std::string& key, std::string& value) {
    const size_t colon = line.find(':');
    if (colon == std::string::npos) return false;
    key = trim(line.substr(0, colon));
    value = trim(line.substr(colon + 1));
    return !key.empty();
}

} // namespace

const AbstractState* AbstractWorkflow::find_state(const std::string& name) const {
    for (const AbstractState& s : states) {
        if (s.name == name) return &s;
    }
    return nullptr;
}

bool valid_state_name(const std::string& name) {
    if (name.empty()) return false;
    if (!std::islower(static_cast<unsigned char>(name[0]))) return false;
    for (char c : name) {
        const bool ok = std::islower(static_cast<unsigned char>(c)) ||
                        std::isdigit(static_cast<unsigned char>(c)) || c == '_';
        if (!ok) return false;
    }
    return true;
}

AbstractWorkflow parse_workflow(const std::string& document) {
    const std::vector<std::string> lines = split_lines(document);
    AbstractWorkflow w;
    w.max_steps = 60;
    bool saw_workflow = false, saw_app = false, saw_entry = false;
    AbstractState* current = nullptr;

    size_t i = 0;
    while (i < lines.size()) {
        const int line_no = static_cast<int>(i) + 1;
        std::string line = trim(lines[i]);
        if (line.empty()) {
            ++i;
            continue;
        }

        if (line.rfind("[state]", 0) == 0) {
            AbstractState s;
            s.name = trim(line.substr(7));
            if (s.name.empty()) throw ParseError("missing state name after [state]", line_no);
            s.declaration_index = static_cast<int>(w.states.size());
            w.states.push_back(std::move(s));
            current = &w.states.back();
            ++i;
            continue;
        }

        std::string key, value;
        if (!split_kv(line, key, value)) throw ParseError("expected 'key: value'", line_no);

        // Backslash continuation joins logical lines with a single space.
        while (!value.empty() && value.back() == '\\') {
            value.pop_back();
            value = trim(value);
            ++i;
            if (i >= lines.size()) throw ParseError("dangling continuation", line_no);
            const std::string cont = trim(lines[i]);
            if (!value.empty() && !cont.empty()) value += " ";
            value += cont;
        }
        ++i;

        if (!current) {
            if (key == "workflow") {
                w.workflow_id = value;
                saw_workflow = true;
            } else if (key == "app") {
                w.app_label = value;
                saw_app = true;
            } else if (key == "entry") {
                w.entry_url = value;
                saw_entry = true;
            } else if (key == "max_steps") {
                try {
                    w.max_steps = std::stoi(value);
                } catch (const std::exception&) {
                    throw ParseError("max_steps is not an integer", line_no);
                }
            } else {
                throw ParseError("unknown header key '" + key + "'", line_no);
            }
            continue;
        }

        if (key == "trigger") {
            current->trigger_prose = value;
        } else if (key == "action") {
            current->action_prose = value;
        } else if (key == "end") {
            if (value == "true") current->is_end = true;
            else if (value == "false") current->is_end = false;
            else throw ParseError("end must be true or false", line_no);
        } else if (key.rfind("hint.", 0) == 0) {
            const std::string hint_key = key.substr(5);
            if (hint_key.empty()) throw ParseError("empty hint key", line_no);
            current->hints[hint_key] = value;
        } else {
            throw ParseError("unknown state key '" + key + "'", line_no);
        }
    }

    if (!saw_workflow) throw ParseError("missing 'workflow:' header", 1);
    if (!saw_app) throw ParseError("missing 'app:' header", 1);
    if (!saw_entry) throw ParseError("missing 'entry:' header", 1);

    validate_workflow(w);
    return w;
}

void validate_workflow(const AbstractWorkflow& w) {
    if (w.workflow_id.empty()) throw ValidationError("empty workflow id");
    if (!page::is_valid_url(w.entry_url))
        throw ValidationError("entry url is not a valid absolute URL: " + w.entry_url);
    if (w.max_steps <= 0) throw ValidationError("max_steps must be positive");
    if (w.states.empty()) throw ValidationError("workflow declares no states");

    bool any_end = false;
    for (size_t i = 0; i < w.states.size(); ++i) {
        const AbstractState& s = w.states[i];
        if (!valid_state_name(s.name))
            throw ValidationError("invalid state name '" + s.name + "'");
        if (s.declaration_index != static_cast<int>(i))
            throw ValidationError("declaration_index mismatch for state '" + s.name + "'");
        if (s.trigger_prose.empty())
            throw ValidationError("empty trigger for state '" + s.name + "'");
        if (!s.is_end && s.action_prose.empty())
            throw ValidationError("empty action for state '" + s.name + "'");
        for (size_t k = 0; k < i; ++k) {
            if (w.states[k].name == s.name)
                throw ValidationError("duplicate state name '" + s.name + "'");
        }
        any_end = any_end || s.is_end;
    }
    if (!any_end) throw ValidationError("workflow has no end state");
}

std::string serialize_workflow(const AbstractWorkflow& w) {
    std::ostringstream out;
    out << "workflow: " << w.workflow_id << "\n";
    out << "app: " << w.app_label << "\n";
    out << "entry: " << w.entry_url << "\n";
    out << "max_steps: " << w.max_steps << "\n";
    for (const AbstractState& s : w.states) {
        out << "\n[state] " << s.name << "\n";
        out << "trigger: " << s.trigger_prose << "\n";
        if (!s.action_prose.empty()) out << "action: " << s.action_prose << "\n";
        if (s.is_end) out << "end: true\n";
        for (const auto& [k, v] : s.hints) out << "hint." << k << ": " << v << "\n";
    }
    return out.str();
}

std::string states_as_rules(const AbstractWorkflow& w) {
    std::ostringstream out;
    for (const AbstractState& s : w.states) {
        out << "- state '" << s.name << "'";
        if (s.is_end) out << " (end)";
        out << ": if " << s.trigger_prose;
        if (!s.action_prose.empty()) out << ", then " << s.action_prose;
        out << "\n";
    }
    return out.str();
}

} // namespace netgent::workflow
