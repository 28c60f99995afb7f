#include "netgent/actions.hpp"

#include "netgent/rng.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace netgent::actions {
namespace {

struct OpNameVisitor {
    const char* operator()(const Navigate&) const { return "navigate"; }
    const char* operator()(const Click&) const { return "click"; }
    const char* operator()(const TypeText&) const { return "type_text"; }
    const char* operator()(const PressKey&) const { return "press_key"; }
    const char* operator()(const Hover&) const { return "hover"; }
    const char* operator()(const Scroll&) const { return "scroll"; }
    const char* operator()(const DragToFraction&) const { return "drag_to_fraction"; }
    const char* operator()(const WaitFor&) const { return "wait_for"; }
    const char* operator()(const Sleep&) const { return "sleep"; }
    const char* operator()(const AssertDetector&) const { return "assert_detector"; }
};

std::string sel_str(const page::SelectorAst& s) { return page::serialize_selector(s); }

} // namespace

const char* instruction_op_name(const Instruction& ins) {
    return std::visit(OpNameVisitor{}, ins);
}

bool is_secret_placeholder(const std::string& text) {
    if (text.size() < 4 || text.rfind("${", 0) != 0 || text.back() != '}') return false;
    const std::string name = text.substr(2, text.size() - 3);
    if (!std::isalpha(static_cast<unsigned char>(name[0])) && name[0] != '_') return false;
    for (char c : name) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
    }
    return true;
}

void validate_instruction(const Instruction& ins) {
    if (const auto* nav = std::get_if<Navigate>(&ins)) {
        if (!page::is_valid_url(nav->url)) throw FormatError("navigate: invalid url " + nav->url);
    } else if (const auto* ty = std::get_if<TypeText>(&ins)) {
        if (ty->secret && !is_secret_placeholder(ty->text))
            throw FormatError("type_text: secret text must be a ${ENV_NAME} placeholder");
    } else if (const auto* drag = std::get_if<DragToFraction>(&ins)) {
        if (!(drag->fraction >= 0.0 && drag->fraction <= 1.0))
            throw FormatError("drag_to_fraction: fraction out of [0,1]");
    } else if (const auto* wf = std::get_if<WaitFor>(&ins)) {
        if (wf->timeout_ms <= 0) throw FormatError("wait_for: timeout_ms must be positive");
        detect::validate_detector(wf->detector);
    } else if (const auto* sl = std::get_if<Sleep>(&ins)) {
        if (sl->ms < 0) throw FormatError("sleep: ms must be non-negative");
    } else if (const auto* as = std::get_if<AssertDetector>(&ins)) {
        detect::validate_detector(as->detector);
    }
}

void validate_program(const ActionProgram& p) {
    if (p.version != kProgramFormatVersion)
        throw FormatError("unsupported program version " + std::to_string(p.version));
    if (p.instructions.empty()) throw FormatError("program has no instructions");
    for (const Instruction& ins : p.instructions) validate_instruction(ins);
}

nlohmann::ordered_json instruction_to_json(const Instruction& ins) {
    nlohmann::ordered_json j;
    j["op"] = instruction_op_name(ins);
    if (const auto* nav = std::get_if<Navigate>(&ins)) {
        j["url"] = nav->url;
    } else if (const auto* cl = std::get_if<Click>(&ins)) {
        j["selector"] = sel_str(cl->selector);
    } else if (const auto* ty = std::get_if<TypeText>(&ins)) {
        j["selector"] = sel_str(ty->selector);
        j["text"] = ty->text;
        j["secret"] = ty->secret;
    } else if (const auto* pk = std::get_if<PressKey>(&ins)) {
        j["key"] = pk->key;
    } else if (const auto* hv = std::get_if<Hover>(&ins)) {
        j["selector"] = sel_str(hv->selector);
    } else if (const auto* sc = std::get_if<Scroll>(&ins)) {
        j["delta_y"] = sc->delta_y;
    } else if (const auto* drag = std::get_if<DragToFraction>(&ins)) {
        j["selector"] = sel_str(drag->selector);
        j["fraction"] = drag->fraction;
    } else if (const auto* wf = std::get_if<WaitFor>(&ins)) {
        j["detector"] = detect::detector_to_json(wf->detector);
        j["timeout_ms"] = wf->timeout_ms;
    } else if (const auto* sl = std::get_if<Sleep>(&ins)) {
        j["ms"] = sl->ms;
    } else if (const auto* as = std::get_if<AssertDetector>(&ins)) {
        j["detector"] = detect::detector_to_json(as->detector);
    }
    return j;
}

Instruction instruction_from_json(const nlohmann::json& j) {
    const std::string op = j.at("op").get<std::string>();
    Instruction ins;
    if (op == "navigate") {
        ins = Navigate{j.at("url").get<std::string>()};
    } else if (op == "click") {
        ins = Click{page::parse_selector(j.at("selector").get<std::string>())};
    } else if (op == "type_text") {
        ins = TypeText{page::parse_selector(j.at("selector").get<std::string>()),
                       j.at("text").get<std::string>(), j.value("secret", false)};
    } else if (op == "press_key") {
        ins = PressKey{j.at("key").get<std::string>()};
    } else if (op == "hover") {
        ins = Hover{page::parse_selector(j.at("selector").get<std::string>())};
    } else if (op == "scroll") {
        ins = Scroll{j.at("delta_y").get<int>()};
    } else if (op == "drag_to_fraction") {
        ins = DragToFraction{page::parse_selector(j.at("selector").get<std::string>()),
                             j.at("fraction").get<double>()};
    } else if (op == "wait_for") {
        ins = WaitFor{detect::detector_from_json(j.at("detector")),
                      j.at("timeout_ms").get<int>()};
    } else if (op == "sleep") {
        ins = Sleep{j.at("ms").get<int>()};
    } else if (op == "assert_detector") {
        ins = AssertDetector{detect::detector_from_json(j.at("detector"))};
    } else {
        throw FormatError("unknown op '" + op + "'");
    }
    validate_instruction(ins);
    return ins;
}

nlohmann::ordered_json program_to_json(const ActionProgram& p) {
    nlohmann::ordered_json j;
    j["version"] = p.version;
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (const Instruction& ins : p.instructions) list.push_back(instruction_to_json(ins));
    j["instructions"] = std::move(list);
    return j;
}

ActionProgram program_from_json(const nlohmann::json& j) {
    ActionProgram p;
    if (!j.contains("version")) throw FormatError("program missing version field");
    p.version = j.at("version").get<int>();
    if (p.version != kProgramFormatVersion)
        throw FormatError("unsupported program version " + std::to_string(p.version));
    for (const auto& ins : j.at("instructions")) {
        try {
            p.instructions.push_back(instruction_from_json(ins));
        } catch (const page::SyntaxError& e) {
            throw FormatError(std::string("bad selector in instruction: ") + e.what());
        } catch (const Error& e) {
            if (dynamic_cast<const FormatError*>(&e)) throw;
            throw FormatError(e.what());
        }
    }
    validate_program(p);
    return p;
}

std::string serialize_program(const ActionProgram& p) {
    validate_program(p);
    return program_to_json(p).dump();
}

ActionProgram deserialize_program(const std::string& bytes) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(bytes);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("program is not valid structured text: ") + e.what());
    }
    return program_from_json(j);
}

std::vector<Point> plan_mouse_path(Point from, Point to, const RealismParams& p) {
    const int n = std::max(p.mouse_samples, 2);
    SeededRng rng(p.seed);

    const double min_x = std::min(from.x, to.x), max_x = std::max(from.x, to.x);
    const double min_y = std::min(from.y, to.y), max_y = std::max(from.y, to.y);
    const double pad_x = 0.25 * (max_x - min_x);
    const double pad_y = 0.25 * (max_y - min_y);
    const double lo_x = min_x - pad_x, hi_x = max_x + pad_x;
    const double lo_y = min_y - pad_y, hi_y = max_y + pad_y;

    const Point c1{rng.uniform_double(lo_x, hi_x), rng.uniform_double(lo_y, hi_y)};
    const Point c2{rng.uniform_double(lo_x, hi_x), rng.uniform_double(lo_y, hi_y)};

    std::vector<Point> path;
    path.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        if (i == 0) {
            path.push_back(from);
            continue;
        }
        if (i == n - 1) {
            path.push_back(to);
            continue;
        }
        const double t = static_cast<double>(i) / static_cast<double>(n - 1);
        const double u = 1.0 - t;
        const double b0 = u * u * u;
        const double b1 = 3.0 * u * u * t;
        const double b2 = 3.0 * u * t * t;
        const double b3 = t * t * t;
        path.push_back(Point{b0 * from.x + b1 * c1.x + b2 * c2.x + b3 * to.x,
                             b0 * from.y + b1 * c1.y + b2 * c2.y + b3 * to.y});
    }
    return path;
}

std::vector<std::pair<char, int>> keystroke_schedule(const std::string& text,
                                                     const RealismParams& p) {
    SeededRng rng(p.seed);
    std::vector<std::pair<char, int>> schedule;
    schedule.reserve(text.size());
    for (char c : text) {
        const int64_t lo = static_cast<int64_t>(p.keystroke_mean_ms) - p.keystroke_jitter_ms;
        const int64_t hi = static_cast<int64_t>(p.keystroke_mean_ms) + p.keystroke_jitter_ms;
        int64_t delay = rng.uniform_int(lo, hi);
        if (delay < 0) delay = 0;
        if (rng.bernoulli(p.pause_probability)) delay += p.pause_ms;
        schedule.emplace_back(c, static_cast<int>(delay));
    }
    return schedule;
}

} // namespace netgent::actions
