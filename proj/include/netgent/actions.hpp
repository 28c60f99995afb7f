#pragma once

#include "netgent/detectors.hpp"
#include "netgent/page_model.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace netgent::actions {

// The closed, portable instruction set replayed by environments. Cached
// programs never carry free-form code, only these ops.
struct Navigate {
    std::string url;
    bool operator==(const Navigate&) const = default;
};
struct Click {
    page::SelectorAst selector;
    bool operator==(const Click&) const = default;
};
struct TypeText {
    page::SelectorAst selector;
    std::string text;      // with secret=true this must be a ${ENV_NAME} placeholder
    bool secret = false;
    bool operator==(const TypeText&) const = default;
};
struct PressKey {
    std::string key;
    bool operator==(const PressKey&) const = default;
};
struct Hover {
    page::SelectorAst selector;
    bool operator==(const Hover&) const = default;
};
struct Scroll {
    int delta_y = 0;
    bool operator==(const Scroll&) const = default;
};
struct DragToFraction {
    page::SelectorAst selector;
    double fraction = 0.0;   // in [0,1] of the element's min..max range
    bool operator==(const DragToFraction&) const = default;
};
struct WaitFor {
    detect::Detector detector;
    int timeout_ms = 1000;   // > 0
    bool operator==(const WaitFor&) const = default;
};
struct Sleep {
    int ms = 0;              // >= 0
    bool operator==(const Sleep&) const = default;
};
struct AssertDetector {
    detect::Detector detector;
    bool operator==(const AssertDetector&) const = default;
};

using Instruction = std::variant<Navigate, Click, TypeText, PressKey, Hover, Scroll,
                                 DragToFraction, WaitFor, Sleep, AssertDetector>;

inline constexpr int kProgramFormatVersion = 1;

struct ActionProgram {
    std::vector<Instruction> instructions;   // non-empty
    int version = kProgramFormatVersion;

    bool operator==(const ActionProgram&) const = default;
};

class FormatError : public Error {
public:
    using Error::Error;
};

const char* instruction_op_name(const Instruction& ins);
bool is_secret_placeholder(const std::string& text);   // ${ENV_NAME}

void validate_instruction(const Instruction& ins);
void validate_program(const ActionProgram& p);

nlohmann::ordered_json instruction_to_json(const Instruction& ins);
Instruction instruction_from_json(const nlohmann::json& j);
nlohmann::ordered_json program_to_json(const ActionProgram& p);
ActionProgram program_from_json(const nlohmann::json& j);
std::string serialize_program(const ActionProgram& p);
ActionProgram deserialize_program(const std::string& bytes);

// Seeded human-realism generators. Outputs are pure functions of
// (inputs, params); generators hold no global state.
struct RealismParams {
    uint64_t seed = 0;
    int mouse_samples = 16;        // >= 2
    int keystroke_mean_ms = 80;    // >= 0
    int keystroke_jitter_ms = 0;   // >= 0
    double pause_probability = 0.0;
    int pause_ms = 0;
};

struct Point {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Point&) const = default;
};

// Cubic Bezier sampled at mouse_samples uniform parameter values; control
// points drawn inside the from/to bounding box expanded by 25% per axis.
// First sample is exactly `from`, last exactly `to`.
std::vector<Point> plan_mouse_path(Point from, Point to, const RealismParams& p);

// One (character, delay_ms) entry per input character; delays uniform in
// [mean-jitter, mean+jitter] clamped at 0, plus pause_ms with the configured
// probability.
std::vector<std::pair<char, int>> keystroke_schedule(const std::string& text,
                                                     const RealismParams& p);

} // namespace netgent::actions
