#pragma once

#include "netgent/page_model.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace netgent::detect {

// State-recognition predicates over a PageSnapshot: element presence, text
// substring, or URL glob. Matching is deterministic; no fuzzy thresholds.
struct ElementPayload {
    page::SelectorAst selector;
    bool operator==(const ElementPayload&) const = default;
};

struct TextPayload {
    std::string needle;                              // non-empty, case-sensitive
    std::optional<page::SelectorAst> subtree_of;     // absent = anywhere
    bool operator==(const TextPayload&) const = default;
};

struct UrlPayload {
    std::string glob;   // '*' spans any chars including '/', '?' matches one
    bool operator==(const UrlPayload&) const = default;
};

struct Detector {
    std::variant<ElementPayload, TextPayload, UrlPayload> payload;
    bool required = true;

    bool operator==(const Detector&) const = default;
};

struct DetectorSet {
    std::vector<Detector> detectors;   // non-empty, at least one required

    bool operator==(const DetectorSet&) const = default;
};

struct MatchResult {
    bool matched = false;                    // every required detector matched
    int score = 0;                           // count of matching detectors, any kind
    std::optional<size_t> required_failed;   // first failing required detector

    bool operator==(const MatchResult&) const = default;
};

// Full-string glob: '*' spans any characters (including '/'), '?' exactly one.
bool glob_match(const std::string& glob, const std::string& text);

bool match_detector(const Detector& d, const page::PageSnapshot& snap);

// Conjunction over required detectors, evaluated in list order; score counts
// every matching detector. Adding an optional detector never flips `matched`.
MatchResult match_detector_set(const DetectorSet& ds, const page::PageSnapshot& snap);

void validate_detector(const Detector& d);
void validate_detector_set(const DetectorSet& ds);

// Wire shape: {kind, required, selector | needle,where | glob}.
nlohmann::ordered_json detector_to_json(const Detector& d);
Detector detector_from_json(const nlohmann::json& j);
nlohmann::ordered_json detector_set_to_json(const DetectorSet& ds);
DetectorSet detector_set_from_json(const nlohmann::json& j);

} // namespace netgent::detect
