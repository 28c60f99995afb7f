#include "netgent/detectors.hpp"

namespace netgent::detect {

bool glob_match(const std::string& glob, const std::string& text) {
    // Two-pointer wildcard match with backtracking to the last '*'.
    size_t g = 0, t = 0;
    size_t star = std::string::npos, star_t = 0;
    while (t < text.size()) {
        if (g < glob.size() && (glob[g] == '?' || glob[g] == text[t])) {
            ++g;
            ++t;
        } else if (g < glob.size() && glob[g] == '*') {
            star = g++;
            star_t = t;
        } else if (star != std::string::npos) {
            g = star + 1;
            t = ++star_t;
        } else {
            return false;
        }
    }
    while (g < glob.size() && glob[g] == '*') ++g;
    return g == glob.size();
}

bool match_detector(const Detector& d, const page::PageSnapshot& snap) {
    if (const auto* el = std::get_if<ElementPayload>(&d.payload)) {
        return !page::query_selector(snap.root, el->selector).empty();
    }
    if (const auto* tx = std::get_if<TextPayload>(&d.payload)) {
        if (!tx->subtree_of) {
            return page::subtree_text(snap.root).find(tx->needle) != std::string::npos;
        }
        for (const page::DomNode* scope : page::query_selector(snap.root, *tx->subtree_of)) {
            if (page::subtree_text(*scope).find(tx->needle) != std::string::npos) return true;
        }
        return false;
    }
    const auto& url = std::get<UrlPayload>(d.payload);
    return glob_match(url.glob, snap.url);
}

MatchResult match_detector_set(const DetectorSet& ds, const page::PageSnapshot& snap) {
    MatchResult r;
    r.matched = true;
    for (size_t i = 0; i < ds.detectors.size(); ++i) {
        const bool hit = match_detector(ds.detectors[i], snap);
        if (hit) ++r.score;
        if (!hit && ds.detectors[i].required && r.matched) {
            r.matched = false;
            r.required_failed = i;
        }
    }
    return r;
}

void validate_detector(const Detector& d) {
    if (const auto* tx = std::get_if<TextPayload>(&d.payload)) {
        if (tx->needle.empty()) throw Error("text detector with empty needle");
    } else if (const auto* url = std::get_if<UrlPayload>(&d.payload)) {
        if (url->glob.empty()) throw Error("url detector with empty glob");
    } else {
        const auto& el = std::get<ElementPayload>(d.payload);
        if (el.selector.steps.empty()) throw Error("element detector with empty selector");
    }
}

void validate_detector_set(const DetectorSet& ds) {
    if (ds.detectors.empty()) throw Error("detector set is empty");
    bool any_required = false;
    for (const Detector& d : ds.detectors) {
        validate_detector(d);
        any_required = any_required || d.required;
    }
    if (!any_required) throw Error("detector set has no required detector");
}

nlohmann::ordered_json detector_to_json(const Detector& d) {
    nlohmann::ordered_json j;
    if (const auto* el = std::get_if<ElementPayload>(&d.payload)) {
        j["kind"] = "element";
        j["required"] = d.required;
        j["selector"] = page::serialize_selector(el->selector);
    } else if (const auto* tx = std::get_if<TextPayload>(&d.payload)) {
        j["kind"] = "text";
        j["required"] = d.required;
        j["needle"] = tx->needle;
        if (tx->subtree_of) {
            j["where"] = nlohmann::ordered_json{
                {"subtree_of", page::serialize_selector(*tx->subtree_of)}};
        } else {
            j["where"] = "anywhere";
        }
    } else {
        const auto& url = std::get<UrlPayload>(d.payload);
        j["kind"] = "url";
        j["required"] = d.required;
        j["glob"] = url.glob;
    }
    return j;
}

Detector detector_from_json(const nlohmann::json& j) {
    Detector d;
    d.required = j.value("required", true);
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "element") {
        d.payload = ElementPayload{page::parse_selector(j.at("selector").get<std::string>())};
    } else if (kind == "text") {
        TextPayload tx;
        tx.needle = j.at("needle").get<std::string>();
        if (j.contains("where") && j.at("where").is_object()) {
            tx.subtree_of =
                page::parse_selector(j.at("where").at("subtree_of").get<std::string>());
        }
        d.payload = std::move(tx);
    } else if (kind == "url") {
        d.payload = UrlPayload{j.at("glob").get<std::string>()};
    } else {
        throw Error("unknown detector kind: " + kind);
    }
    validate_detector(d);
    return d;
}

nlohmann::ordered_json detector_set_to_json(const DetectorSet& ds) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (const Detector& d : ds.detectors) list.push_back(detector_to_json(d));
    j["detectors"] = std::move(list);
    return j;
}

DetectorSet detector_set_from_json(const nlohmann::json& j) {
    DetectorSet ds;
    for (const auto& d : j.at("detectors")) ds.detectors.push_back(detector_from_json(d));
    validate_detector_set(ds);
    return ds;
}

} // namespace netgent::detect
