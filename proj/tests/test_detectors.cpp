#include "netgent/detectors.hpp"

#include "test_support.hpp"

#include <doctest.h>

using namespace netgent;
using namespace test_support;

namespace {

// Independent recombination of per-detector verdicts into a MatchResult.
detect::MatchResult oracle_match_set(const detect::DetectorSet& ds,
                                     const page::PageSnapshot& snap) {
    detect::MatchResult r;
    r.matched = true;
    for (size_t i = 0; i < ds.detectors.size(); ++i) {
        const detect::Detector& d = ds.detectors[i];
        bool hit = false;
        if (const auto* el = std::get_if<detect::ElementPayload>(&d.payload)) {
            hit = !oracle_query(snap.root, el->selector).empty();
        } else if (const auto* tx = std::get_if<detect::TextPayload>(&d.payload)) {
            if (tx->subtree_of) {
                for (const auto* scope : oracle_query(snap.root, *tx->subtree_of)) {
                    std::string text;
                    oracle_collect_text(*scope, text);
                    hit = hit || text.find(tx->needle) != std::string::npos;
                }
            } else {
                std::string text;
                oracle_collect_text(snap.root, text);
                hit = text.find(tx->needle) != std::string::npos;
            }
        } else {
            hit = oracle_glob_match(std::get<detect::UrlPayload>(d.payload).glob, snap.url);
        }
        if (hit) ++r.score;
        if (!hit && d.required && r.matched) {
            r.matched = false;
            r.required_failed = i;
        }
    }
    return r;
}

page::DomNode login_page() {
    page::DomNode root;
    root.tag = "html";
    page::DomNode body;
    body.tag = "body";
    page::DomNode button;
    button.tag = "button";
    button.id = "login-btn";
    button.text = "Log In";
    body.children.push_back(button);
    root.children.push_back(body);
    page::assign_node_indexes(root);
    return root;
}

} // namespace

TEST_CASE("glob semantics: * spans separators, ? matches one char") {
    CHECK(detect::glob_match("*disneyplus.com/login*",
                             "https://www.disneyplus.com/login?next=/"));
    CHECK(detect::glob_match("https://?ite.example/x", "https://site.example/x"));
    CHECK(!detect::glob_match("https://?ite.example/x", "https://suite.example/x"));
    CHECK(detect::glob_match("*", ""));
    CHECK(detect::glob_match("a*b*c", "a//b//c"));
    CHECK(!detect::glob_match("abc", "abcd"));
    CHECK(!detect::glob_match("a?c", "ac"));
}

TEST_CASE("glob agrees with the recursive oracle") {
    SeededRng rng(19);
    const std::string alphabet = "ab/*?c";
    for (int i = 0; i < 3000; ++i) {
        std::string glob, text;
        const uint64_t gl = rng.below(8);
        for (uint64_t k = 0; k < gl; ++k)
            glob.push_back(alphabet[static_cast<size_t>(rng.below(alphabet.size()))]);
        const uint64_t tl = rng.below(10);
        for (uint64_t k = 0; k < tl; ++k)
            text.push_back("ab/c"[static_cast<size_t>(rng.below(4))]);
        CHECK(detect::glob_match(glob, text) == oracle_glob_match(glob, text));
    }
}

TEST_CASE("match_detector trivial cases") {
    auto snap = snapshot_of(login_page(), "https://www.disneyplus.com/login?next=/");

    detect::Detector url{detect::UrlPayload{"*disneyplus.com/login*"}, true};
    CHECK(detect::match_detector(url, snap));

    detect::Detector text{detect::TextPayload{"Log In", std::nullopt}, true};
    CHECK(detect::match_detector(text, snap));

    detect::Detector missing{detect::ElementPayload{page::parse_selector("#pin-entry")}, true};
    CHECK(!detect::match_detector(missing, snap));
}

TEST_CASE("match_detector_set conjunction and diagnostics") {
    auto snap = snapshot_of(login_page(), "https://www.disneyplus.com/login");
    detect::DetectorSet set;
    set.detectors.push_back(detect::Detector{detect::UrlPayload{"*disneyplus.com/login*"}, true});
    set.detectors.push_back(detect::Detector{detect::TextPayload{"Log In", std::nullopt}, true});

    auto both = detect::match_detector_set(set, snap);
    CHECK(both.matched);
    CHECK(both.score == 2);
    CHECK(!both.required_failed);

    set.detectors[1] = detect::Detector{detect::TextPayload{"Absent Text", std::nullopt}, true};
    auto one = detect::match_detector_set(set, snap);
    CHECK(!one.matched);
    CHECK(one.score == 1);
    REQUIRE(one.required_failed);
    CHECK(*one.required_failed == 1);
}

TEST_CASE("match_detector_set agrees with the per-detector oracle") {
    SeededRng rng(23);
    for (int i = 0; i < 1000; ++i) {
        const auto tree = random_tree(rng, 40);
        auto snap = snapshot_of(tree, rng.bernoulli(0.5) ? "https://site.example/login"
                                                         : "https://site.example/play/hero");
        detect::DetectorSet set;
        const int n = 1 + static_cast<int>(rng.below(4));
        for (int k = 0; k < n; ++k) set.detectors.push_back(random_detector(rng, tree));
        set.detectors.front().required = true;

        const auto got = detect::match_detector_set(set, snap);
        const auto expect = oracle_match_set(set, snap);
        CHECK(got == expect);

        // Score equals the sum of individual match_detector results.
        int sum = 0;
        for (const auto& d : set.detectors) sum += detect::match_detector(d, snap) ? 1 : 0;
        CHECK(got.score == sum);
    }
}

TEST_CASE("monotonicity of detector sets") {
    SeededRng rng(29);
    for (int i = 0; i < 300; ++i) {
        const auto tree = random_tree(rng, 30);
        auto snap = snapshot_of(tree);
        detect::DetectorSet set;
        set.detectors.push_back(random_detector(rng, tree));
        set.detectors.front().required = true;
        const bool before = detect::match_detector_set(set, snap).matched;

        // Adding an optional detector never flips matched.
        detect::DetectorSet with_optional = set;
        auto opt = random_detector(rng, tree);
        opt.required = false;
        with_optional.detectors.push_back(opt);
        CHECK(detect::match_detector_set(with_optional, snap).matched == before);

        // Adding a required detector never flips matched false -> true.
        detect::DetectorSet with_required = set;
        auto req = random_detector(rng, tree);
        req.required = true;
        with_required.detectors.push_back(req);
        if (!before) CHECK(!detect::match_detector_set(with_required, snap).matched);
    }
}

TEST_CASE("detector determinism") {
    SeededRng rng(31);
    const auto tree = random_tree(rng, 30);
    auto snap = snapshot_of(tree);
    detect::DetectorSet set;
    for (int k = 0; k < 3; ++k) set.detectors.push_back(random_detector(rng, tree));
    set.detectors.front().required = true;
    const auto first = detect::match_detector_set(set, snap);
    for (int i = 0; i < 50; ++i) CHECK(detect::match_detector_set(set, snap) == first);
}

TEST_CASE("detector serialization round-trips") {
    SeededRng rng(37);
    for (int i = 0; i < 200; ++i) {
        const auto tree = random_tree(rng, 15);
        detect::DetectorSet set;
        const int n = 1 + static_cast<int>(rng.below(3));
        for (int k = 0; k < n; ++k) set.detectors.push_back(random_detector(rng, tree));
        set.detectors.front().required = true;
        const auto j = detect::detector_set_to_json(set);
        const auto back = detect::detector_set_from_json(j);
        CHECK(back == set);
        CHECK(detect::detector_set_to_json(back) == j);
    }
    CHECK_THROWS_AS(detect::detector_from_json(nlohmann::json{{"kind", "pixel"}}), Error);
    CHECK_THROWS_AS(
        detect::detector_set_from_json(nlohmann::json{{"detectors", nlohmann::json::array()}}),
        Error);
}

TEST_CASE("validation rejects degenerate detectors") {
    detect::Detector empty_needle{detect::TextPayload{"", std::nullopt}, true};
    CHECK_THROWS_AS(detect::validate_detector(empty_needle), Error);
    detect::Detector empty_glob{detect::UrlPayload{""}, true};
    CHECK_THROWS_AS(detect::validate_detector(empty_glob), Error);
    detect::DetectorSet all_optional;
    all_optional.detectors.push_back(
        detect::Detector{detect::UrlPayload{"*x*"}, false});
    CHECK_THROWS_AS(detect::validate_detector_set(all_optional), Error);
}
