#include "netgent/state_repo.hpp"

#include "netgent/hash.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <fstream>

using namespace netgent;
using namespace test_support;

namespace {

repo::ConcreteState make_state(const std::string& workflow_id, const std::string& name,
                               const std::string& glob, int64_t created_at,
                               int extra_detectors = 0) {
    repo::ConcreteState cs;
    cs.workflow_id = workflow_id;
    cs.abstract_name = name;
    detect::DetectorSet set;
    set.detectors.push_back(detect::Detector{detect::UrlPayload{glob}, true});
    for (int i = 0; i < extra_detectors; ++i) {
        set.detectors.push_back(detect::Detector{detect::UrlPayload{"*"}, false});
    }
    cs.detector_sets.push_back(std::move(set));
    cs.program.instructions.push_back(actions::Sleep{10});
    cs.created_at = created_at;
    cs.synthesis_tokens = {100, 20};
    cs.status = repo::StateStatus::active;
    cs.state_id = repo::compute_state_id(cs);
    return cs;
}

repo::ConcreteState random_state(SeededRng& rng, const std::string& workflow_id) {
    repo::ConcreteState cs;
    cs.workflow_id = workflow_id;
    cs.abstract_name = "s_" + std::to_string(rng.below(1000));
    const auto tree = random_tree(rng, 10);
    const int sets = 1 + static_cast<int>(rng.below(2));
    for (int i = 0; i < sets; ++i) {
        detect::DetectorSet set;
        const int n = 1 + static_cast<int>(rng.below(3));
        for (int k = 0; k < n; ++k) set.detectors.push_back(random_detector(rng, tree));
        set.detectors.front().required = true;
        cs.detector_sets.push_back(std::move(set));
    }
    cs.program = random_program(rng);
    cs.created_at = static_cast<int64_t>(rng.below(1000000));
    cs.synthesis_tokens = {static_cast<int64_t>(rng.below(50000)),
                           static_cast<int64_t>(rng.below(5000))};
    cs.state_id = repo::compute_state_id(cs);
    return cs;
}

} // namespace

TEST_CASE("store is idempotent for identical content") {
    TempDir dir("repo-idem");
    repo::StateRepo store(dir.path());
    auto cs = make_state("wf", "login", "*site/login*", 1111);
    const auto id1 = store.store_state(cs);
    const auto id2 = store.store_state(cs);
    CHECK(id1 == id2);
    CHECK(store.entry_count("wf") == 1);

    // One differing detector needle gives a different id.
    auto other = make_state("wf", "login", "*site/login-v2*", 1111);
    CHECK(other.state_id != cs.state_id);
    store.store_state(other);
    CHECK(store.entry_count("wf") == 2);
}

TEST_CASE("hash is over content only, not volatile metadata") {
    auto a = make_state("wf", "login", "*x*", 1);
    auto b = make_state("wf", "login", "*x*", 999);
    b.synthesis_tokens = {5, 5};
    b.status = repo::StateStatus::stale;
    CHECK(repo::compute_state_id(a) == repo::compute_state_id(b));
}

TEST_CASE("100 random states re-hash from disk to their filename ids") {
    TempDir dir("repo-rehash");
    repo::StateRepo store(dir.path());
    SeededRng rng(301);
    std::vector<std::string> ids;
    for (int i = 0; i < 100; ++i) {
        auto cs = random_state(rng, "wf");
        ids.push_back(store.store_state(cs));
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    CHECK(store.entry_count("wf") == ids.size());
    for (const auto& id : ids) {
        const auto loaded = store.load_verified("wf", id);
        CHECK(repo::compute_state_id(loaded) == id);
    }
}

TEST_CASE("renaming a state file cannot forge identity") {
    TempDir dir("repo-forge");
    repo::StateRepo store(dir.path());
    auto cs = make_state("wf", "login", "*x*", 1);
    const auto id = store.store_state(cs);
    const std::string fake(64, 'f');
    std::filesystem::rename(dir.path() / "wf" / (id + ".state"),
                            dir.path() / "wf" / (fake + ".state"));
    CHECK_THROWS_AS(store.load_verified("wf", fake), repo::IntegrityError);
}

TEST_CASE("provided id must match content") {
    TempDir dir("repo-badid");
    repo::StateRepo store(dir.path());
    auto cs = make_state("wf", "login", "*x*", 1);
    cs.state_id = std::string(64, '0');
    CHECK_THROWS_AS(store.store_state(cs), repo::IntegrityError);
}

TEST_CASE("lookup matches, orders, and counts hits/misses") {
    TempDir dir("repo-lookup");
    repo::StateRepo store(dir.path());

    auto login = make_state("wf", "login", "*site/login*", 100);
    store.store_state(login);

    page::DomNode root;
    root.tag = "html";
    auto snap = snapshot_of(root, "https://site.example/login");

    auto hit = store.lookup("wf", std::nullopt, snap);
    REQUIRE(hit.size() == 1);
    CHECK(hit[0].first.abstract_name == "login");
    CHECK(store.stats().hits == 1);

    auto popup = snapshot_of(root, "https://site.example/unknown-popup");
    CHECK(store.lookup("wf", std::nullopt, popup).empty());
    CHECK(store.stats().misses == 1);
    CHECK(store.stats().hits + store.stats().misses == 2);

    // Higher score ranks first; verified against a brute-force sort.
    auto scored = make_state("wf", "login_rich", "*site/login*", 50, 2);
    store.store_state(scored);
    auto ranked = store.lookup("wf", std::nullopt, snap);
    REQUIRE(ranked.size() == 2);
    CHECK(ranked[0].first.abstract_name == "login_rich");
    CHECK(ranked[0].second.score == 3);

    auto brute = ranked;
    std::sort(brute.begin(), brute.end(), [](const auto& a, const auto& b) {
        if (a.second.score != b.second.score) return a.second.score > b.second.score;
        if (a.first.created_at != b.first.created_at)
            return a.first.created_at > b.first.created_at;
        return a.first.state_id < b.first.state_id;
    });
    for (size_t i = 0; i < ranked.size(); ++i)
        CHECK(ranked[i].first.state_id == brute[i].first.state_id);

    // Filter restricts to one abstract state.
    auto filtered = store.lookup("wf", std::string("login"), snap);
    REQUIRE(filtered.size() == 1);
    CHECK(filtered[0].first.abstract_name == "login");
}

TEST_CASE("lookup tie-break falls back to created_at then id") {
    TempDir dir("repo-tie");
    repo::StateRepo store(dir.path());
    auto older = make_state("wf", "a_state", "*page*", 100);
    auto newer = make_state("wf", "b_state", "*page*", 200);
    store.store_state(older);
    store.store_state(newer);

    page::DomNode root;
    root.tag = "html";
    auto snap = snapshot_of(root, "https://x/page");
    auto ranked = store.lookup("wf", std::nullopt, snap);
    REQUIRE(ranked.size() == 2);
    CHECK(ranked[0].first.abstract_name == "b_state");   // same score, newer first

    auto tied = make_state("wf", "c_state", "*page?*", 200);
    store.store_state(tied);
    auto snap2 = snapshot_of(root, "https://x/pageZ");
    auto ranked2 = store.lookup("wf", std::nullopt, snap2);
    REQUIRE(ranked2.size() == 3);
    CHECK(ranked2[1].first.created_at == ranked2[2].first.created_at);
    CHECK(ranked2[1].first.state_id < ranked2[2].first.state_id);
}

TEST_CASE("invalidate excludes from lookup, is idempotent, logs, errors on unknown") {
    TempDir dir("repo-inval");
    repo::StateRepo store(dir.path());
    auto cs = make_state("wf", "select_profile", "*profiles*", 10);
    const auto id = store.store_state(cs);

    page::DomNode root;
    root.tag = "html";
    auto snap = snapshot_of(root, "https://x/profiles");
    CHECK(store.lookup("wf", std::nullopt, snap).size() == 1);

    store.invalidate("wf", id, "drift detected");
    CHECK(store.lookup("wf", std::nullopt, snap).empty());
    CHECK(store.stats().invalidations == 1);

    store.invalidate("wf", id, "again");   // idempotent success
    CHECK_THROWS_AS(store.invalidate("wf", std::string(64, 'a'), "nope"), repo::NotFound);

    std::ifstream audit(dir.path() / "wf" / "audit.log");
    std::string line;
    int lines = 0;
    bool saw_reason = false;
    while (std::getline(audit, line)) {
        ++lines;
        saw_reason = saw_reason || line.find("drift detected") != std::string::npos;
    }
    CHECK(lines == 2);
    CHECK(saw_reason);

    // Stale survives reload and still hashes to its id.
    const auto reloaded = store.load_verified("wf", id);
    CHECK(reloaded.status == repo::StateStatus::stale);
}

TEST_CASE("fresh repo stats are zero and counters track operations") {
    TempDir dir("repo-stats");
    repo::StateRepo store(dir.path());
    const auto zero = store.stats();
    CHECK(zero.hits == 0);
    CHECK(zero.misses == 0);
    CHECK(zero.invalidations == 0);
    CHECK(zero.total_tokens.total() == 0);

    page::DomNode root;
    root.tag = "html";
    auto snap = snapshot_of(root, "https://x/login");
    store.lookup("wf", std::nullopt, snap);   // miss
    auto cs = make_state("wf", "login", "*login*", 5);
    store.store_state(cs);
    store.lookup("wf", std::nullopt, snap);   // hit
    const auto s = store.stats();
    CHECK(s.hits == 1);
    CHECK(s.misses == 1);
    CHECK(s.total_tokens == cs.synthesis_tokens);
}
