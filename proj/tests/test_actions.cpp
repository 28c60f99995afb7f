#include "netgent/actions.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace netgent;
using namespace test_support;

TEST_CASE("program serialization round-trips with secrets kept as placeholders") {
    actions::ActionProgram p;
    p.instructions.push_back(actions::Navigate{"https://espnlike.sim/login"});
    p.instructions.push_back(
        actions::TypeText{page::parse_selector("#pass"), "${NETGENT_PASSWORD}", true});
    p.instructions.push_back(actions::Click{page::parse_selector("#login-btn")});

    const std::string bytes = actions::serialize_program(p);
    CHECK(bytes.find("${NETGENT_PASSWORD}") != std::string::npos);
    const auto back = actions::deserialize_program(bytes);
    CHECK(back == p);
}

TEST_CASE("program format errors") {
    actions::ActionProgram bad;
    bad.instructions.push_back(actions::DragToFraction{page::parse_selector("#s"), 1.5});
    CHECK_THROWS_AS(actions::validate_program(bad), actions::FormatError);

    CHECK_THROWS_AS(actions::deserialize_program("not text at all"), actions::FormatError);
    CHECK_THROWS_AS(
        actions::deserialize_program(R"({"version":1,"instructions":[{"op":"teleport"}]})"),
        actions::FormatError);
    CHECK_THROWS_AS(
        actions::deserialize_program(R"({"instructions":[{"op":"sleep","ms":1}]})"),
        actions::FormatError);
    CHECK_THROWS_AS(
        actions::deserialize_program(R"({"version":9,"instructions":[{"op":"sleep","ms":1}]})"),
        actions::FormatError);
    CHECK_THROWS_AS(
        actions::deserialize_program(R"({"version":1,"instructions":[]})"),
        actions::FormatError);
    // Secret text must be an env placeholder.
    CHECK_THROWS_AS(actions::deserialize_program(
                        R"({"version":1,"instructions":[{"op":"type_text","selector":"#a",)"
                        R"("text":"hunter2","secret":true}]})"),
                    actions::FormatError);
}

TEST_CASE("200 random programs round-trip byte-stably") {
    SeededRng rng(57);
    for (int i = 0; i < 200; ++i) {
        const auto p = random_program(rng);
        const std::string once = actions::serialize_program(p);
        const auto back = actions::deserialize_program(once);
        REQUIRE(back == p);
        CHECK(actions::serialize_program(back) == once);
    }
}

TEST_CASE("secret placeholder grammar") {
    CHECK(actions::is_secret_placeholder("${NETGENT_PASSWORD}"));
    CHECK(actions::is_secret_placeholder("${a1_b2}"));
    CHECK(!actions::is_secret_placeholder("plain"));
    CHECK(!actions::is_secret_placeholder("${}"));
    CHECK(!actions::is_secret_placeholder("${1abc}"));
    CHECK(!actions::is_secret_placeholder("${x} trailing"));
}

TEST_CASE("mouse path endpoints and degenerate curve") {
    actions::RealismParams p;
    p.seed = 99;
    p.mouse_samples = 12;

    const auto still =
        actions::plan_mouse_path({100.0, 100.0}, {100.0, 100.0}, p);
    REQUIRE(still.size() == 12);
    for (const auto& pt : still) CHECK(pt == actions::Point{100.0, 100.0});

    SeededRng rng(61);
    for (int i = 0; i < 200; ++i) {
        const actions::Point from{rng.uniform_double(-500, 500), rng.uniform_double(-500, 500)};
        const actions::Point to{rng.uniform_double(-500, 500), rng.uniform_double(-500, 500)};
        p.seed = rng.next_u64();
        const auto path = actions::plan_mouse_path(from, to, p);
        REQUIRE(path.size() == 12);
        CHECK(path.front() == from);
        CHECK(path.back() == to);
    }
}

TEST_CASE("mouse path stays in the expanded bounding box and is seed-deterministic") {
    SeededRng rng(67);
    actions::RealismParams p;
    p.mouse_samples = 24;
    for (int i = 0; i < 500; ++i) {
        const actions::Point from{rng.uniform_double(-300, 300), rng.uniform_double(-300, 300)};
        const actions::Point to{rng.uniform_double(-300, 300), rng.uniform_double(-300, 300)};
        p.seed = rng.next_u64();
        const auto path = actions::plan_mouse_path(from, to, p);
        const auto path2 = actions::plan_mouse_path(from, to, p);
        CHECK(path == path2);

        const double min_x = std::min(from.x, to.x), max_x = std::max(from.x, to.x);
        const double min_y = std::min(from.y, to.y), max_y = std::max(from.y, to.y);
        const double pad_x = 0.25 * (max_x - min_x), pad_y = 0.25 * (max_y - min_y);
        for (const auto& pt : path) {
            CHECK(pt.x >= min_x - pad_x - 1e-9);
            CHECK(pt.x <= max_x + pad_x + 1e-9);
            CHECK(pt.y >= min_y - pad_y - 1e-9);
            CHECK(pt.y <= max_y + pad_y + 1e-9);
        }
    }
}

TEST_CASE("mouse path polyline length dominates the straight line") {
    SeededRng rng(71);
    actions::RealismParams p;
    p.mouse_samples = 32;
    for (int i = 0; i < 1000; ++i) {
        const actions::Point from{rng.uniform_double(-400, 400), rng.uniform_double(-400, 400)};
        const actions::Point to{rng.uniform_double(-400, 400), rng.uniform_double(-400, 400)};
        p.seed = rng.next_u64();
        const auto path = actions::plan_mouse_path(from, to, p);
        double poly = 0.0;
        for (size_t k = 1; k < path.size(); ++k)
            poly += std::hypot(path[k].x - path[k - 1].x, path[k].y - path[k - 1].y);
        const double straight = std::hypot(to.x - from.x, to.y - from.y);
        CHECK(poly >= straight - 1e-6);
    }
}

TEST_CASE("keystroke schedule basics") {
    actions::RealismParams p;
    p.seed = 5;
    p.keystroke_mean_ms = 80;
    p.keystroke_jitter_ms = 0;
    p.pause_probability = 0.0;

    const auto one = actions::keystroke_schedule("a", p);
    REQUIRE(one.size() == 1);
    CHECK(one[0].first == 'a');
    CHECK(one[0].second == 80);

    p.keystroke_jitter_ms = 40;
    const auto s1 = actions::keystroke_schedule("identical inputs", p);
    const auto s2 = actions::keystroke_schedule("identical inputs", p);
    CHECK(s1 == s2);

    p.pause_probability = 1.0;
    p.pause_ms = 500;
    const auto paused = actions::keystroke_schedule("xy", p);
    for (const auto& [c, delay] : paused) CHECK(delay >= 500);
}

TEST_CASE("keystroke delays hit the configured mean at scale") {
    actions::RealismParams p;
    p.seed = 4242;
    p.keystroke_mean_ms = 80;
    p.keystroke_jitter_ms = 40;
    p.pause_probability = 0.0;
    const std::string text(10000, 'k');
    const auto schedule = actions::keystroke_schedule(text, p);
    REQUIRE(schedule.size() == 10000);
    double sum = 0.0;
    for (const auto& [c, delay] : schedule) {
        CHECK(delay >= 40);
        CHECK(delay <= 120);
        sum += delay;
    }
    const double mean = sum / 10000.0;
    CHECK(mean > 78.0);
    CHECK(mean < 82.0);
}

TEST_CASE("clamping at zero for large jitter") {
    actions::RealismParams p;
    p.seed = 9;
    p.keystroke_mean_ms = 10;
    p.keystroke_jitter_ms = 100;
    const auto s = actions::keystroke_schedule(std::string(500, 'z'), p);
    for (const auto& [c, delay] : s) CHECK(delay >= 0);
}
