#include "netgent/page_model.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <functional>

using namespace netgent;
using namespace test_support;

TEST_CASE("parse_selector handles the grammar") {
    SUBCASE("single id step") {
        const auto ast = page::parse_selector("#login-btn");
        REQUIRE(ast.steps.size() == 1);
        CHECK(ast.steps[0].id == "login-btn");
        CHECK(!ast.steps[0].tag);
    }
    SUBCASE("two descendant steps with class and attribute") {
        const auto ast = page::parse_selector("div.card button[aria-label=Play]");
        REQUIRE(ast.steps.size() == 2);
        CHECK(ast.steps[0].tag == "div");
        CHECK(ast.steps[0].classes == std::vector<std::string>{"card"});
        CHECK(ast.steps[1].tag == "button");
        REQUIRE(ast.steps[1].attr_equals.size() == 1);
        CHECK(ast.steps[1].attr_equals[0].first == "aria-label");
        CHECK(ast.steps[1].attr_equals[0].second == "Play");
    }
    SUBCASE("quoted attribute values") {
        const auto ast = page::parse_selector("input[placeholder=\"email or phone\"]");
        REQUIRE(ast.steps.size() == 1);
        CHECK(ast.steps[0].attr_equals[0].second == "email or phone");
    }
    SUBCASE("combinators are rejected with a byte offset") {
        try {
            page::parse_selector("div >>");
            FAIL("expected SyntaxError");
        } catch (const page::SyntaxError& e) {
            CHECK(e.offset == 4);
        }
        CHECK_THROWS_AS(page::parse_selector("a > b"), page::SyntaxError);
        CHECK_THROWS_AS(page::parse_selector("a + b"), page::SyntaxError);
        CHECK_THROWS_AS(page::parse_selector("a:hover"), page::SyntaxError);
        CHECK_THROWS_AS(page::parse_selector(""), page::SyntaxError);
        CHECK_THROWS_AS(page::parse_selector("   "), page::SyntaxError);
        CHECK_THROWS_AS(page::parse_selector("#"), page::SyntaxError);
        CHECK_THROWS_AS(page::parse_selector("div[role]"), page::SyntaxError);
    }
}

TEST_CASE("selector round-trip is a fixed point") {
    SeededRng rng(42);
    for (int i = 0; i < 500; ++i) {
        const auto sel = random_selector(rng);
        const std::string once = page::serialize_selector(sel);
        const auto reparsed = page::parse_selector(once);
        CHECK(reparsed == sel);
        CHECK(page::serialize_selector(reparsed) == once);
    }
}

TEST_CASE("query_selector basics") {
    page::DomNode root;
    root.tag = "html";
    page::DomNode button;
    button.tag = "button";
    button.id = "a";
    root.children.push_back(button);
    page::assign_node_indexes(root);

    const auto hit = page::query_selector(root, page::parse_selector("#a"));
    REQUIRE(hit.size() == 1);
    CHECK(hit[0]->id == "a");
    CHECK(page::query_selector(root, page::parse_selector("#missing")).empty());
}

TEST_CASE("query_selector agrees with the brute-force oracle") {
    SeededRng rng(7);
    for (int i = 0; i < 1000; ++i) {
        const auto tree = random_tree(rng, 50);
        const auto sel = random_selector(rng);
        const auto got = page::query_selector(tree, sel);
        const auto expect = oracle_query(tree, sel);
        REQUIRE(got == expect);
        for (size_t k = 1; k < got.size(); ++k) {
            CHECK(got[k - 1]->node_index < got[k]->node_index);
        }
    }
}

TEST_CASE("node indexes are pre-order and unique") {
    SeededRng rng(11);
    const auto tree = random_tree(rng, 30);
    std::vector<int> seen;
    std::function<void(const page::DomNode&)> walk = [&](const page::DomNode& n) {
        seen.push_back(n.node_index);
        for (const auto& c : n.children) walk(c);
    };
    walk(tree);
    for (size_t i = 0; i < seen.size(); ++i) CHECK(seen[i] == static_cast<int>(i));
}

TEST_CASE("canonical dom serialization round-trips and is byte-stable") {
    SeededRng rng(13);
    for (int i = 0; i < 50; ++i) {
        const auto tree = random_tree(rng, 25);
        const std::string text = page::dom_to_canonical_text(tree);
        const auto back = page::dom_from_canonical_text(text);
        CHECK(back == tree);
        CHECK(page::dom_to_canonical_text(back) == text);
    }
}

TEST_CASE("subtree_text aggregates document order with single spaces") {
    page::DomNode root;
    root.tag = "div";
    root.text = "Log";
    page::DomNode child;
    child.tag = "span";
    child.text = "In";
    root.children.push_back(child);
    page::assign_node_indexes(root);
    CHECK(page::subtree_text(root) == "Log In");
}

TEST_CASE("url validation") {
    CHECK(page::is_valid_url("https://www.disneyplus.com/login?next=/"));
    CHECK(page::is_valid_url("http://a.b/c"));
    CHECK(page::is_valid_url("https://host"));
    CHECK(!page::is_valid_url("notaurl"));
    CHECK(!page::is_valid_url("://host/path"));
    CHECK(!page::is_valid_url("https://"));
}
