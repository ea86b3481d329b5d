#include <string>

#include "btforge/genetics.hpp"
#include "btforge/text.hpp"
#include "doctest.h"

using namespace btforge;

TEST_CASE("parse the example forms") {
  const auto t = parse("(sel (seq (cond obstacle@2,3) (act jump)) (act right))");
  CHECK(structurally_equal(t, selector({sequence({condition({2, 3, Predicate::ObstacleAt}), action(ActionId::Jump)}),
                                        action(ActionId::WalkRight)})));

  const auto p = parse("(par 2 (act shoot) (inv (cond enemy@0,4)) (force-ok (act crouch)))");
  CHECK(label(p.node(p.root()).kind) == "par2");
  CHECK(p.size() == 6);
  CHECK(is_valid(p));

  CHECK(structurally_equal(parse("; bt-forge v1\n(act left) ; trailing note\n"), action(ActionId::WalkLeft)));
  CHECK(label(parse("(force-fail (act jump))").node(0).kind) == "force-fail");
}

TEST_CASE("canonical print") {
  const auto t = selector({sequence({condition({2, 3, Predicate::ObstacleAt}), action(ActionId::Jump)}),
                           action(ActionId::WalkRight)});
  CHECK(print(t) ==
        "(sel\n"
        "  (seq\n"
        "    (cond obstacle@2,3)\n"
        "    (act jump))\n"
        "  (act right))");
  CHECK(print(action(ActionId::Shoot)) == "(act shoot)");
  CHECK(print_document(action(ActionId::Shoot)) == "; bt-forge v1\n(act shoot)\n");
}

TEST_CASE("round trip over random trees") {
  Rng rng(7);
  for (int i = 0; i < 500; ++i) {
    const auto t = random_tree(rng, 60, NodePool::all());
    const std::string text = print(t);
    const auto back = parse(text);
    CHECK(structurally_equal(t, back));
    CHECK(print(back) == text);
  }
}

TEST_CASE("parse errors carry a position") {
  auto fails_at = [](const std::string& text, std::size_t line, std::size_t col) {
    try {
      parse(text);
    } catch (const ParseError& e) {
      CAPTURE(text);
      CAPTURE(e.what());
      CHECK(e.line() == line);
      CHECK(e.column() == col);
      return;
    }
    FAIL("no error for " << text);
  };
  fails_at("(sel)", 1, 1);
  fails_at("(act fly)", 1, 6);
  fails_at("(cond enemy@5,1)", 1, 13);
  fails_at("(par 3 (act jump) (act right))", 1, 6);
  fails_at("(inv (act jump) (act right))", 1, 17);
  fails_at("(act jump)\n(act left)", 2, 1);
  fails_at("(act jump", 1, 10);
  fails_at("\n  (wiggle)", 2, 4);
  fails_at("(act jump) $", 1, 12);
  fails_at("", 1, 1);
}

TEST_CASE("parser survives garbage") {
  Rng rng(11);
  const std::string alphabet = "()@, ;\nabcdefghijklmnopqrstuvwxyz-0123456789";
  std::size_t parsed = 0;
  for (int i = 0; i < 3000; ++i) {
    std::string s;
    const std::size_t n = uniform_index(rng, 40);
    for (std::size_t k = 0; k < n; ++k) s += alphabet[uniform_index(rng, alphabet.size())];
    try {
      const auto t = parse(s);
      CHECK(is_valid(t));
      ++parsed;
    } catch (const ParseError&) {
    }
  }
  CHECK(parsed < 3000);
  CHECK_THROWS_AS(parse(std::string(5000, '(')), ParseError);
}

TEST_CASE("dot and outline") {
  const auto single = action(ActionId::WalkRight);
  const std::string dot1 = to_dot(single);
  CHECK(dot1.find("digraph") == 0);
  CHECK(dot1.find("->") == std::string::npos);

  const auto t = selector({sequence({condition({2, 3, Predicate::ObstacleAt}), action(ActionId::Jump)}),
                           action(ActionId::WalkRight)});
  const std::string dot = to_dot(t);
  std::size_t edges = 0;
  std::size_t nodes = 0;
  for (std::size_t p = dot.find("->"); p != std::string::npos; p = dot.find("->", p + 2)) ++edges;
  for (std::size_t p = dot.find("[label="); p != std::string::npos; p = dot.find("[label=", p + 1)) ++nodes;
  CHECK(nodes == 5);
  CHECK(edges == 4);

  const std::string outline = to_outline(t);
  CHECK(std::count(outline.begin(), outline.end(), '\n') == 5);
}
