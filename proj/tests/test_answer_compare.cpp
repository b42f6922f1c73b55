#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "cogtools/answer_compare.hpp"

using namespace cogtools;

TEST_CASE("parse_number accepts integers, decimals, and fractions") {
  auto n = parse_number("42");
  REQUIRE(n.has_value());
  CHECK(n->exact);
  CHECK(n->num == 42);
  CHECK(n->den == 1);

  n = parse_number("-17");
  REQUIRE(n.has_value());
  CHECK(n->num == -17);

  n = parse_number("3/4");
  REQUIRE(n.has_value());
  CHECK(n->exact);
  CHECK(n->num == 3);
  CHECK(n->den == 4);

  n = parse_number("2/(-3)");
  REQUIRE(n.has_value());
  CHECK(n->exact);
  CHECK(n->num == -2);
  CHECK(n->den == 3);

  n = parse_number("(-2)/3");
  REQUIRE(n.has_value());
  CHECK(n->num == -2);
  CHECK(n->den == 3);

  n = parse_number("1.5");
  REQUIRE(n.has_value());
  CHECK(n->value == doctest::Approx(1.5));

  n = parse_number("-0.25");
  REQUIRE(n.has_value());
  CHECK(n->value == doctest::Approx(-0.25));

  n = parse_number("1,234");
  REQUIRE(n.has_value());
  CHECK(n->exact);
  CHECK(n->num == 1234);

  n = parse_number("1,234,567.5");
  REQUIRE(n.has_value());
  CHECK(n->value == doctest::Approx(1234567.5));
}

TEST_CASE("parse_number rejects non-numbers") {
  CHECK_FALSE(parse_number("").has_value());
  CHECK_FALSE(parse_number("abc").has_value());
  CHECK_FALSE(parse_number("1/0").has_value());
  CHECK_FALSE(parse_number("1 + 2").has_value());
  CHECK_FALSE(parse_number("x").has_value());
  CHECK_FALSE(parse_number("12abc").has_value());
  CHECK_FALSE(parse_number("--3").has_value());
}

TEST_CASE("huge numerators fall back to approximate") {
  auto n = parse_number("123456789012345678901234567890");
  REQUIRE(n.has_value());
  CHECK_FALSE(n->exact);
  CHECK(n->value == doctest::Approx(1.2345678901234568e29));
}

TEST_CASE("numbers_equal uses exact cross-multiplication for rationals") {
  auto a = parse_number("1/3");
  auto b = parse_number("2/6");
  REQUIRE(a);
  REQUIRE(b);
  CHECK(numbers_equal(*a, *b));

  auto c = parse_number("0.333333333");
  REQUIRE(c);
  CHECK_FALSE(numbers_equal(*a, *c));  // finite decimal is not 1/3

  auto half = parse_number("0.5");
  auto frac = parse_number("1/2");
  REQUIRE(half);
  REQUIRE(frac);
  CHECK(numbers_equal(*half, *frac));

  auto x = parse_number("42");
  auto y = parse_number("42.0");
  REQUIRE(x);
  REQUIRE(y);
  CHECK(numbers_equal(*x, *y));
  auto z = parse_number("42.0000000001");
  REQUIRE(z);
  CHECK_FALSE(numbers_equal(*x, *z));
}

TEST_CASE("numbers_equal tolerances") {
  ParsedNumber a{false, 0, 1, 1.0};
  ParsedNumber b{false, 0, 1, 1.0 + 5e-10};
  CHECK(numbers_equal(a, b));
  ParsedNumber c{false, 0, 1, 1.0 + 5e-8};
  CHECK_FALSE(numbers_equal(a, c));
  ParsedNumber z1{false, 0, 1, 0.0};
  ParsedNumber z2{false, 0, 1, 5e-13};
  CHECK(numbers_equal(z1, z2));
}

TEST_CASE("strip_unit_suffix") {
  auto s = strip_unit_suffix("72 degrees");
  REQUIRE(s.has_value());
  CHECK(*s == "72");

  s = strip_unit_suffix("108 degrees");
  REQUIRE(s.has_value());
  CHECK(*s == "108");

  s = strip_unit_suffix("15 square units");
  REQUIRE(s.has_value());
  CHECK(*s == "15");

  s = strip_unit_suffix("3.5 cm");
  REQUIRE(s.has_value());
  CHECK(*s == "3.5");

  CHECK_FALSE(strip_unit_suffix("72").has_value());  // nothing to strip
  CHECK_FALSE(strip_unit_suffix("degrees").has_value());
  CHECK_FALSE(strip_unit_suffix("one meter").has_value());
  CHECK_FALSE(strip_unit_suffix("").has_value());
}

TEST_CASE("expression equivalence by deterministic sampling") {
  auto e = expressions_equivalent("x^2", "x**2");
  REQUIRE(e.has_value());
  CHECK(*e);

  e = expressions_equivalent("2x", "x + x");
  REQUIRE(e.has_value());
  CHECK(*e);

  e = expressions_equivalent("(x+1)^2", "x^2 + 2x + 1");
  REQUIRE(e.has_value());
  CHECK(*e);

  e = expressions_equivalent("x + y", "y + x");
  REQUIRE(e.has_value());
  CHECK(*e);

  e = expressions_equivalent("x", "x + 1");
  REQUIRE(e.has_value());
  CHECK_FALSE(*e);

  e = expressions_equivalent("x*y", "x + y");
  REQUIRE(e.has_value());
  CHECK_FALSE(*e);
}

TEST_CASE("pi is a known constant") {
  auto e = expressions_equivalent("2pi", "6.283185307179586");
  REQUIRE(e.has_value());
  CHECK(*e);

  e = expressions_equivalent("pi/2", "1.5707963267948966");
  REQUIRE(e.has_value());
  CHECK(*e);
}

TEST_CASE("non-expressions yield nullopt") {
  CHECK_FALSE(expressions_equivalent("hello world", "x").has_value());
  CHECK_FALSE(expressions_equivalent("x", "sin(x)").has_value());
  CHECK_FALSE(expressions_equivalent("", "x").has_value());
  CHECK_FALSE(expressions_equivalent("x = 2", "2").has_value());
}
