#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace cogtools {

// Exact rational when exact == true (den > 0), else a double approximation.
struct ParsedNumber {
  bool exact = false;
  long long num = 0;
  long long den = 1;
  double value = 0.0;
};

// Accepts integers, finite decimals, and fractions with optionally
// parenthesized signed parts ("2/(-3)", "(-2)/3"). Returns nullopt for
// anything else.
std::optional<ParsedNumber> parse_number(std::string_view text);

bool numbers_equal(const ParsedNumber& a, const ParsedNumber& b,
                   double rel_tol = 1e-9, double abs_tol = 1e-12);

// Strips trailing alphabetic unit words ("72 degrees" -> "72") as long as
// the remaining prefix parses as a plain number; returns nullopt otherwise.
std::optional<std::string> strip_unit_suffix(std::string_view text);

// Deterministic sampling-based equivalence for elementary expressions over
// single-letter variables (implicit multiplication, + - * / ^, parens, pi).
// Variables with the same name share sample values across both sides.
// Returns nullopt when either side does not parse as such an expression.
std::optional<bool> expressions_equivalent(std::string_view a,
                                           std::string_view b);

}  // namespace cogtools
