#include "cogtools/answer_compare.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <set>
#include <vector>

namespace cogtools {

namespace {

std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool fits_int64(__int128 v) {
  return v >= std::numeric_limits<long long>::min() &&
         v <= std::numeric_limits<long long>::max();
}

// Signed decimal literal: [+-]? digits [ '.' digits ].
std::optional<ParsedNumber> parse_decimal(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  std::size_t pos = 0;
  bool negative = false;
  if (s[pos] == '+' || s[pos] == '-') {
    negative = s[pos] == '-';
    ++pos;
  }
  const std::size_t int_start = pos;
  while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
  const std::size_t int_end = pos;
  std::size_t frac_start = pos;
  std::size_t frac_end = pos;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    frac_start = pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    frac_end = pos;
  }
  if (pos != s.size()) return std::nullopt;
  if (int_end == int_start && frac_end == frac_start) return std::nullopt;

  ParsedNumber out;
  out.exact = true;
  __int128 num = 0;
  __int128 den = 1;
  const auto push_digit = [&](char c) {
    num = num * 10 + (c - '0');
    if (!fits_int64(num)) out.exact = false;
  };
  for (std::size_t i = int_start; i < int_end && out.exact; ++i) push_digit(s[i]);
  for (std::size_t i = frac_start; i < frac_end && out.exact; ++i) {
    push_digit(s[i]);
    den *= 10;
    if (!fits_int64(den)) out.exact = false;
  }
  if (out.exact) {
    if (negative) num = -num;
    const long long g = std::gcd(static_cast<long long>(num < 0 ? -num : num),
                                 static_cast<long long>(den));
    out.num = static_cast<long long>(g ? num / g : num);
    out.den = static_cast<long long>(g ? den / g : den);
  }
  out.value = std::strtod(std::string(s).c_str(), nullptr);
  return out;
}

// A decimal, optionally wrapped in one pair of parentheses.
std::optional<ParsedNumber> parse_part(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && s.front() == '(' && s.back() == ')') {
    return parse_decimal(trim(s.substr(1, s.size() - 2)));
  }
  return parse_decimal(s);
}

// --- tiny expression AST -------------------------------------------------

struct ExprNode;
using ExprPtr = std::unique_ptr<ExprNode>;

struct ExprNode {
  enum class Kind { number, variable, add, sub, mul, div, pow, neg };
  Kind kind = Kind::number;
  double number = 0.0;
  char variable = 0;
  ExprPtr lhs;
  ExprPtr rhs;
};

ExprPtr make_binary(ExprNode::Kind kind, ExprPtr lhs, ExprPtr rhs) {
  auto node = std::make_unique<ExprNode>();
  node->kind = kind;
  node->lhs = std::move(lhs);
  node->rhs = std::move(rhs);
  return node;
}

class ExprParser {
 public:
  explicit ExprParser(std::string_view text) : text_(text) {}

  ExprPtr parse() {
    auto expr = parse_sum();
    skip_ws();
    if (!expr || pos_ != text_.size()) return nullptr;
    return expr;
  }

  const std::set<char>& variables() const { return variables_; }

 private:
  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  char peek() { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  ExprPtr parse_sum() {
    auto lhs = parse_term();
    if (!lhs) return nullptr;
    while (true) {
      skip_ws();
      const char c = peek();
      if (c != '+' && c != '-') return lhs;
      ++pos_;
      auto rhs = parse_term();
      if (!rhs) return nullptr;
      lhs = make_binary(c == '+' ? ExprNode::Kind::add : ExprNode::Kind::sub,
                        std::move(lhs), std::move(rhs));
    }
  }

  ExprPtr parse_term() {
    auto lhs = parse_factor();
    if (!lhs) return nullptr;
    while (true) {
      skip_ws();
      char c = peek();
      if (c == '*' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '*') {
        pos_ += 2;
        auto rhs = parse_factor();
        if (!rhs) return nullptr;
        lhs = make_binary(ExprNode::Kind::pow, std::move(lhs), std::move(rhs));
        continue;
      }
      if (c == '*' || c == '/') {
        ++pos_;
        auto rhs = parse_factor();
        if (!rhs) return nullptr;
        lhs = make_binary(c == '*' ? ExprNode::Kind::mul : ExprNode::Kind::div,
                          std::move(lhs), std::move(rhs));
        continue;
      }
      // Implicit multiplication before a variable, constant, or group.
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '(') {
        auto rhs = parse_factor();
        if (!rhs) return nullptr;
        lhs = make_binary(ExprNode::Kind::mul, std::move(lhs), std::move(rhs));
        continue;
      }
      return lhs;
    }
  }

  ExprPtr parse_factor() {
    skip_ws();
    const char c = peek();
    if (c == '+' || c == '-') {
      ++pos_;
      auto operand = parse_factor();
      if (!operand) return nullptr;
      if (c == '+') return operand;
      auto node = std::make_unique<ExprNode>();
      node->kind = ExprNode::Kind::neg;
      node->lhs = std::move(operand);
      return node;
    }
    auto base = parse_base();
    if (!base) return nullptr;
    skip_ws();
    if (peek() == '^') {
      ++pos_;
      auto exponent = parse_factor();  // right associative
      if (!exponent) return nullptr;
      return make_binary(ExprNode::Kind::pow, std::move(base), std::move(exponent));
    }
    if (peek() == '*' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '*') {
      pos_ += 2;
      auto exponent = parse_factor();
      if (!exponent) return nullptr;
      return make_binary(ExprNode::Kind::pow, std::move(base), std::move(exponent));
    }
    return base;
  }

  ExprPtr parse_base() {
    skip_ws();
    const char c = peek();
    if (c == '(') {
      ++pos_;
      auto inner = parse_sum();
      if (!inner) return nullptr;
      skip_ws();
      if (peek() != ')') return nullptr;
      ++pos_;
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const std::size_t start = pos_;
      while (pos_ < text_.size() &&
             std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        ++pos_;
      }
      if (pos_ < text_.size() && text_[pos_] == '.') {
        ++pos_;
        while (pos_ < text_.size() &&
               std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
          ++pos_;
        }
      }
      if (pos_ == start || (pos_ - start == 1 && text_[start] == '.')) return nullptr;
      auto node = std::make_unique<ExprNode>();
      node->kind = ExprNode::Kind::number;
      node->number = std::strtod(std::string(text_.substr(start, pos_ - start)).c_str(),
                                 nullptr);
      return node;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < text_.size() &&
             std::isalpha(static_cast<unsigned char>(text_[pos_]))) {
        ++pos_;
      }
      const std::string_view name = text_.substr(start, pos_ - start);
      if (name == "pi") {
        auto node = std::make_unique<ExprNode>();
        node->kind = ExprNode::Kind::number;
        node->number = 3.14159265358979323846;
        return node;
      }
      if (name.size() != 1) return nullptr;
      auto node = std::make_unique<ExprNode>();
      node->kind = ExprNode::Kind::variable;
      node->variable = name[0];
      variables_.insert(name[0]);
      return node;
    }
    return nullptr;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::set<char> variables_;
};

bool eval_expr(const ExprNode& node, const std::map<char, double>& env,
               double& out) {
  switch (node.kind) {
    case ExprNode::Kind::number:
      out = node.number;
      return true;
    case ExprNode::Kind::variable: {
      const auto it = env.find(node.variable);
      if (it == env.end()) return false;
      out = it->second;
      return true;
    }
    case ExprNode::Kind::neg: {
      double value = 0.0;
      if (!eval_expr(*node.lhs, env, value)) return false;
      out = -value;
      return true;
    }
    default: {
      double lhs = 0.0;
      double rhs = 0.0;
      if (!eval_expr(*node.lhs, env, lhs) || !eval_expr(*node.rhs, env, rhs)) {
        return false;
      }
      switch (node.kind) {
        case ExprNode::Kind::add: out = lhs + rhs; break;
        case ExprNode::Kind::sub: out = lhs - rhs; break;
        case ExprNode::Kind::mul: out = lhs * rhs; break;
        case ExprNode::Kind::div:
          if (std::fabs(rhs) < 1e-12) return false;
          out = lhs / rhs;
          break;
        case ExprNode::Kind::pow: out = std::pow(lhs, rhs); break;
        default: return false;
      }
      return std::isfinite(out);
    }
  }
}

}  // namespace

std::optional<ParsedNumber> parse_number(std::string_view text) {
  std::string cleaned;
  const std::string_view s = trim(text);
  if (s.empty()) return std::nullopt;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == ',') {
      const bool grouped =
          i > 0 && std::isdigit(static_cast<unsigned char>(s[i - 1])) &&
          i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1]));
      if (!grouped) return std::nullopt;
      continue;
    }
    cleaned += s[i];
  }

  int depth = 0;
  std::optional<std::size_t> slash;
  for (std::size_t i = 0; i < cleaned.size(); ++i) {
    const char c = cleaned[i];
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == '/' && depth == 0) {
      if (slash) return std::nullopt;
      slash = i;
    }
  }
  if (!slash) return parse_part(cleaned);

  const auto left = parse_part(std::string_view(cleaned).substr(0, *slash));
  const auto right = parse_part(std::string_view(cleaned).substr(*slash + 1));
  if (!left || !right) return std::nullopt;
  if ((right->exact && right->num == 0) || (!right->exact && right->value == 0.0)) {
    return std::nullopt;
  }
  ParsedNumber out;
  out.value = left->value / right->value;
  if (left->exact && right->exact) {
    __int128 num = static_cast<__int128>(left->num) * right->den;
    __int128 den = static_cast<__int128>(left->den) * right->num;
    if (den < 0) {
      num = -num;
      den = -den;
    }
    if (fits_int64(num) && fits_int64(den)) {
      const long long n = static_cast<long long>(num);
      const long long d = static_cast<long long>(den);
      const long long g = std::gcd(n < 0 ? -n : n, d);
      out.exact = true;
      out.num = g ? n / g : n;
      out.den = g ? d / g : d;
    }
  }
  return out;
}

bool numbers_equal(const ParsedNumber& a, const ParsedNumber& b, double rel_tol,
                   double abs_tol) {
  if (a.exact && b.exact) {
    return static_cast<__int128>(a.num) * b.den ==
           static_cast<__int128>(b.num) * a.den;
  }
  const double diff = std::fabs(a.value - b.value);
  const double scale = std::max(std::fabs(a.value), std::fabs(b.value));
  return diff <= std::max(abs_tol, rel_tol * scale);
}

std::optional<std::string> strip_unit_suffix(std::string_view text) {
  std::string_view s = trim(text);
  bool stripped = false;
  while (true) {
    const std::size_t space = s.find_last_of(" \t");
    if (space == std::string_view::npos) break;
    const std::string_view word = s.substr(space + 1);
    bool alphabetic = !word.empty();
    for (const char c : word) {
      if (!std::isalpha(static_cast<unsigned char>(c))) alphabetic = false;
    }
    if (!alphabetic) break;
    s = trim(s.substr(0, space));
    stripped = true;
    if (parse_number(s)) return std::string(s);
  }
  (void)stripped;
  return std::nullopt;
}

std::optional<bool> expressions_equivalent(std::string_view a,
                                           std::string_view b) {
  ExprParser parser_a{trim(a)};
  ExprParser parser_b{trim(b)};
  const ExprPtr expr_a = parser_a.parse();
  const ExprPtr expr_b = parser_b.parse();
  if (!expr_a || !expr_b) return std::nullopt;

  std::set<char> names;
  names.insert(parser_a.variables().begin(), parser_a.variables().end());
  names.insert(parser_b.variables().begin(), parser_b.variables().end());

  std::mt19937 rng(1234577u);
  constexpr int kPoints = 7;
  constexpr int kMinValid = 4;
  int valid = 0;
  for (int point = 0; point < kPoints; ++point) {
    std::map<char, double> env;
    for (const char name : names) {
      env[name] = 0.5 + 2.0 * (static_cast<double>(rng()) / 4294967296.0);
    }
    double va = 0.0;
    double vb = 0.0;
    if (!eval_expr(*expr_a, env, va) || !eval_expr(*expr_b, env, vb)) continue;
    const double tol = 1e-6 * std::max({1.0, std::fabs(va), std::fabs(vb)});
    if (std::fabs(va - vb) > tol) return false;
    ++valid;
  }
  if (valid < kMinValid) return std::nullopt;
  return true;
}

}  // namespace cogtools
