#include "cogtools/stats.hpp"

#include <cmath>
#include <limits>

#include "cogtools/errors.hpp"

namespace cogtools {

namespace {

// Continued fraction for the incomplete beta (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 500;
  constexpr double kEpsilon = 1e-15;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEpsilon) break;
  }
  return h;
}

double mean_of(const std::vector<double>& v) {
  double sum = 0.0;
  for (const double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v, double mean) {
  double sum = 0.0;
  for (const double x : v) sum += (x - mean) * (x - mean);
  return sum / static_cast<double>(v.size() - 1);
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw StatsError("beta parameters must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double dof) {
  if (!(dof > 0.0)) throw StatsError("degrees of freedom must be positive");
  if (std::isinf(t)) return 0.0;
  if (std::isnan(t)) throw StatsError("t statistic is not a number");
  const double x = dof / (dof + t * t);
  return regularized_incomplete_beta(dof / 2.0, 0.5, x);
}

WelchResult welch_t_test(const std::vector<double>& a,
                         const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) {
    throw StatsError("welch_t_test needs at least two values per sample");
  }
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  const double va = sample_variance(a, ma);
  const double vb = sample_variance(b, mb);

  WelchResult result;
  if (va == 0.0 && vb == 0.0) {
    if (ma == mb) {
      result.t = 0.0;
      result.dof = na + nb - 2.0;
      result.p = 1.0;
      return result;
    }
    result.t = ma < mb ? -std::numeric_limits<double>::infinity()
                       : std::numeric_limits<double>::infinity();
    result.dof = na + nb - 2.0;
    result.p = 0.0;
    return result;
  }
  const double sa = va / na;
  const double sb = vb / nb;
  result.t = (ma - mb) / std::sqrt(sa + sb);
  result.dof = (sa + sb) * (sa + sb) /
               (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
  result.p = student_t_two_sided_p(result.t, result.dof);
  return result;
}

std::optional<double> pearson(const std::vector<double>& x,
                              const std::vector<double>& y) {
  if (x.size() != y.size()) throw StatsError("pearson needs equal-length vectors");
  if (x.size() < 2) throw StatsError("pearson needs at least two points");
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

AccuracySummary pass_at_1(const std::vector<std::vector<bool>>& rows) {
  if (rows.empty() || rows.front().empty()) {
    throw StatsError("pass_at_1 needs a non-empty matrix");
  }
  const std::size_t n_questions = rows.front().size();
  std::vector<double> accuracies;
  accuracies.reserve(rows.size());
  for (const auto& row : rows) {
    if (row.size() != n_questions) throw StatsError("pass_at_1 matrix is ragged");
    double solved = 0.0;
    for (const bool hit : row) solved += hit ? 1.0 : 0.0;
    accuracies.push_back(100.0 * solved / static_cast<double>(n_questions));
  }
  AccuracySummary summary;
  summary.repetitions = static_cast<int>(rows.size());
  summary.n_questions = static_cast<int>(n_questions);
  summary.mean_pass1 = mean_of(accuracies);
  double variance = 0.0;
  for (const double acc : accuracies) {
    variance += (acc - summary.mean_pass1) * (acc - summary.mean_pass1);
  }
  variance /= static_cast<double>(accuracies.size());
  summary.std_error = accuracies.size() > 1
                          ? std::sqrt(variance) /
                                std::sqrt(static_cast<double>(accuracies.size()))
                          : 0.0;
  return summary;
}

}  // namespace cogtools
