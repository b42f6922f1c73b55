#pragma once

#include <optional>
#include <vector>

namespace cogtools {

// Regularized incomplete beta I_x(a, b), accurate to better than 1e-10 over
// the t-test range (continued fraction with symmetry reduction).
double regularized_incomplete_beta(double a, double b, double x);

// Two-sided p-value for Student's t with (possibly fractional) dof.
double student_t_two_sided_p(double t, double dof);

struct WelchResult {
  double t = 0.0;
  double dof = 0.0;
  double p = 1.0;
};

// Welch's unequal-variance t-test. Throws StatsError when either sample has
// fewer than two values. Two identical constant samples give t=0, p=1 by
// convention.
WelchResult welch_t_test(const std::vector<double>& a,
                         const std::vector<double>& b);

// Pearson correlation; nullopt when either vector is constant (undefined).
// Throws StatsError on length mismatch or n < 2.
std::optional<double> pearson(const std::vector<double>& x,
                              const std::vector<double>& y);

struct AccuracySummary {
  double mean_pass1 = 0.0;  // percent
  double std_error = 0.0;   // percent
  int repetitions = 0;
  int n_questions = 0;
};

// rows[r][q] = repetition r solved question q. Per-repetition accuracy is
// the row mean x100; mean_pass1 averages those; std_error is the population
// standard deviation of the row accuracies over sqrt(repetitions) (0 for a
// single repetition). Throws StatsError on an empty or ragged matrix.
AccuracySummary pass_at_1(const std::vector<std::vector<bool>>& rows);

}  // namespace cogtools
