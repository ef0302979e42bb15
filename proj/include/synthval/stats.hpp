#pragma once

#include <span>

namespace synthval {

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

// Student t distribution with `df` degrees of freedom.
double student_t_cdf(double t, double df);
// Inverse CDF by bracketing bisection; p in (0, 1).
double student_t_quantile(double p, double df);

struct Correlation {
    double r = 0.0;
    double p_value = 1.0;  // two-sided, t test with n - 2 degrees of freedom
};

// Requires |x| = |y| >= 3; throws DegenerateError when either input is constant.
Correlation pearson_corr(std::span<const double> x, std::span<const double> y);

// Two-sided t confidence interval width 2 t_{(1+c)/2, n-1} s / sqrt(n), with
// the n-1 sample standard deviation. Requires n >= 2.
double ci_width(std::span<const double> values, double confidence = 0.95);

}  // namespace synthval
