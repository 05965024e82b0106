#pragma once

#include <cstddef>
#include <span>

namespace pro {

struct TTestResult {
    double t = 0.0;
    double p = 1.0;  // two-sided
    double df = 0.0;
};

// Welch's unequal-variance two-sample t statistic with Welch-Satterthwaite
// degrees of freedom; p-value from the Student-t CDF. Degenerate input where
// both samples are constant and equal yields t = 0, p = 1.
TTestResult welch_t_test(std::span<const double> sample_a, std::span<const double> sample_b);

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double regularized_incomplete_beta(double a, double b, double x);

// CDF of Student's t distribution with (possibly fractional) df.
double student_t_cdf(double t, double df);

double sample_mean(std::span<const double> xs);
double sample_variance(std::span<const double> xs);  // unbiased, n-1

}  // namespace pro
