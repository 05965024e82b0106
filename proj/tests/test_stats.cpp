#include <doctest.h>

#include <cmath>
#include <vector>

#include "pro/stats.hpp"

using namespace pro;

TEST_CASE("identical samples give t = 0, p = 1") {
    const std::vector<double> a = {1.0, 2.0, 3.0};
    const TTestResult r = welch_t_test(a, a);
    CHECK(r.t == 0.0);
    CHECK(r.p == 1.0);
}

TEST_CASE("degenerate constant-equal samples give t = 0, p = 1") {
    const std::vector<double> a = {2.0, 2.0, 2.0};
    const std::vector<double> b = {2.0, 2.0};
    const TTestResult r = welch_t_test(a, b);
    CHECK(r.t == 0.0);
    CHECK(r.p == 1.0);
}

TEST_CASE("swapping the samples negates t and keeps p") {
    const std::vector<double> a = {0.5, 1.1, 2.3, 0.9};
    const std::vector<double> b = {2.0, 2.1, 1.9, 2.2, 2.4};
    const TTestResult ab = welch_t_test(a, b);
    const TTestResult ba = welch_t_test(b, a);
    CHECK(ab.t == doctest::Approx(-ba.t).epsilon(1e-12));
    CHECK(ab.p == doctest::Approx(ba.p).epsilon(1e-12));
}

TEST_CASE("welch matches the reference oracle on fixed vectors") {
    // Frozen from an independent statistical computation.
    const std::vector<double> a = {1, 2, 3, 4, 5};
    const std::vector<double> b = {2, 3, 4, 5, 6};
    const TTestResult r = welch_t_test(a, b);
    CHECK(std::fabs(r.t - (-1.0)) < 1e-6);
    CHECK(std::fabs(r.p - 0.34659350708733416) < 1e-4);
    CHECK(r.df == doctest::Approx(8.0).epsilon(1e-12));

    const std::vector<double> c = {0.5, 1.1, 2.3, 0.9};
    const std::vector<double> d = {2.0, 2.1, 1.9, 2.2, 2.4};
    const TTestResult r2 = welch_t_test(c, d);
    CHECK(std::fabs(r2.t - (-2.3189183825777877)) < 1e-6);
    CHECK(std::fabs(r2.p - 0.09527239121382991) < 1e-4);
}

TEST_CASE("student t cdf matches reference values") {
    // Frozen from an independent statistical computation.
    CHECK(std::fabs(student_t_cdf(-1.0, 8.0) - 0.17329675354366708) < 1e-10);
    CHECK(std::fabs(student_t_cdf(2.5, 3.0) - 0.9561466764959673) < 1e-10);
    CHECK(std::fabs(student_t_cdf(0.3, 40.0) - 0.61713464161449039) < 1e-10);
    CHECK(std::fabs(student_t_cdf(1.0, 1.0) - 0.75) < 1e-10);
    CHECK(student_t_cdf(0.0, 5.0) == 0.5);
}

TEST_CASE("regularized incomplete beta edge values") {
    CHECK(regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0);
    CHECK(regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0);
    // I_x(1,1) = x.
    CHECK(regularized_incomplete_beta(1.0, 1.0, 0.37) == doctest::Approx(0.37).epsilon(1e-12));
}

TEST_CASE("samples below two observations are rejected") {
    const std::vector<double> one = {1.0};
    const std::vector<double> two = {1.0, 2.0};
    CHECK_THROWS(welch_t_test(one, two));
    CHECK_THROWS(welch_t_test(two, one));
}
