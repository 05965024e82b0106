#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "pro/ridge.hpp"
#include "pro/rng.hpp"

using namespace pro;

namespace {

// Independent normal-equations oracle: builds (X'X + lambda I) theta = X'y
// with plain loops and solves it by Gaussian elimination with partial
// pivoting. Shares no code with the library path.
std::vector<double> solve_normal_equations(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                           double lambda) {
    const int n = static_cast<int>(x.rows());
    const int d = static_cast<int>(x.cols());
    std::vector<std::vector<double>> a(static_cast<std::size_t>(d),
                                       std::vector<double>(static_cast<std::size_t>(d + 1), 0.0));
    for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += x(i, r) * x(i, c);
            a[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = s + (r == c ? lambda : 0.0);
        }
        double rhs = 0.0;
        for (int i = 0; i < n; ++i) rhs += x(i, r) * y(i);
        a[static_cast<std::size_t>(r)][static_cast<std::size_t>(d)] = rhs;
    }
    for (int col = 0; col < d; ++col) {
        int pivot = col;
        for (int r = col + 1; r < d; ++r) {
            if (std::fabs(a[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)]) >
                std::fabs(a[static_cast<std::size_t>(pivot)][static_cast<std::size_t>(col)])) {
                pivot = r;
            }
        }
        std::swap(a[static_cast<std::size_t>(col)], a[static_cast<std::size_t>(pivot)]);
        for (int r = col + 1; r < d; ++r) {
            const double f = a[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)] /
                             a[static_cast<std::size_t>(col)][static_cast<std::size_t>(col)];
            for (int c = col; c <= d; ++c) {
                a[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] -=
                    f * a[static_cast<std::size_t>(col)][static_cast<std::size_t>(c)];
            }
        }
    }
    std::vector<double> theta(static_cast<std::size_t>(d), 0.0);
    for (int r = d - 1; r >= 0; --r) {
        double s = a[static_cast<std::size_t>(r)][static_cast<std::size_t>(d)];
        for (int c = r + 1; c < d; ++c) {
            s -= a[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] *
                 theta[static_cast<std::size_t>(c)];
        }
        theta[static_cast<std::size_t>(r)] = s / a[static_cast<std::size_t>(r)][static_cast<std::size_t>(r)];
    }
    return theta;
}

Eigen::MatrixXd random_matrix(Substream& stream, int n, int d, double scale = 1.0) {
    Eigen::MatrixXd x(n, d);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) x(i, j) = stream.next_normal() * scale;
    }
    return x;
}

// Brute-force GCV with a dense hat matrix; independent of the Gram-based path.
double gcv_brute_force(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda) {
    const auto n = x.rows();
    const Eigen::MatrixXd inner =
        (x.transpose() * x + lambda * Eigen::MatrixXd::Identity(x.cols(), x.cols())).inverse();
    const Eigen::MatrixXd h = x * inner * x.transpose();
    const Eigen::MatrixXd i_minus_h = Eigen::MatrixXd::Identity(n, n) - h;
    const double rss = (i_minus_h * y).squaredNorm();
    const double tr = i_minus_h.trace();
    const double dn = static_cast<double>(n);
    return (rss / dn) / ((tr / dn) * (tr / dn));
}

}  // namespace

TEST_CASE("empty dataset gives the prior: theta = 0, sigma = I/lambda") {
    Eigen::MatrixXd x(0, 3);
    Eigen::VectorXd y(0);
    const RidgeFit fit = fit_ridge(x, y, 4.0);
    CHECK(fit.theta.norm() == 0.0);
    CHECK((fit.sigma - Eigen::MatrixXd::Identity(3, 3) * 0.25).norm() == doctest::Approx(0.0));
}

TEST_CASE("two identical rows solve the hand-computed normal equations") {
    Eigen::MatrixXd x(2, 1);
    x << 1, 1;
    Eigen::VectorXd y(2);
    y << 2, 4;
    const RidgeFit fit = fit_ridge(x, y, 1e-12);
    CHECK(fit.theta(0) == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(fit.sigma(0, 0) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("fit_ridge matches the independent solver oracle on a 200x20 system") {
    Substream stream(11);
    const Eigen::MatrixXd x = random_matrix(stream, 200, 20);
    Eigen::VectorXd y(200);
    for (int i = 0; i < 200; ++i) y(i) = stream.next_normal();
    const RidgeFit fit = fit_ridge(x, y, 1.0);
    const std::vector<double> oracle = solve_normal_equations(x, y, 1.0);
    double num = 0.0, den = 0.0;
    for (int j = 0; j < 20; ++j) {
        num += (fit.theta(j) - oracle[static_cast<std::size_t>(j)]) *
               (fit.theta(j) - oracle[static_cast<std::size_t>(j)]);
        den += oracle[static_cast<std::size_t>(j)] * oracle[static_cast<std::size_t>(j)];
    }
    CHECK(std::sqrt(num / den) < 1e-8);
}

TEST_CASE("sigma is symmetric and positive definite") {
    Substream stream(23);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 5 + static_cast<int>(stream.next_below(60));
        const int d = 2 + static_cast<int>(stream.next_below(12));
        const Eigen::MatrixXd x = random_matrix(stream, n, d);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) y(i) = stream.next_normal();
        const RidgeFit fit = fit_ridge(x, y, 0.1);
        CHECK((fit.sigma - fit.sigma.transpose()).cwiseAbs().maxCoeff() < 1e-10);
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigs(fit.sigma);
        CHECK(eigs.eigenvalues().minCoeff() > 0.0);
    }
}

TEST_CASE("doubling all rows leaves theta unchanged in the small-lambda limit") {
    Substream stream(31);
    const Eigen::MatrixXd x = random_matrix(stream, 40, 6);
    Eigen::VectorXd y(40);
    for (int i = 0; i < 40; ++i) y(i) = stream.next_normal();

    Eigen::MatrixXd x2(80, 6);
    x2 << x, x;
    Eigen::VectorXd y2(80);
    y2 << y, y;

    const RidgeFit a = fit_ridge(x, y, 1e-8);
    const RidgeFit b = fit_ridge(x2, y2, 1e-8);
    CHECK((a.theta - b.theta).norm() / a.theta.norm() < 1e-4);
}

TEST_CASE("non-finite design entries are rejected") {
    Eigen::MatrixXd x(1, 1);
    x << std::numeric_limits<double>::quiet_NaN();
    Eigen::VectorXd y(1);
    y << 1.0;
    CHECK_THROWS(fit_ridge(x, y, 1.0));
}

TEST_CASE("gcv with a single candidate returns it") {
    Substream stream(5);
    const Eigen::MatrixXd x = random_matrix(stream, 10, 3);
    Eigen::VectorXd y(10);
    for (int i = 0; i < 10; ++i) y(i) = stream.next_normal();
    CHECK(select_lambda_gcv(x, y, {1.0}) == 1.0);
}

TEST_CASE("gcv matches brute-force hat-matrix evaluation on a fixed 10x3 dataset") {
    Substream stream(17);
    const Eigen::MatrixXd x = random_matrix(stream, 10, 3);
    Eigen::VectorXd y(10);
    for (int i = 0; i < 10; ++i) y(i) = x(i, 0) * 2.0 - x(i, 2) + 0.3 * stream.next_normal();

    const std::vector<double> candidates = {0.01, 1.0, 100.0};
    const Eigen::MatrixXd gram = x.transpose() * x;
    const Eigen::VectorXd xty = x.transpose() * y;
    double best_brute = candidates[0];
    double best_score = std::numeric_limits<double>::infinity();
    for (double lambda : candidates) {
        const double brute = gcv_brute_force(x, y, lambda);
        const double ours = gcv_score(gram, xty, y.squaredNorm(), 10, lambda);
        CHECK(ours == doctest::Approx(brute).epsilon(1e-9));
        if (brute < best_score) {
            best_score = brute;
            best_brute = lambda;
        }
    }
    CHECK(select_lambda_gcv(x, y, candidates) == best_brute);
}

TEST_CASE("all-zero targets tie every candidate; smallest lambda wins") {
    Substream stream(29);
    const Eigen::MatrixXd x = random_matrix(stream, 8, 2);
    const Eigen::VectorXd y = Eigen::VectorXd::Zero(8);
    CHECK(select_lambda_gcv(x, y, {100.0, 0.5, 7.0}) == 0.5);
}

TEST_CASE("empty dataset returns the median candidate") {
    Eigen::MatrixXd x(0, 2);
    Eigen::VectorXd y(0);
    CHECK(select_lambda_gcv(x, y, {10.0, 0.1, 1.0}) == 1.0);
    CHECK_THROWS(select_lambda_gcv(x, y, {}));
    CHECK_THROWS(select_lambda_gcv(x, y, {0.0, 1.0}));
}

TEST_CASE("default lambda grid spans 1e-4 to 1e4 with 9 points") {
    const auto grid = default_lambda_grid();
    REQUIRE(grid.size() == 9);
    CHECK(grid.front() == doctest::Approx(1e-4));
    CHECK(grid.back() == doctest::Approx(1e4));
}
