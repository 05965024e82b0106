#include "pro/ridge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pro {

namespace {

void require_finite(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    if (!x.allFinite() || !y.allFinite()) {
        throw std::invalid_argument("ridge: non-finite entries in design matrix or targets");
    }
}

}  // namespace

RidgeFit fit_ridge_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& xty, double lambda) {
    if (lambda <= 0.0) throw std::invalid_argument("ridge: lambda must be > 0");
    const Eigen::Index d = gram.rows();
    Eigen::MatrixXd regularized = gram;
    regularized.diagonal().array() += lambda;

    Eigen::LLT<Eigen::MatrixXd> llt(regularized);
    if (llt.info() != Eigen::Success) {
        throw std::runtime_error("ridge: Gram + lambda I is not positive definite");
    }
    RidgeFit fit;
    fit.sigma = llt.solve(Eigen::MatrixXd::Identity(d, d));
    // The LLT inverse is symmetric up to rounding; symmetrize so downstream
    // quadratic forms and serialization see one canonical matrix.
    fit.sigma = 0.5 * (fit.sigma + fit.sigma.transpose()).eval();
    fit.theta = fit.sigma * xty;
    return fit;
}

RidgeFit fit_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda) {
    require_finite(x, y);
    if (x.rows() != y.size()) throw std::invalid_argument("ridge: row/target count mismatch");
    if (x.cols() < 1) throw std::invalid_argument("ridge: need at least one feature column");
    const Eigen::MatrixXd gram = x.transpose() * x;
    const Eigen::VectorXd xty = x.transpose() * y;
    return fit_ridge_gram(gram, xty, lambda);
}

double gcv_score(const Eigen::MatrixXd& gram, const Eigen::VectorXd& xty, double y_sq_norm,
                 std::size_t n, double lambda) {
    const RidgeFit fit = fit_ridge_gram(gram, xty, lambda);
    // ||y - X theta||^2 expanded through the Gram matrix.
    const double rss = std::max(
        0.0, y_sq_norm - 2.0 * fit.theta.dot(xty) + fit.theta.dot(gram * fit.theta));
    // trace(H) = trace((G + lambda I)^-1 G) = D - lambda trace(Sigma).
    const double trace_h =
        static_cast<double>(gram.rows()) - lambda * fit.sigma.trace();
    const double dn = static_cast<double>(n);
    const double denom = (dn - trace_h) / dn;
    if (!(denom > 1e-12)) return std::numeric_limits<double>::infinity();
    return (rss / dn) / (denom * denom);
}

double select_lambda_gcv(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         std::vector<double> candidates) {
    if (candidates.empty()) throw std::invalid_argument("gcv: empty candidate set");
    for (double c : candidates) {
        if (!(c > 0.0)) throw std::invalid_argument("gcv: candidates must be > 0");
    }
    std::sort(candidates.begin(), candidates.end());

    const std::size_t n = static_cast<std::size_t>(x.rows());
    if (n == 0) return candidates[(candidates.size() - 1) / 2];

    require_finite(x, y);
    const Eigen::MatrixXd gram = x.transpose() * x;
    const Eigen::VectorXd xty = x.transpose() * y;
    const double y_sq_norm = y.squaredNorm();

    double best_lambda = candidates.front();
    double best_score = std::numeric_limits<double>::infinity();
    for (double lambda : candidates) {
        const double score = gcv_score(gram, xty, y_sq_norm, n, lambda);
        if (score < best_score) {  // strict: ties keep the smallest lambda
            best_score = score;
            best_lambda = lambda;
        }
    }
    return best_lambda;
}

std::vector<double> default_lambda_grid() {
    std::vector<double> grid;
    for (int e = -4; e <= 4; ++e) grid.push_back(std::pow(10.0, e));
    return grid;
}

}  // namespace pro
