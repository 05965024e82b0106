#pragma once

#include <Eigen/Dense>
#include <vector>

namespace pro {

struct RidgeFit {
    Eigen::VectorXd theta;  // D
    Eigen::MatrixXd sigma;  // D x D, symmetric positive definite: (X'X + lambda I)^-1
};

// Closed-form ridge solve. The posterior covariance (X'X + lambda I)^-1 is
// materialized explicitly because serving needs phi' Sigma phi per query.
// Cost O(D^2 (D + n)). Empty datasets are legal: theta = 0, sigma = I/lambda.
RidgeFit fit_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda);

// Same solve starting from precomputed Gram quantities; used by training,
// where the Gram matrix is shared across the GCV grid.
RidgeFit fit_ridge_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& xty, double lambda);

// Generalized cross-validation score for one lambda, from Gram quantities:
//   GCV = (||(I-H) y||^2 / n) / ((trace(I-H) / n)^2),  H = X (X'X + lambda I)^-1 X'.
double gcv_score(const Eigen::MatrixXd& gram, const Eigen::VectorXd& xty, double y_sq_norm,
                 std::size_t n, double lambda);

// Picks the candidate lambda minimizing GCV; ties go to the smallest lambda.
// n = 0 returns the (lower) median candidate.
double select_lambda_gcv(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         std::vector<double> candidates);

// Default search grid: 9 points log-spaced over [1e-4, 1e4].
std::vector<double> default_lambda_grid();

}  // namespace pro
