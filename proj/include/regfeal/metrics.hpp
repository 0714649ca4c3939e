#pragma once

#include <Eigen/Dense>

namespace regfeal {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Coefficient of determination; rejects constant y_true.
double r2_score(const Vector& y_true, const Vector& y_pred);

// Subspace recovery score in [0, 1]: 1 minus the normalised squared Frobenius
// distance between orthogonal projectors, with denominator 2s for s <= d/2 and
// 2(d-s) otherwise. 1 means the subspaces match, 0 means no overlap.
double feature_score(const Matrix& P, const Matrix& P_hat, int s);

}  // namespace regfeal
