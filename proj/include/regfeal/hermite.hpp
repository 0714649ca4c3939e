#pragma once

#include <Eigen/Dense>
#include <vector>

#include "regfeal/multiindex.hpp"

namespace regfeal {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Normalised ("probabilist, unit-norm") Hermite polynomial h_k(x),
// evaluated through the stable three-term recurrence.
double hermite_1d(int k, double x);

// All values h_0(x), ..., h_{k_max}(x) in O(k_max).
std::vector<double> hermite_1d_all(int k_max, double x);

// H_alpha(x) = prod_a h_{alpha_a}(x_a).
double hermite_multi(const MultiIndex& alpha, const Vector& x);

bool is_orthogonal(const Matrix& R, double tol = 1e-8);

// Design matrix for weighted Hermite features: entry(i,j) = sqrt(w_j) * H_{alpha_j}(R^T x_i).
// Columns follow the order of `samples`; all weights must be >= 0 and R orthogonal.
Matrix build_design(const std::vector<WeightedSample>& samples, const Matrix& R,
                    const Matrix& X);

}  // namespace regfeal
