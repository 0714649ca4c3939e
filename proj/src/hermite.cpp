#include "regfeal/hermite.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "regfeal/kernels.hpp"

namespace regfeal {

double hermite_1d(int k, double x) {
  if (k < 0) throw std::invalid_argument("hermite_1d: k >= 0 required");
  double hm2 = 1.0;
  if (k == 0) return hm2;
  double hm1 = x;
  for (int n = 2; n <= k; ++n) {
    double h = x * hm1 / std::sqrt(static_cast<double>(n)) -
               std::sqrt(static_cast<double>(n - 1) / static_cast<double>(n)) * hm2;
    hm2 = hm1;
    hm1 = h;
  }
  return hm1;
}

std::vector<double> hermite_1d_all(int k_max, double x) {
  if (k_max < 0) throw std::invalid_argument("hermite_1d_all: k_max >= 0 required");
  std::vector<double> out(static_cast<std::size_t>(k_max) + 1);
  kernels::hermite_batch_scalar(k_max, &x, 1, out.data());
  return out;
}

double hermite_multi(const MultiIndex& alpha, const Vector& x) {
  if (alpha.dim() != x.size())
    throw std::invalid_argument("hermite_multi: dimension mismatch between alpha and x");
  double prod = 1.0;
  for (int a = 0; a < alpha.dim(); ++a)
    if (alpha[a] > 0) prod *= hermite_1d(alpha[a], x[a]);
  return prod;
}

bool is_orthogonal(const Matrix& R, double tol) {
  if (R.rows() != R.cols()) return false;
  return (R.transpose() * R - Matrix::Identity(R.rows(), R.cols())).cwiseAbs().maxCoeff() <= tol;
}

Matrix build_design(const std::vector<WeightedSample>& samples, const Matrix& R,
                    const Matrix& X) {
  const auto n = static_cast<std::size_t>(X.rows());
  const int d = static_cast<int>(X.cols());
  if (R.rows() != d || R.cols() != d)
    throw std::invalid_argument("build_design: rotation has wrong shape");
  if (!is_orthogonal(R)) throw std::invalid_argument("build_design: R is not orthogonal");

  int k_max = 0;
  for (const auto& s : samples) {
    if (s.alpha.dim() != d) throw std::invalid_argument("build_design: sample dimension mismatch");
    if (s.alpha.is_zero())
      throw std::invalid_argument("build_design: zero tuple is excluded from the design");
    if (s.weight < 0.0) throw std::invalid_argument("build_design: negative weight");
    k_max = std::max(k_max, *std::max_element(s.alpha.entries.begin(), s.alpha.entries.end()));
  }

  Matrix Z = X * R;  // row i holds R^T x_i

  // Per-coordinate Hermite tables over all rows: tables[a](k, i) = h_k(z_{i,a}).
  auto batch = kernels::hermite_batch();
  auto mul = kernels::mul_accumulate();
  const std::size_t rows_per_table = static_cast<std::size_t>(k_max) + 1;
  std::vector<double> tables(static_cast<std::size_t>(d) * rows_per_table * n);
  std::vector<double> col(n);
  for (int a = 0; a < d; ++a) {
    col.assign(Z.col(a).data(), Z.col(a).data() + n);
    batch(k_max, col.data(), n, tables.data() + static_cast<std::size_t>(a) * rows_per_table * n);
  }

  Matrix Phi(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(samples.size()));
  std::vector<double> acc(n);
  for (std::size_t j = 0; j < samples.size(); ++j) {
    const MultiIndex& alpha = samples[j].alpha;
    const double sw = std::sqrt(samples[j].weight);
    std::fill(acc.begin(), acc.end(), sw);
    for (int a = 0; a < d; ++a) {
      if (alpha[a] == 0) continue;
      const double* row = tables.data() +
                          (static_cast<std::size_t>(a) * rows_per_table +
                           static_cast<std::size_t>(alpha[a])) *
                              n;
      mul(row, n, acc.data());
    }
    for (std::size_t i = 0; i < n; ++i) Phi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = acc[i];
  }
  return Phi;
}

}  // namespace regfeal
