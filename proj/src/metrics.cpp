#include "regfeal/metrics.hpp"

#include <stdexcept>

namespace regfeal {

double r2_score(const Vector& y_true, const Vector& y_pred) {
  if (y_true.size() != y_pred.size() || y_true.size() < 2)
    throw std::invalid_argument("r2_score: need equal lengths >= 2");
  const double mean = y_true.mean();
  const double ss_tot = (y_true.array() - mean).square().sum();
  if (!(ss_tot > 0.0)) throw std::invalid_argument("r2_score: y_true is constant");
  const double ss_res = (y_true - y_pred).squaredNorm();
  return 1.0 - ss_res / ss_tot;
}

namespace {

Matrix projector(const Matrix& P) {
  const Matrix gram = P.transpose() * P;
  Eigen::FullPivLU<Matrix> lu(gram);
  if (!lu.isInvertible()) throw std::invalid_argument("feature_score: rank-deficient subspace basis");
  return P * lu.solve(P.transpose());
}

}  // namespace

double feature_score(const Matrix& P, const Matrix& P_hat, int s) {
  const int d = static_cast<int>(P.rows());
  if (s < 1 || s > d) throw std::invalid_argument("feature_score: 1 <= s <= d required");
  if (P_hat.rows() != d) throw std::invalid_argument("feature_score: dimension mismatch");
  const double dist2 = (projector(P) - projector(P_hat)).squaredNorm();
  const double denom = 2.0 * (2 * s <= d ? s : d - s);
  return 1.0 - dist2 / denom;
}

}  // namespace regfeal
