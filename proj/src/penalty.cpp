#include "regfeal/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace regfeal {

namespace {

// Fractional powers with the continuous extension 0^p = 0.
double fpow(double base, double exponent) {
  return base <= 0.0 ? 0.0 : std::pow(base, exponent);
}

}  // namespace

FeatureState FeatureState::initial(int d, double r, Mode mode) {
  FeatureState state;
  state.rotation = Matrix::Identity(d, d);
  state.eta.assign(static_cast<std::size_t>(d), std::pow(static_cast<double>(d), -(2.0 - r) / r));
  state.r = r;
  state.mode = mode;
  return state;
}

std::vector<double> FeatureState::importances() const {
  std::vector<double> imp(eta.size());
  const double p = r / (2.0 - r);
  for (std::size_t a = 0; a < eta.size(); ++a) imp[a] = fpow(eta[a], p);
  return imp;
}

Matrix compute_Mg(const CoefficientMap& f, const WeightSequence& weights) {
  const int d = f.dim();
  Matrix M = Matrix::Zero(d, d);
  // Derivative cross-terms grouped by alpha = beta - e_a; within each group the
  // contribution is a rank-one update over the touched coordinates.
  std::unordered_map<MultiIndex, std::vector<std::pair<int, double>>, MultiIndexHash> groups;
  for (const auto& [beta, coeff] : f.terms) {
    if (coeff == 0.0) continue;
    const double c = weights.value(beta.degree());
    if (!(c > 0.0))
      throw std::invalid_argument("compute_Mg: coefficient outside the active weight support");
    const double scale = coeff / std::sqrt(c);
    for (int a = 0; a < d; ++a) {
      if (beta[a] == 0) continue;
      MultiIndex alpha = beta;
      alpha.entries[static_cast<std::size_t>(a)] -= 1;
      groups[std::move(alpha)].emplace_back(a, std::sqrt(static_cast<double>(beta[a])) * scale);
    }
  }
  for (const auto& [alpha, entries] : groups) {
    for (const auto& [a, va] : entries)
      for (const auto& [b, vb] : entries) M(a, b) += va * vb;
  }
  return M;
}

Matrix compute_Mf(const CoefficientMap& f, const WeightSequence& weights) {
  return f.basis_rotation * compute_Mg(f, weights) * f.basis_rotation.transpose();
}

double omega_var(const CoefficientMap& f, const WeightSequence& weights, double r) {
  const Matrix Mg = compute_Mg(f, weights);
  double s = 0.0;
  for (int a = 0; a < Mg.rows(); ++a) s += fpow(Mg(a, a), r / 2.0);
  return fpow(s, 1.0 / r);
}

double omega_feat(const CoefficientMap& f, const WeightSequence& weights, double r) {
  const Matrix Mg = compute_Mg(f, weights);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (Mg + Mg.transpose()));
  double s = 0.0;
  for (int a = 0; a < Mg.rows(); ++a) {
    const double ev = eig.eigenvalues()[a];
    if (ev < -1e-8)
      throw std::runtime_error("omega_feat: M_f has a significantly negative eigenvalue");
    s += fpow(ev, r / 2.0);
  }
  return fpow(s, 1.0 / r);
}

double omega_0(const CoefficientMap& f, const WeightSequence& weights) {
  double s = 0.0;
  for (const auto& [alpha, coeff] : f.terms) {
    const double c = weights.value(alpha.degree());
    if (!(c > 0.0))
      throw std::invalid_argument("omega_0: coefficient outside the active weight support");
    s += coeff * coeff / c;
  }
  return std::sqrt(s);
}

std::vector<double> update_eta_var(const std::vector<double>& u, double r) {
  if (!(r > 0.0 && r < 2.0)) throw std::invalid_argument("update_eta_var: r in (0,2) required");
  const int d = static_cast<int>(u.size());
  double denom_sum = 0.0;
  for (double v : u) {
    if (v < 0.0) throw std::invalid_argument("update_eta_var: u must be non-negative");
    denom_sum += fpow(v, r / 2.0);
  }
  std::vector<double> eta(u.size());
  if (denom_sum <= 0.0) {
    // All groups dead: fall back to the uniform initialisation.
    eta.assign(u.size(), std::pow(static_cast<double>(d), -(2.0 - r) / r));
    return eta;
  }
  const double denom = std::pow(denom_sum, (2.0 - r) / r);
  for (std::size_t a = 0; a < u.size(); ++a) eta[a] = fpow(u[a], (2.0 - r) / 2.0) / denom;
  return eta;
}

FeatureState update_lambda_feat(const Matrix& M, double r) {
  if (M.rows() != M.cols()) throw std::invalid_argument("update_lambda_feat: square matrix required");
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw std::invalid_argument("update_lambda_feat: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (M + M.transpose()));
  std::vector<double> evs(static_cast<std::size_t>(M.rows()));
  for (std::size_t a = 0; a < evs.size(); ++a)
    evs[a] = std::max(0.0, eig.eigenvalues()[static_cast<Eigen::Index>(a)]);
  FeatureState state;
  state.rotation = eig.eigenvectors();
  state.eta = update_eta_var(evs, r);
  state.r = r;
  state.mode = Mode::feature;
  return state;
}

int estimate_dimension(const std::vector<double>& eta, double r, int d) {
  const double p = r / (2.0 - r);
  const double threshold = 1.0 / static_cast<double>(d) - 1e-12;
  int s = 0;
  for (double e : eta)
    if (fpow(e, p) >= threshold) ++s;
  return s;
}

Matrix extract_features(const FeatureState& state, int s_hat) {
  const int d = static_cast<int>(state.rotation.rows());
  if (s_hat > d) throw std::invalid_argument("extract_features: s_hat exceeds dimension");
  std::vector<int> order(state.eta.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return state.eta[static_cast<std::size_t>(a)] > state.eta[static_cast<std::size_t>(b)];
  });
  Matrix P(d, s_hat);
  for (int j = 0; j < s_hat; ++j) P.col(j) = state.rotation.col(order[static_cast<std::size_t>(j)]);
  return P;
}

double variational_penalty(const CoefficientMap& f, const WeightSequence& weights,
                           const std::vector<double>& eta) {
  const Matrix Mg = compute_Mg(f, weights);
  double s = 0.0;
  for (int a = 0; a < Mg.rows(); ++a) {
    const double g = Mg(a, a);
    if (g <= 0.0) continue;
    const double e = eta[static_cast<std::size_t>(a)];
    if (e <= 0.0) return std::numeric_limits<double>::infinity();
    s += g / e;
  }
  return s;
}

}  // namespace regfeal
