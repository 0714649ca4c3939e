#pragma once

#include <Eigen/Dense>
#include <unordered_map>
#include <vector>

#include "regfeal/hermite.hpp"
#include "regfeal/multiindex.hpp"

namespace regfeal {

// Sparse Hermite expansion f = constant + sum f_hat(alpha) H_alpha(R^T .),
// coefficients expressed in the rotated basis.
struct CoefficientMap {
  double constant = 0.0;
  std::unordered_map<MultiIndex, double, MultiIndexHash> terms;
  Matrix basis_rotation;  // d x d orthogonal

  int dim() const { return static_cast<int>(basis_rotation.rows()); }
  void add(const MultiIndex& alpha, double value) {
    if (alpha.is_zero())
      constant += value;
    else if (value != 0.0)
      terms[alpha] += value;
  }
};

enum class Mode { variable, feature };

// Rotation R and importance vector eta with ||eta||_{r/(2-r)} = 1.
struct FeatureState {
  Matrix rotation;
  std::vector<double> eta;
  double r = 0.33;
  Mode mode = Mode::feature;

  static FeatureState initial(int d, double r, Mode mode);
  // eta_a^{r/(2-r)}, the relative importance of direction a (sums to 1).
  std::vector<double> importances() const;
};

// M_g in the rotated basis: (M_g)_{a,b} =
//   sum_alpha (1/c_{|alpha|+1}) sqrt(alpha_a+1) sqrt(alpha_b+1) f(alpha+e_a) f(alpha+e_b).
Matrix compute_Mg(const CoefficientMap& f, const WeightSequence& weights);

// M_f = R M_g R^T.
Matrix compute_Mf(const CoefficientMap& f, const WeightSequence& weights);

// Sparsity penalty (sum_a group_a^{r/2})^{1/r} with group_a = Diag(M_g)_a.
double omega_var(const CoefficientMap& f, const WeightSequence& weights, double r);

// Trace-power penalty (sum_a eigval_a(M_f)^{r/2})^{1/r}.
double omega_feat(const CoefficientMap& f, const WeightSequence& weights, double r);

// Smoothness penalty (sum_alpha f_hat(alpha)^2 / c_{|alpha|})^{1/2}.
double omega_0(const CoefficientMap& f, const WeightSequence& weights);

// Closed-form minimiser of sum_a u_a / eta_a over ||eta||_{r/(2-r)} = 1.
// u = 0 returns the uniform vector.
std::vector<double> update_eta_var(const std::vector<double>& u, double r);

// Eigendecomposition-based update: R = eigenvectors, eta from eigenvalues
// (clamped at zero) through the same closed form.
FeatureState update_lambda_feat(const Matrix& M, double r);

// s_hat = #{a : eta_a^{r/(2-r)} >= 1/d}.
int estimate_dimension(const std::vector<double>& eta, double r, int d);

// Columns of R with the s_hat largest eta entries, sorted descending
// (ties broken by lower index).
Matrix extract_features(const FeatureState& state, int s_hat);

// trace(Lambda^{-1} M_f) in the variational form: sum_a eta_a^{-1} (M_g)_{aa} for the
// rotated-basis coefficients. Used for the alternating-minimisation descent check.
double variational_penalty(const CoefficientMap& f, const WeightSequence& weights,
                           const std::vector<double>& eta);

}  // namespace regfeal
