#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "regfeal/hermite.hpp"
#include "regfeal/penalty.hpp"
#include "regfeal/sampling.hpp"

namespace regfeal {

struct PenaltyConfig {
  WeightSequence weights = WeightSequence::geometric(0.5);
  double r = 0.33;
  double lambda = -1.0;  // < 0 selects the default 1e-8 / d^{(2-r)/r}
  double mu = 0.1;
  int m = 1000;
  int n_iter = 5;
  int k_max = 40;
  std::uint64_t seed = 0;
  bool freeze_rotation = false;  // keep R = I in feature mode (diagnostic knob)

  double resolved_lambda(int d) const;
};

struct IterationRecord {
  int iteration = 0;
  double train_r2 = 0.0;
  std::vector<double> eta;
  int m_prime = 0;
  std::map<int, int> degree_histogram;  // |alpha| -> count of distinct tuples
  double sampler_normaliser = 0.0;
  double sampler_tail_mass = 0.0;
  std::string view;
  double wall_seconds = 0.0;
};

struct FitReport {
  std::vector<IterationRecord> iterations;
  int s_hat = 0;
  Matrix P_hat;
  std::uint64_t seed = 0;
  double total_seconds = 0.0;
};

enum class SolveView { feature, kernel };

struct FittedModel {
  FeatureState state;
  std::vector<WeightedSample> samples;
  Vector theta;      // coefficients on sqrt-weighted features (both views)
  double theta0 = 0.0;
  std::optional<Vector> delta;  // kernel-view dual coefficients when applicable
  SolveView view = SolveView::feature;
  PenaltyConfig config;
  FitReport report;
};

// argmin (1/n)||Y - Phi theta - theta0 1||^2 + ridge_scale ||theta||^2.
std::pair<Vector, double> solve_feature_view(const Matrix& Phi, const Vector& Y,
                                             double ridge_scale = 1.0);

// argmin (1/n)||Y - K delta - delta0 1||^2 + delta^T K delta, K symmetric PSD.
std::pair<Vector, double> solve_kernel_view(const Matrix& K, const Vector& Y);

FittedModel fit(const Matrix& X, const Vector& Y, const PenaltyConfig& config, Mode mode);

Vector predict(const FittedModel& model, const Matrix& X_new);

// Rotated-basis coefficient map f_hat(alpha_j) = sqrt(w_j) theta_j.
CoefficientMap coefficient_map(const FittedModel& model);

struct GridPoint {
  WeightSequence weights = WeightSequence::geometric(0.5);
  double mu = 0.1;
};

struct CvRow {
  GridPoint point;
  double mean_r2 = 0.0;
  double std_r2 = 0.0;
};

struct CvResult {
  GridPoint best;
  std::vector<CvRow> table;  // sorted by descending mean score
};

// K-fold cross-validation over (weight sequence, mu); ties broken towards
// stronger regularisation (larger mu, then larger rho / M).
CvResult cross_validate(const Matrix& X, const Vector& Y, const std::vector<GridPoint>& grid,
                        const PenaltyConfig& config_template, int folds, Mode mode);

/// Hermite kernel ridge with weights c_{|alpha|}: single solve, no reweighting,
// no rotation; the ridge strength is picked from lambda_grid by validation R^2.
FittedModel kernel_ridge_baseline(const Matrix& X, const Vector& Y,
                                  const WeightSequence& weights,
                                  const std::vector<double>& lambda_grid, int m,
                                  std::uint64_t seed);

}  // namespace regfeal
