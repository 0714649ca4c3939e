#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "regfeal/penalty.hpp"
#include "regfeal/sampling.hpp"

namespace regfeal {

enum class Dataset { sinus, polynomial };

struct SyntheticSpec {
  Dataset dataset = Dataset::sinus;
  int d = 10;
  int s = 2;  // both targets use exactly two projected coordinates
  int n = 1000;
  int n_test = 5000;
  double sigma = 0.0;
  Mode mode = Mode::feature;
  std::uint64_t seed = 0;
};

struct GeneratedData {
  Matrix X;
  Vector Y;
  Matrix P;  // d x s, orthonormal columns
  Matrix X_test;
  Vector Y_test;
  double noise_sigma = 0.0;
};

// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the
// sign-of-diagonal correction).
Matrix sample_orthogonal(int d, Rng& rng);

double target_value(Dataset dataset, double u, double v);

GeneratedData make_dataset(const SyntheticSpec& spec);

// Best achievable test R-squared given the noise level.
double noise_level_score(const Vector& y_test, double sigma);

std::string dataset_name(Dataset dataset);
Dataset dataset_from_name(const std::string& name);

}  // namespace regfeal
