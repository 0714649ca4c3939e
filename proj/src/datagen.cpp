#include "regfeal/datagen.hpp"

#include <cmath>
#include <stdexcept>

namespace regfeal {

Matrix sample_orthogonal(int d, Rng& rng) {
  if (d < 1) throw std::invalid_argument("sample_orthogonal: d >= 1 required");
  Matrix G(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) G(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix Q = qr.householderQ();
  const Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j)
    if (R(j, j) < 0.0) Q.col(j) *= -1.0;
  return Q;
}

double target_value(Dataset dataset, double u, double v) {
  switch (dataset) {
    case Dataset::sinus:
      return std::sin(2.0 * u) + std::sin(2.0 * v);
    case Dataset::polynomial:
      return u + v - u * u - v * v + 2.0 * u * v * v * v - 4.0;
  }
  throw std::invalid_argument("target_value: unknown dataset");
}

namespace {

const double kHalfWidth = std::sqrt(3.0);

// Noise uses its own stream so that X is identical across sigma values.
void fill_split(const SyntheticSpec& spec, const Matrix& P, int rows, Rng& rng, Rng& noise_rng,
                Matrix& X, Vector& Y) {
  X.resize(rows, spec.d);
  Y.resize(rows);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < spec.d; ++j) X(i, j) = (2.0 * rng.uniform() - 1.0) * kHalfWidth;
    const Vector proj = P.transpose() * X.row(i).transpose();
    double y = target_value(spec.dataset, proj[0], proj[1]);
    if (spec.sigma > 0.0) y += spec.sigma * noise_rng.normal();
    Y[i] = y;
  }
}

}  // namespace

GeneratedData make_dataset(const SyntheticSpec& spec) {
  if (spec.s != 2)
    throw std::invalid_argument("make_dataset: the synthetic targets require s = 2");
  if (spec.d < spec.s) throw std::invalid_argument("make_dataset: d >= s required");
  Rng master(spec.seed);
  GeneratedData data;
  data.noise_sigma = spec.sigma;
  if (spec.mode == Mode::variable) {
    data.P = Matrix::Identity(spec.d, spec.d).leftCols(spec.s);
  } else {
    Rng sub = master.substream(0);
    data.P = sample_orthogonal(spec.d, sub).leftCols(spec.s);
  }
  Rng train_rng = master.substream(1);
  Rng test_rng = master.substream(2);
  Rng train_noise = master.substream(3);
  Rng test_noise = master.substream(4);
  fill_split(spec, data.P, spec.n, train_rng, train_noise, data.X, data.Y);
  fill_split(spec, data.P, spec.n_test, test_rng, test_noise, data.X_test, data.Y_test);
  return data;
}

double noise_level_score(const Vector& y_test, double sigma) {
  const double mean = y_test.mean();
  const double ss = (y_test.array() - mean).square().sum();
  return 1.0 - static_cast<double>(y_test.size()) * sigma * sigma / ss;
}

std::string dataset_name(Dataset dataset) {
  return dataset == Dataset::sinus ? "sinus" : "polynomial";
}

Dataset dataset_from_name(const std::string& name) {
  if (name == "sinus") return Dataset::sinus;
  if (name == "polynomial") return Dataset::polynomial;
  throw std::invalid_argument("unknown dataset: " + name);
}

}  // namespace regfeal
