#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "regfeal/datagen.hpp"
#include "regfeal/penalty.hpp"
#include "regfeal/sampling.hpp"

using namespace regfeal;

namespace {

CoefficientMap empty_map(int d) {
  CoefficientMap f;
  f.basis_rotation = Matrix::Identity(d, d);
  return f;
}

MultiIndex unit(int d, int a, int count = 1) {
  std::vector<int> e(static_cast<std::size_t>(d), 0);
  e[static_cast<std::size_t>(a)] = count;
  return MultiIndex{e};
}

// Degree <= 2 polynomial c0 + b^T x + x^T A x with A symmetric.
struct Quadratic {
  double c0 = 0.0;
  Vector b;
  Matrix A;

  Quadratic compose_rotation(const Matrix& R) const {  // x -> f(R x)
    return {c0, R.transpose() * b, R.transpose() * A * R};
  }

  CoefficientMap to_hermite() const {
    const int d = static_cast<int>(b.size());
    CoefficientMap f = empty_map(d);
    f.constant = c0 + A.trace();
    for (int a = 0; a < d; ++a) {
      f.add(unit(d, a), b[a]);
      f.add(unit(d, a, 2), std::sqrt(2.0) * A(a, a));
      for (int c = a + 1; c < d; ++c) {
        MultiIndex cross = unit(d, a);
        cross.entries[static_cast<std::size_t>(c)] = 1;
        f.add(cross, 2.0 * A(a, c));
      }
    }
    return f;
  }
};

Quadratic random_quadratic(int d, Rng& rng) {
  Quadratic q;
  q.c0 = rng.normal();
  q.b = Vector(d);
  for (int a = 0; a < d; ++a) q.b[a] = rng.normal();
  Matrix G(d, d);
  for (int a = 0; a < d; ++a)
    for (int c = 0; c < d; ++c) G(a, c) = rng.normal();
  q.A = 0.5 * (G + G.transpose());
  return q;
}

double eta_norm(const std::vector<double>& eta, double r) {
  const double p = r / (2.0 - r);
  double s = 0.0;
  for (double e : eta) s += std::pow(e, p);
  return std::pow(s, 1.0 / p);
}

}  // namespace

TEST_CASE("M_g on simple expansions") {
  const auto weights = WeightSequence::geometric(0.5);
  {
    CoefficientMap f = empty_map(2);
    f.add(MultiIndex{{1, 1}}, 1.0);
    const Matrix M = compute_Mg(f, weights);
    CHECK((M - Matrix::Identity(2, 2) / 0.25).cwiseAbs().maxCoeff() < 1e-12);
  }
  {
    CoefficientMap f = empty_map(3);
    f.constant = 2.5;
    CHECK(compute_Mg(f, weights).cwiseAbs().maxCoeff() == 0.0);
  }
  {
    CoefficientMap f = empty_map(3);
    f.add(unit(3, 0), 1.0);
    Matrix expect = Matrix::Zero(3, 3);
    expect(0, 0) = 2.0;  // 1 / c_1 = 1 / 0.5
    CHECK((compute_Mg(f, weights) - expect).cwiseAbs().maxCoeff() < 1e-12);
  }
  {
    // support violation: cutoff M=1 cannot hold a degree-2 coefficient
    CoefficientMap f = empty_map(2);
    f.add(MultiIndex{{1, 1}}, 1.0);
    CHECK_THROWS_AS(compute_Mg(f, WeightSequence::cutoff(1)), std::invalid_argument);
  }
}

TEST_CASE("M_f conjugates M_g by the stored rotation") {
  const auto weights = WeightSequence::geometric(0.5);
  CoefficientMap f = empty_map(3);
  f.add(unit(3, 0), 1.0);
  CHECK((compute_Mf(f, weights) - compute_Mg(f, weights)).cwiseAbs().maxCoeff() < 1e-12);

  Matrix P = Matrix::Zero(3, 3);  // cycle 0 -> 1 -> 2 -> 0
  P(1, 0) = P(2, 1) = P(0, 2) = 1.0;
  f.basis_rotation = P;
  const Matrix Mf = compute_Mf(f, weights);
  CHECK(Mf(1, 1) == doctest::Approx(2.0));
  CHECK(Mf.cwiseAbs().sum() == doctest::Approx(2.0));
  CHECK(Mf.trace() == doctest::Approx(compute_Mg(f, weights).trace()));
}

TEST_CASE("penalty values on the worked examples") {
  {
    CoefficientMap f = empty_map(2);
    f.add(unit(2, 0), 1.0);
    const auto w = WeightSequence::geometric(0.25);
    for (double r : {0.33, 1.0, 1.5}) CHECK(omega_var(f, w, r) == doctest::Approx(2.0));
    CHECK(omega_0(f, w) == doctest::Approx(2.0));
  }
  {
    CoefficientMap f = empty_map(2);
    f.constant = 1.0;
    const auto w = WeightSequence::geometric(0.5);
    CHECK(omega_var(f, w, 1.0) == 0.0);
    CHECK(omega_feat(f, w, 1.0) == 0.0);
    CHECK(omega_0(f, w) == 0.0);
  }
  {
    CoefficientMap f = empty_map(2);
    f.add(unit(2, 0), 1.0);
    f.add(unit(2, 1), 1.0);
    CHECK(omega_var(f, WeightSequence::cutoff(1), 1.0) == doctest::Approx(2.0));
  }
  {
    CoefficientMap f = empty_map(2);
    f.add(MultiIndex{{1, 1}}, 1.0);
    const auto w = WeightSequence::geometric(0.5);
    CHECK(omega_feat(f, w, 1.0) == doctest::Approx(4.0));  // 2 / rho
    CHECK(omega_feat(f, w, 1.0) == doctest::Approx(omega_var(f, w, 1.0)));
  }
  {
    // homogeneity of omega_0
    CoefficientMap f = empty_map(2);
    f.add(MultiIndex{{2, 1}}, -0.7);
    f.add(unit(2, 1), 0.4);
    const auto w = WeightSequence::geometric(0.6);
    CHECK(omega_0(f, w) * 3.0 ==
          doctest::Approx([&] {
            CoefficientMap g = empty_map(2);
            g.add(MultiIndex{{2, 1}}, -2.1);
            g.add(unit(2, 1), 1.2);
            return omega_0(g, w);
          }()));
  }
}

TEST_CASE("closed-form eta update") {
  {
    const auto eta = update_eta_var({4.0, 1.0}, 1.0);
    CHECK(eta[0] == doctest::Approx(2.0 / 3.0));
    CHECK(eta[1] == doctest::Approx(1.0 / 3.0));
  }
  {
    const auto eta = update_eta_var(std::vector<double>(5, 1.0), 0.33);
    for (double e : eta) CHECK(e == doctest::Approx(std::pow(5.0, -(2.0 - 0.33) / 0.33)));
  }
  {
    const auto eta = update_eta_var({1.0, 0.0}, 1.0);
    CHECK(eta[0] == doctest::Approx(1.0));
    CHECK(eta[1] == 0.0);
  }
  {
    const auto eta = update_eta_var({0.0, 0.0, 0.0}, 1.0);
    for (double e : eta) CHECK(e == doctest::Approx(1.0 / 3.0));
  }
}

TEST_CASE("variational identity and optimality") {
  Rng rng(31);
  for (int trial = 0; trial < 60; ++trial) {
    const int d = 2 + static_cast<int>(rng.uniform() * 5.0);
    const double r = trial % 2 == 0 ? 0.33 : 1.0;
    std::vector<double> u(static_cast<std::size_t>(d));
    for (auto& v : u) v = std::abs(rng.normal());
    const auto eta = update_eta_var(u, r);
    CHECK(eta_norm(eta, r) == doctest::Approx(1.0).epsilon(1e-10));
    double value = 0.0, norm_u = 0.0;
    for (std::size_t a = 0; a < u.size(); ++a) {
      value += u[a] / eta[a];
      norm_u += std::pow(u[a], r / 2.0);
    }
    norm_u = std::pow(norm_u, 2.0 / r);  // ||u||_{r/2}
    CHECK(value == doctest::Approx(norm_u).epsilon(1e-10));
    // any other feasible eta scores at least as high
    std::vector<double> v(u.size());
    for (auto& x : v) x = std::abs(rng.normal()) + 1e-3;
    const auto other = update_eta_var(v, r);
    double value_other = 0.0;
    for (std::size_t a = 0; a < u.size(); ++a) value_other += u[a] / other[a];
    CHECK(value_other >= value - 1e-10 * (1.0 + value));
  }
}

TEST_CASE("eigendecomposition update") {
  {
    const FeatureState s = update_lambda_feat(Vector{{4.0, 1.0}}.asDiagonal(), 1.0);
    const Matrix lambda = s.rotation * Vector{{s.eta[0], s.eta[1]}}.asDiagonal() * s.rotation.transpose();
    CHECK((lambda - Vector{{2.0 / 3.0, 1.0 / 3.0}}.asDiagonal().toDenseMatrix()).cwiseAbs().maxCoeff() < 1e-10);
  }
  {
    const FeatureState s = update_lambda_feat(Matrix::Identity(4, 4), 1.0);
    for (double e : s.eta) CHECK(e == doctest::Approx(0.25));
  }
  {
    Rng rng(8);
    const Matrix Q = sample_orthogonal(3, rng);
    const Matrix M = Q * Vector{{9.0, 1.0, 0.0}}.asDiagonal() * Q.transpose();
    const FeatureState s = update_lambda_feat(M, 1.0);
    CHECK(eta_norm(s.eta, 1.0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK((s.rotation.transpose() * s.rotation - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <
          1e-10);
    Vector eta_vec(3);
    for (int a = 0; a < 3; ++a) eta_vec[a] = s.eta[static_cast<std::size_t>(a)];
    const Matrix lambda = s.rotation * eta_vec.asDiagonal() * s.rotation.transpose();
    const Matrix expect = Q * Vector{{0.75, 0.25, 0.0}}.asDiagonal() * Q.transpose();
    CHECK((lambda - expect).cwiseAbs().maxCoeff() < 1e-9);
  }
  Matrix bad(2, 2);
  bad << 1.0, 0.5, 0.0, 1.0;
  CHECK_THROWS_AS(update_lambda_feat(bad, 1.0), std::invalid_argument);
}

TEST_CASE("dimension estimate and feature extraction") {
  CHECK(estimate_dimension({0.5, 0.3, 0.1, 0.1}, 1.0, 4) == 2);
  const auto uniform = FeatureState::initial(6, 0.33, Mode::feature);
  CHECK(estimate_dimension(uniform.eta, 0.33, 6) == 6);
  CHECK(estimate_dimension({1.0, 0.0, 0.0}, 1.0, 3) == 1);

  FeatureState state = FeatureState::initial(4, 1.0, Mode::variable);
  state.eta = {0.4, 0.05, 0.5, 0.05};
  const Matrix P = extract_features(state, 2);
  CHECK(P(2, 0) == 1.0);
  CHECK(P(0, 1) == 1.0);
  CHECK(P.cwiseAbs().sum() == 2.0);

  state.eta = {0.3, 0.3, 0.2, 0.2};  // ties resolve to lower indices
  const Matrix T = extract_features(state, 2);
  CHECK(T(0, 0) == 1.0);
  CHECK(T(1, 1) == 1.0);
}

TEST_CASE("conjugation, diagonal reduction and relaxation on quadratics") {
  Rng rng(17);
  const auto weights = WeightSequence::geometric(0.5);
  for (int trial = 0; trial < 20; ++trial) {
    const Quadratic q = random_quadratic(3, rng);
    const CoefficientMap f = q.to_hermite();
    const Matrix M = compute_Mg(f, weights);

    Eigen::SelfAdjointEigenSolver<Matrix> eig(M);
    CHECK(eig.eigenvalues().minCoeff() > -1e-10);

    const Matrix R = sample_orthogonal(3, rng);
    const CoefficientMap fR = q.compose_rotation(R).to_hermite();
    const Matrix MR = compute_Mg(fR, weights);
    CHECK((MR - R.transpose() * M * R).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(omega_feat(fR, weights, 1.0) == doctest::Approx(omega_feat(f, weights, 1.0)).epsilon(1e-8));

    // in the eigenbasis of M the penalty matrix is diagonal
    const Matrix U = eig.eigenvectors();
    const CoefficientMap fU = q.compose_rotation(U).to_hermite();
    CHECK(omega_var(fU, weights, 1.0) ==
          doctest::Approx(omega_feat(f, weights, 1.0)).epsilon(1e-8));

    for (int rot = 0; rot < 5; ++rot) {
      const Matrix S = sample_orthogonal(3, rng);
      const CoefficientMap fS = q.compose_rotation(S).to_hermite();
      CHECK(omega_feat(f, weights, 1.0) <= omega_var(fS, weights, 1.0) + 1e-8);
    }
  }
}

TEST_CASE("variational penalty handles dead directions") {
  const auto weights = WeightSequence::geometric(0.5);
  CoefficientMap f = empty_map(2);
  f.add(unit(2, 0), 1.0);
  CHECK(variational_penalty(f, weights, {0.5, 0.5}) == doctest::Approx(4.0));
  CHECK(std::isinf(variational_penalty(f, weights, {0.0, 1.0})));
  CHECK(variational_penalty(f, weights, {1.0, 0.0}) == doctest::Approx(2.0));
}
