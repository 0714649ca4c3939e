#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "regfeal/datagen.hpp"
#include "regfeal/hermite.hpp"
#include "regfeal/sampling.hpp"

using namespace regfeal;

namespace {

double closed_form(int k, double x) {
  switch (k) {
    case 0: return 1.0;
    case 1: return x;
    case 2: return (x * x - 1.0) / std::sqrt(2.0);
    case 3: return (x * x * x - 3.0 * x) / std::sqrt(6.0);
    case 4: return (std::pow(x, 4) - 6.0 * x * x + 3.0) / std::sqrt(24.0);
    case 5: return (std::pow(x, 5) - 10.0 * x * x * x + 15.0 * x) / std::sqrt(120.0);
    default: throw std::logic_error("no closed form");
  }
}

void enumerate_compositions(int d, int k, std::vector<int>& prefix,
                            std::vector<MultiIndex>& out) {
  if (d == 1) {
    prefix.push_back(k);
    out.push_back(MultiIndex{prefix});
    prefix.pop_back();
    return;
  }
  for (int v = 0; v <= k; ++v) {
    prefix.push_back(v);
    enumerate_compositions(d - 1, k - v, prefix, out);
    prefix.pop_back();
  }
}

std::vector<MultiIndex> compositions(int d, int k) {
  std::vector<MultiIndex> out;
  std::vector<int> prefix;
  enumerate_compositions(d, k, prefix, out);
  return out;
}

}  // namespace

TEST_CASE("pointwise values match the closed forms") {
  CHECK(hermite_1d(0, 1.7) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(hermite_1d(2, 1.0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(hermite_1d(3, 2.0) == doctest::Approx(2.0 / std::sqrt(6.0)).epsilon(1e-14));
  for (int k = 0; k <= 5; ++k) {
    for (double x = -3.0; x <= 3.0; x += 0.125) {
      CHECK(hermite_1d(k, x) == doctest::Approx(closed_form(k, x)).epsilon(1e-12));
    }
  }
}

TEST_CASE("batched evaluation agrees with single evaluation") {
  const auto all = hermite_1d_all(3, 0.0);
  REQUIRE(all.size() == 4);
  CHECK(all[0] == doctest::Approx(1.0));
  CHECK(all[1] == doctest::Approx(0.0));
  CHECK(all[2] == doctest::Approx(-1.0 / std::sqrt(2.0)));
  CHECK(all[3] == doctest::Approx(0.0));
  const auto pair = hermite_1d_all(1, 5.0);
  CHECK(pair[0] == 1.0);
  CHECK(pair[1] == 5.0);
  CHECK(hermite_1d_all(0, -3.0) == std::vector<double>{1.0});
  for (double x : {-2.5, -0.3, 0.7, 1.9}) {
    const auto batch = hermite_1d_all(12, x);
    for (int k = 0; k <= 12; ++k)
      CHECK(batch[static_cast<std::size_t>(k)] == doctest::Approx(hermite_1d(k, x)).epsilon(1e-13));
  }
}

TEST_CASE("derivative identity h_k' = sqrt(k) h_{k-1}") {
  const double e = 1e-5;
  for (int k = 1; k <= 8; ++k) {
    for (double x = -3.0; x <= 3.0; x += 0.25) {
      const double fd = (hermite_1d(k, x + e) - hermite_1d(k, x - e)) / (2.0 * e);
      CHECK(fd == doctest::Approx(std::sqrt(static_cast<double>(k)) * hermite_1d(k - 1, x))
                      .epsilon(1e-6));
    }
  }
}

TEST_CASE("growth bound |h_k(x)| <= exp(x^2/4)") {
  for (int k = 0; k <= 30; ++k) {
    for (double x = -4.0; x <= 4.0; x += 0.01) {
      CHECK(std::abs(hermite_1d(k, x)) <= std::exp(x * x / 4.0) * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("Monte-Carlo orthonormality under the standard normal") {
  Rng rng(7);
  const int n = 1000000;
  double sums[6][6] = {}, sq[6][6] = {};
  for (int i = 0; i < n; ++i) {
    const auto h = hermite_1d_all(5, rng.normal());
    for (int j = 0; j <= 5; ++j)
      for (int k = j; k <= 5; ++k) {
        const double v = h[static_cast<std::size_t>(j)] * h[static_cast<std::size_t>(k)];
        sums[j][k] += v;
        sq[j][k] += v * v;
      }
  }
  // high-degree products have heavy tails, so the tolerance tracks the empirical SE
  for (int j = 0; j <= 5; ++j)
    for (int k = j; k <= 5; ++k) {
      const double mean = sums[j][k] / n;
      const double se = std::sqrt((sq[j][k] / n - mean * mean) / n);
      CHECK(std::abs(mean - (j == k ? 1.0 : 0.0)) <= std::max(0.02, 4.0 * se));
    }
}

TEST_CASE("multivariate values and dimension checks") {
  CHECK(hermite_multi(MultiIndex{{0, 0, 0}}, Vector{{0.3, -1.0, 7.0}}) == doctest::Approx(1.0));
  CHECK(hermite_multi(MultiIndex{{1, 2}}, Vector{{2.0, 1.0}}) == doctest::Approx(0.0));
  CHECK(hermite_multi(MultiIndex{{1, 1}}, Vector{{3.0, -1.0}}) == doctest::Approx(-3.0));
  CHECK_THROWS_AS(hermite_multi(MultiIndex{{1, 1}}, Vector{{3.0}}), std::invalid_argument);
}

TEST_CASE("degree-k kernels are rotation invariant") {
  Rng rng(11);
  for (int d = 2; d <= 4; ++d) {
    Rng sub = rng.substream(static_cast<std::uint64_t>(d));
    const Matrix R = sample_orthogonal(d, sub);
    Vector x(d), y(d);
    for (int a = 0; a < d; ++a) {
      x[a] = sub.normal();
      y[a] = sub.normal();
    }
    const Vector Rx = R * x, Ry = R * y;
    for (int k = 1; k <= 5; ++k) {
      double lhs = 0.0, rhs = 0.0;
      for (const auto& alpha : compositions(d, k)) {
        lhs += hermite_multi(alpha, x) * hermite_multi(alpha, y);
        rhs += hermite_multi(alpha, Rx) * hermite_multi(alpha, Ry);
      }
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));
    }
  }
}

TEST_CASE("design matrix entries and validation") {
  const Matrix I2 = Matrix::Identity(2, 2);
  Matrix X(1, 2);
  X << 2.0, 0.5;
  const std::vector<WeightedSample> one = {{MultiIndex{{1, 0}}, 1.0}};
  CHECK(build_design(one, I2, X)(0, 0) == doctest::Approx(2.0));
  const std::vector<WeightedSample> four = {{MultiIndex{{1, 0}}, 4.0}};
  CHECK(build_design(four, I2, X)(0, 0) == doctest::Approx(4.0));

  Matrix bad(2, 2);
  bad << 1.0, 1.0, 0.0, 1.0;
  CHECK_THROWS_AS(build_design(one, bad, X), std::invalid_argument);
  const std::vector<WeightedSample> zero_tuple = {{MultiIndex{{0, 0}}, 1.0}};
  CHECK_THROWS(build_design(zero_tuple, I2, X));
}

TEST_CASE("design columns match direct evaluation under a rotation") {
  Rng rng(23);
  const int d = 3, n = 7;
  const Matrix R = sample_orthogonal(d, rng);
  Matrix X(n, d);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < d; ++a) X(i, a) = rng.normal();
  const std::vector<WeightedSample> samples = {{MultiIndex{{1, 0, 2}}, 0.7},
                                               {MultiIndex{{0, 3, 1}}, 2.0},
                                               {MultiIndex{{2, 2, 0}}, 0.05}};
  const Matrix Phi = build_design(samples, R, X);
  REQUIRE(Phi.rows() == n);
  REQUIRE(Phi.cols() == 3);
  for (int i = 0; i < n; ++i) {
    const Vector z = R.transpose() * X.row(i).transpose();
    for (int j = 0; j < 3; ++j) {
      const auto& s = samples[static_cast<std::size_t>(j)];
      CHECK(Phi(i, j) ==
            doctest::Approx(std::sqrt(s.weight) * hermite_multi(s.alpha, z)).epsilon(1e-12));
    }
  }
}
