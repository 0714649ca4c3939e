#include "regfeal/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "regfeal/metrics.hpp"

namespace regfeal {

double PenaltyConfig::resolved_lambda(int d) const {
  if (lambda >= 0.0) return lambda;
  return 1e-8 / std::pow(static_cast<double>(d), (2.0 - r) / r);
}

std::pair<Vector, double> solve_feature_view(const Matrix& Phi, const Vector& Y,
                                             double ridge_scale) {
  if (!Phi.allFinite() || !Y.allFinite())
    throw std::invalid_argument("solve_feature_view: non-finite input");
  const auto n = Phi.rows();
  if (Phi.cols() == 0) {
    return {Vector(), Y.size() > 0 ? Y.mean() : 0.0};
  }
  const Vector col_means = Phi.colwise().mean();
  const Matrix Phi_c = Phi.rowwise() - col_means.transpose();
  const double y_mean = Y.mean();
  const Vector Y_c = Y.array() - y_mean;
  Matrix A = Phi_c.transpose() * Phi_c;
  A.diagonal().array() += static_cast<double>(n) * ridge_scale;
  const Vector theta = A.ldlt().solve(Phi_c.transpose() * Y_c);
  const double theta0 = y_mean - col_means.dot(theta);
  return {theta, theta0};
}

std::pair<Vector, double> solve_kernel_view(const Matrix& K, const Vector& Y) {
  const auto n = K.rows();
  if (K.cols() != n || Y.size() != n)
    throw std::invalid_argument("solve_kernel_view: shape mismatch");
  const double scale = std::max(1.0, K.cwiseAbs().maxCoeff());
  if ((K - K.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw std::invalid_argument("solve_kernel_view: K is not symmetric");
  // Stationarity is implied by (K + nI) delta + delta0 1 = Y with 1^T delta = 0;
  // solved as a bordered symmetric system.
  Matrix A(n + 1, n + 1);
  A.topLeftCorner(n, n) = 0.5 * (K + K.transpose());
  A.topLeftCorner(n, n).diagonal().array() += static_cast<double>(n);
  A.topRightCorner(n, 1).setOnes();
  A.bottomLeftCorner(1, n).setOnes();
  A(n, n) = 0.0;
  Vector rhs(n + 1);
  rhs.head(n) = Y;
  rhs[n] = 0.0;
  const Vector sol = A.partialPivLu().solve(rhs);
  return {sol.head(n), sol[n]};
}

namespace {

// Like r2_score but defined for constant targets: a near-zero residual counts
// as a perfect fit instead of rejecting the input.
double train_r2(const Vector& y, const Vector& y_hat) {
  const double mean = y.mean();
  const double ss_tot = (y.array() - mean).square().sum();
  const double ss_res = (y - y_hat).array().square().sum();
  if (ss_tot <= 1e-300) return ss_res <= 1e-12 * static_cast<double>(y.size()) ? 1.0 : 0.0;
  return 1.0 - ss_res / ss_tot;
}

GroupSampleResult draw_samples(int d, const std::vector<double>& eta,
                               const PenaltyConfig& config, double lambda, Rng& rng) {
  if (config.weights.is_geometric())
    return sample_group(d, eta, config.weights, lambda, config.mu, config.r, config.m,
                        config.k_max, rng);
  return sample_bounded_weighted(d, eta, config.weights.cutoff_degree(), lambda, config.mu,
                                 config.m, rng);
}

}  // namespace

CoefficientMap coefficient_map(const FittedModel& model) {
  CoefficientMap f;
  f.basis_rotation = model.state.rotation;
  f.constant = model.theta0;
  for (std::size_t j = 0; j < model.samples.size(); ++j) {
    f.add(model.samples[j].alpha,
          std::sqrt(model.samples[j].weight) * model.theta[static_cast<Eigen::Index>(j)]);
  }
  return f;
}

FittedModel fit(const Matrix& X, const Vector& Y, const PenaltyConfig& config, Mode mode) {
  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();
  const auto n = X.rows();
  const int d = static_cast<int>(X.cols());
  if (n < 2) throw std::invalid_argument("fit: need at least two observations");
  if (Y.size() != n) throw std::invalid_argument("fit: X and Y row counts differ");
  if (!(config.r > 0.0 && config.r < 2.0)) throw std::invalid_argument("fit: r in (0,2) required");
  if (config.n_iter < 1 || config.m < 1) throw std::invalid_argument("fit: bad config");
  const double lambda = config.resolved_lambda(d);

  FittedModel model;
  model.config = config;
  model.config.lambda = lambda;
  model.state = FeatureState::initial(d, config.r, mode);
  model.report.seed = config.seed;
  Rng master(config.seed);

  for (int iter = 0; iter < config.n_iter; ++iter) {
    const auto t_iter = clock::now();
    if (iter > 0) {
      const CoefficientMap f = coefficient_map(model);
      const Matrix Mg = compute_Mg(f, config.weights);
      if (mode == Mode::variable || config.freeze_rotation) {
        std::vector<double> u(static_cast<std::size_t>(d));
        for (int a = 0; a < d; ++a) u[static_cast<std::size_t>(a)] = std::max(0.0, Mg(a, a));
        model.state.eta = update_eta_var(u, config.r);
      } else {
        const Matrix Mf = model.state.rotation * Mg * model.state.rotation.transpose();
        FeatureState next = update_lambda_feat(Mf, config.r);
        next.mode = Mode::feature;
        model.state = next;
      }
    }

    Rng stream = master.substream(static_cast<std::uint64_t>(iter));
    GroupSampleResult drawn = draw_samples(d, model.state.eta, config, lambda, stream);
    if (drawn.samples.empty())
      throw std::runtime_error("fit: sampler returned no usable features");
    model.samples = std::move(drawn.samples);
    const int m_prime = static_cast<int>(model.samples.size());

    const Matrix Phi = build_design(model.samples, model.state.rotation, X);
    if (n > m_prime) {
      auto [theta, theta0] = solve_feature_view(Phi, Y);
      model.theta = theta;
      model.theta0 = theta0;
      model.delta.reset();
      model.view = SolveView::feature;
    } else {
      const Matrix K = Phi * Phi.transpose();
      auto [delta, delta0] = solve_kernel_view(K, Y);
      model.theta = Phi.transpose() * delta;
      model.theta0 = delta0;
      model.delta = delta;
      model.view = SolveView::kernel;
    }

    IterationRecord rec;
    rec.iteration = iter;
    rec.train_r2 = train_r2(Y, Phi * model.theta + Vector::Constant(n, model.theta0));
    rec.eta = model.state.eta;
    rec.m_prime = m_prime;
    for (const auto& s : model.samples) ++rec.degree_histogram[s.alpha.degree()];
    rec.sampler_normaliser = drawn.normaliser;
    rec.sampler_tail_mass = drawn.tail_mass_estimate;
    rec.view = model.view == SolveView::feature ? "feature" : "kernel";
    rec.wall_seconds = std::chrono::duration<double>(clock::now() - t_iter).count();
    model.report.iterations.push_back(std::move(rec));
  }

  model.report.s_hat = estimate_dimension(model.state.eta, config.r, d);
  model.report.P_hat = extract_features(model.state, model.report.s_hat);
  model.report.total_seconds = std::chrono::duration<double>(clock::now() - t_start).count();
  return model;
}

Vector predict(const FittedModel& model, const Matrix& X_new) {
  if (X_new.cols() != model.state.rotation.rows())
    throw std::invalid_argument("predict: column count does not match the fitted dimension");
  if (model.samples.empty() || model.theta.size() == 0)
    return Vector::Constant(X_new.rows(), model.theta0);
  const Matrix Phi = build_design(model.samples, model.state.rotation, X_new);
  return Phi * model.theta + Vector::Constant(X_new.rows(), model.theta0);
}

namespace {

// Seeded fold assignment: a permutation split into `folds` contiguous blocks.
std::vector<int> fold_assignment(Eigen::Index n, int folds, Rng& rng) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = perm.size(); i > 1; --i)
    std::swap(perm[i - 1], perm[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);
  std::vector<int> assign(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < perm.size(); ++i)
    assign[static_cast<std::size_t>(perm[i])] = static_cast<int>(i % static_cast<std::size_t>(folds));
  return assign;
}

double tie_break_weight_size(const WeightSequence& w) {
  return w.is_geometric() ? w.rho() : static_cast<double>(w.cutoff_degree());
}

}  // namespace

CvResult cross_validate(const Matrix& X, const Vector& Y, const std::vector<GridPoint>& grid,
                        const PenaltyConfig& config_template, int folds, Mode mode) {
  if (grid.empty()) throw std::invalid_argument("cross_validate: empty grid");
  if (folds < 2) throw std::invalid_argument("cross_validate: folds >= 2 required");
  const auto n = X.rows();
  Rng fold_rng = Rng(config_template.seed).substream(0xf01d);
  const std::vector<int> assign = fold_assignment(n, folds, fold_rng);

  CvResult result;
  result.table.reserve(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::vector<double> scores;
    scores.reserve(static_cast<std::size_t>(folds));
    for (int fold = 0; fold < folds; ++fold) {
      Eigen::Index n_val = 0;
      for (int a : assign) n_val += (a == fold);
      const Eigen::Index n_train = n - n_val;
      Matrix X_train(n_train, X.cols()), X_val(n_val, X.cols());
      Vector Y_train(n_train), Y_val(n_val);
      Eigen::Index it = 0, iv = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (assign[static_cast<std::size_t>(i)] == fold) {
          X_val.row(iv) = X.row(i);
          Y_val[iv++] = Y[i];
        } else {
          X_train.row(it) = X.row(i);
          Y_train[it++] = Y[i];
        }
      }
      PenaltyConfig config = config_template;
      config.weights = grid[g].weights;
      config.mu = grid[g].mu;
      config.seed = Rng(config_template.seed).substream(1000 + g * 100 + static_cast<std::size_t>(fold)).seed();
      const FittedModel model = fit(X_train, Y_train, config, mode);
      scores.push_back(r2_score(Y_val, predict(model, X_val)));
    }
    const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) /
                        static_cast<double>(scores.size());
    double var = 0.0;
    for (double s : scores) var += (s - mean) * (s - mean);
    var /= static_cast<double>(scores.size());
    result.table.push_back({grid[g], mean, std::sqrt(var)});
  }

  std::stable_sort(result.table.begin(), result.table.end(), [](const CvRow& a, const CvRow& b) {
    if (a.mean_r2 != b.mean_r2) return a.mean_r2 > b.mean_r2;
    if (a.point.mu != b.point.mu) return a.point.mu > b.point.mu;
    return tie_break_weight_size(a.point.weights) > tie_break_weight_size(b.point.weights);
  });
  result.best = result.table.front().point;
  return result;
}

FittedModel kernel_ridge_baseline(const Matrix& X, const Vector& Y,
                                  const WeightSequence& weights,
                                  const std::vector<double>& lambda_grid, int m,
                                  std::uint64_t seed) {
  if (lambda_grid.empty())
    throw std::invalid_argument("kernel_ridge_baseline: empty lambda grid");
  const auto n = X.rows();
  const int d = static_cast<int>(X.cols());
  Rng master(seed);
  Rng sample_rng = master.substream(0);
  GroupSampleResult drawn = sample_plain_kernel(d, weights, m, 40, sample_rng);

  FittedModel model;
  model.state = FeatureState::initial(d, 1.0, Mode::variable);
  model.samples = std::move(drawn.samples);
  model.config.weights = weights;
  model.config.m = m;
  model.config.n_iter = 1;
  model.config.seed = seed;

  const Matrix Phi = build_design(model.samples, model.state.rotation, X);

  double best_lambda = lambda_grid.front();
  if (lambda_grid.size() > 1) {
    const int folds = 5;
    Rng fold_rng = master.substream(0xf01d);
    const std::vector<int> assign = fold_assignment(n, folds, fold_rng);
    double best_score = -std::numeric_limits<double>::infinity();
    for (double lam : lambda_grid) {
      double total = 0.0;
      for (int fold = 0; fold < folds; ++fold) {
        Eigen::Index n_val = 0;
        for (int a : assign) n_val += (a == fold);
        Matrix Phi_train(n - n_val, Phi.cols()), Phi_val(n_val, Phi.cols());
        Vector Y_train(n - n_val), Y_val(n_val);
        Eigen::Index it = 0, iv = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
          if (assign[static_cast<std::size_t>(i)] == fold) {
            Phi_val.row(iv) = Phi.row(i);
            Y_val[iv++] = Y[i];
          } else {
            Phi_train.row(it) = Phi.row(i);
            Y_train[it++] = Y[i];
          }
        }
        auto [theta, theta0] = solve_feature_view(Phi_train, Y_train, lam);
        total += train_r2(Y_val, Phi_val * theta + Vector::Constant(n_val, theta0));
      }
      const double mean = total / folds;
      if (mean > best_score + 1e-15 || (std::abs(mean - best_score) <= 1e-15 && lam > best_lambda)) {
        best_score = mean;
        best_lambda = lam;
      }
    }
  }

  auto [theta, theta0] = solve_feature_view(Phi, Y, best_lambda);
  model.theta = theta;
  model.theta0 = theta0;
  model.view = SolveView::feature;
  model.config.lambda = best_lambda;

  IterationRecord rec;
  rec.iteration = 0;
  rec.train_r2 = train_r2(Y, Phi * theta + Vector::Constant(n, theta0));
  rec.eta = model.state.eta;
  rec.m_prime = static_cast<int>(model.samples.size());
  for (const auto& s : model.samples) ++rec.degree_histogram[s.alpha.degree()];
  rec.view = "feature";
  model.report.iterations.push_back(std::move(rec));
  model.report.seed = seed;
  return model;
}

}  // namespace regfeal
