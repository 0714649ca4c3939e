#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "regfeal/datagen.hpp"
#include "regfeal/io.hpp"
#include "regfeal/metrics.hpp"
#include "regfeal/solver.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace regfeal;

namespace {

// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  int threads = 0;  // 0 = unset, falls back to REGFEAL_THREADS then 1
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON configuration file");
  cmd->add_option("--seed", args.seed, "Master seed (overrides config seeds)");
  cmd->add_option("--out", args.out_dir, "Output directory");
  cmd->add_option("--threads", args.threads, "Worker threads (default REGFEAL_THREADS or 1)");
  cmd->add_option("--set", args.overrides, "Override a config key, e.g. --set penalty.mu=0.1")
      ->take_all();
}

int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (flag_value < 0) throw UsageError("--threads must be positive");
  if (const char* env = std::getenv("REGFEAL_THREADS")) {
    const int v = std::atoi(env);
    if (v < 1) throw UsageError("REGFEAL_THREADS must be a positive integer");
    return v;
  }
  return 1;
}

// Dotted-path override; the value is parsed as JSON when possible, else kept
// as a string.
void apply_override(json& config, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("--set expects key=value: " + kv);
  const std::string path = kv.substr(0, eq);
  const std::string raw = kv.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  json* node = &config;
  std::stringstream ss(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) {
    if (part.empty()) throw UsageError("--set has an empty path segment: " + kv);
    parts.push_back(part);
  }
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) node = &(*node)[parts[i]];
  (*node)[parts.back()] = std::move(value);
}

json load_config(const CommonArgs& args, json defaults) {
  if (!args.config_path.empty()) {
    json from_file;
    try {
      from_file = json::parse(read_file(args.config_path));
    } catch (const json::exception& e) {
      throw DataError("config parse failure: " + std::string(e.what()));
    }
    defaults.merge_patch(from_file);
  }
  for (const auto& kv : args.overrides) apply_override(defaults, kv);
  if (args.seed) {
    if (defaults.contains("dataset")) defaults["dataset"]["seed"] = *args.seed;
    if (defaults.contains("penalty")) defaults["penalty"]["seed"] = *args.seed;
    defaults["seed"] = *args.seed;
  }
  return defaults;
}

json default_dataset() {
  return {{"name", "sinus"}, {"d", 10}, {"s", 2},     {"n", 1000},
          {"n_test", 5000},  {"sigma", 0.0}, {"mode", "feature"}, {"seed", 0}};
}

json default_penalty() {
  return {{"weights", {{"kind", "geometric"}, {"rho", 0.5}}},
          {"r", 0.33},
          {"lambda", -1.0},
          {"mu", 0.1},
          {"m", 1000},
          {"n_iter", 5},
          {"k_max", 40},
          {"seed", 0}};
}

// CV grid numerators; mu entries are divided by d^{(2-r)/r} when scale_mu_by_dim.
json default_cv(bool wide) {
  json cv = {{"folds", 5}, {"scale_mu_by_dim", true}, {"subsample", 0}, {"n_iter", 0}};
  if (wide) {
    cv["rho"] = {0.01, 0.05, 0.1, 0.2, 0.4, 0.6, 0.8};
    cv["mu"] = {1000.0, 100.0, 10.0, 1.0, 0.1, 0.01, 0.001};
  } else {
    cv["rho"] = {0.2, 0.4, 0.6, 0.8, 1.0};
    cv["mu"] = {100.0, 1.0, 0.1, 0.01, 0.001};
  }
  return cv;
}

SyntheticSpec parse_dataset(const json& j) {
  SyntheticSpec spec;
  try {
    spec.dataset = dataset_from_name(j.at("name").get<std::string>());
    spec.d = j.at("d").get<int>();
    spec.s = j.at("s").get<int>();
    spec.n = j.at("n").get<int>();
    spec.n_test = j.at("n_test").get<int>();
    spec.sigma = j.at("sigma").get<double>();
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "variable")
      spec.mode = Mode::variable;
    else if (mode == "feature")
      spec.mode = Mode::feature;
    else
      throw DataError("dataset.mode must be variable or feature");
    spec.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw DataError("bad dataset config: " + std::string(e.what()));
  }
  return spec;
}

WeightSequence parse_weights(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "geometric") return WeightSequence::geometric(j.at("rho").get<double>());
  if (kind == "cutoff") return WeightSequence::cutoff(j.at("M").get<int>());
  throw DataError("weights.kind must be geometric or cutoff");
}

json weights_to_json(const WeightSequence& w) {
  if (w.is_geometric()) return {{"kind", "geometric"}, {"rho", w.rho()}};
  return {{"kind", "cutoff"}, {"M", w.cutoff_degree()}};
}

PenaltyConfig parse_penalty(const json& j) {
  PenaltyConfig config;
  try {
    config.weights = parse_weights(j.at("weights"));
    config.r = j.at("r").get<double>();
    config.lambda = j.at("lambda").get<double>();
    config.mu = j.at("mu").get<double>();
    config.m = j.at("m").get<int>();
    config.n_iter = j.at("n_iter").get<int>();
    config.k_max = j.at("k_max").get<int>();
    config.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw DataError("bad penalty config: " + std::string(e.what()));
  }
  return config;
}

json penalty_to_json(const PenaltyConfig& c) {
  return {{"weights", weights_to_json(c.weights)},
          {"r", c.r},
          {"lambda", c.lambda},
          {"mu", c.mu},
          {"m", c.m},
          {"n_iter", c.n_iter},
          {"k_max", c.k_max},
          {"seed", c.seed}};
}

std::vector<GridPoint> build_grid(const json& cv, double r, int d) {
  const double scale =
      cv.value("scale_mu_by_dim", true) ? std::pow(static_cast<double>(d), (2.0 - r) / r) : 1.0;
  std::vector<GridPoint> grid;
  std::vector<WeightSequence> weight_axis;
  if (cv.contains("rho"))
    for (double rho : cv.at("rho")) weight_axis.push_back(WeightSequence::geometric(rho));
  if (cv.contains("M"))
    for (int M : cv.at("M")) weight_axis.push_back(WeightSequence::cutoff(M));
  if (weight_axis.empty() || !cv.contains("mu")) throw DataError("cv grid is empty");
  for (const auto& w : weight_axis)
    for (double mu : cv.at("mu")) grid.push_back({w, mu / scale});
  return grid;
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory: " + dir);
}

void write_config(const std::string& dir, const json& resolved, int threads) {
  json out = resolved;
  out["threads"] = threads;
  write_file(dir + "/config.json", out.dump(2) + "\n");
}

void write_table(const std::string& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<double>>& rows) {
  std::string text;
  for (std::size_t c = 0; c < header.size(); ++c)
    text += header[c] + (c + 1 < header.size() ? "," : "\n");
  for (const auto& row : rows) {
    if (row.size() != header.size()) throw std::logic_error("table row width mismatch");
    for (std::size_t c = 0; c < row.size(); ++c)
      text += format_double(row[c]) + (c + 1 < row.size() ? "," : "\n");
  }
  write_file(path, text);
}

json model_to_json(const FittedModel& model) {
  json samples = json::array();
  for (const auto& s : model.samples)
    samples.push_back({{"alpha", s.alpha.entries}, {"weight", s.weight}});
  json out = {{"view", model.view == SolveView::feature ? "feature" : "kernel"},
              {"theta", vector_to_json(model.theta)},
              {"theta0", model.theta0},
              {"state",
               {{"rotation", matrix_to_json(model.state.rotation)},
                {"eta", model.state.eta},
                {"r", model.state.r},
                {"mode", model.state.mode == Mode::variable ? "variable" : "feature"}}},
              {"samples", std::move(samples)},
              {"config", penalty_to_json(model.config)},
              {"s_hat", model.report.s_hat},
              {"P_hat", matrix_to_json(model.report.P_hat)}};
  if (model.delta) out["delta"] = vector_to_json(*model.delta);
  return out;
}

FittedModel model_from_json(const json& j) {
  FittedModel model;
  try {
    model.view = j.at("view").get<std::string>() == "kernel" ? SolveView::kernel
                                                             : SolveView::feature;
    model.theta = vector_from_json(j.at("theta"));
    model.theta0 = j.at("theta0").get<double>();
    model.state.rotation = matrix_from_json(j.at("state").at("rotation"));
    model.state.eta = j.at("state").at("eta").get<std::vector<double>>();
    model.state.r = j.at("state").at("r").get<double>();
    model.state.mode = j.at("state").at("mode").get<std::string>() == "variable"
                           ? Mode::variable
                           : Mode::feature;
    for (const auto& s : j.at("samples"))
      model.samples.push_back(
          {MultiIndex{s.at("alpha").get<std::vector<int>>()}, s.at("weight").get<double>()});
    model.config = parse_penalty(j.at("config"));
    model.report.s_hat = j.at("s_hat").get<int>();
    model.report.P_hat = matrix_from_json(j.at("P_hat"));
    if (j.contains("delta")) model.delta = vector_from_json(j.at("delta"));
  } catch (const json::exception& e) {
    throw DataError("bad model file: " + std::string(e.what()));
  }
  return model;
}

void load_dataset_dir(const std::string& dir, Matrix& X, Vector& Y, Matrix& X_test,
                      Vector& Y_test, json& metadata) {
  read_csv(dir + "/train.csv", X, Y);
  read_csv(dir + "/test.csv", X_test, Y_test);
  try {
    metadata = json::parse(read_file(dir + "/metadata.json"));
  } catch (const json::exception& e) {
    throw DataError("metadata parse failure: " + std::string(e.what()));
  }
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// sigma_exp / sqrt(replicates) error bar.
double stderr_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double var = 0.0;
  for (double x : v) var += (x - m) * (x - m);
  var /= static_cast<double>(v.size());
  return std::sqrt(var / static_cast<double>(v.size()));
}

// ---- subcommands ----

int cmd_gen(const CommonArgs& args) {
  const int threads = resolve_threads(args.threads);
  json config = load_config(args, json{{"dataset", default_dataset()}});
  const SyntheticSpec spec = parse_dataset(config.at("dataset"));
  const GeneratedData data = make_dataset(spec);
  ensure_out_dir(args.out_dir);
  write_csv(args.out_dir + "/train.csv", data.X, data.Y);
  write_csv(args.out_dir + "/test.csv", data.X_test, data.Y_test);
  json metadata = {{"dataset", config.at("dataset")},
                   {"P", matrix_to_json(data.P)},
                   {"noise_sigma", data.noise_sigma}};
  write_file(args.out_dir + "/metadata.json", metadata.dump(2) + "\n");
  write_config(args.out_dir, config, threads);
  std::cout << "wrote " << data.X.rows() << " train and " << data.X_test.rows()
            << " test rows to " << args.out_dir << "\n";
  return 0;
}

int cmd_fit(const CommonArgs& args) {
  const int threads = resolve_threads(args.threads);
  json config = load_config(
      args, json{{"data", "out"}, {"mode", "feature"}, {"penalty", default_penalty()}});
  const std::string data_dir = config.at("data").get<std::string>();
  Matrix X, X_test;
  Vector Y, Y_test;
  json metadata;
  load_dataset_dir(data_dir, X, Y, X_test, Y_test, metadata);
  const PenaltyConfig penalty = parse_penalty(config.at("penalty"));
  const Mode mode =
      config.at("mode").get<std::string>() == "variable" ? Mode::variable : Mode::feature;

  const FittedModel model = fit(X, Y, penalty, mode);

  ensure_out_dir(args.out_dir);
  write_file(args.out_dir + "/model.json", model_to_json(model).dump(2) + "\n");
  write_file(args.out_dir + "/report.json", report_to_json(model.report).dump(2) + "\n");
  // Learned-feature export: rows (P_hat^T x_i, y_i) for downstream regressors.
  const Matrix Z = X * model.report.P_hat;
  {
    std::string text;
    for (Eigen::Index c = 0; c < Z.cols(); ++c) text += "z_" + std::to_string(c + 1) + ",";
    text += "y\n";
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
      for (Eigen::Index c = 0; c < Z.cols(); ++c) text += format_double(Z(i, c)) + ",";
      text += format_double(Y[i]) + "\n";
    }
    write_file(args.out_dir + "/projected.csv", text);
  }
  write_config(args.out_dir, config, threads);
  std::cout << "fit: s_hat=" << model.report.s_hat
            << " train_r2=" << model.report.iterations.back().train_r2
            << " test_r2=" << r2_score(Y_test, predict(model, X_test)) << "\n";
  return 0;
}

int cmd_cv(const CommonArgs& args) {
  const int threads = resolve_threads(args.threads);
  json config = load_config(args, json{{"data", "out"},
                                       {"mode", "feature"},
                                       {"penalty", default_penalty()},
                                       {"cv", default_cv(true)}});
  const std::string data_dir = config.at("data").get<std::string>();
  Matrix X, X_test;
  Vector Y, Y_test;
  json metadata;
  load_dataset_dir(data_dir, X, Y, X_test, Y_test, metadata);
  PenaltyConfig penalty = parse_penalty(config.at("penalty"));
  const Mode mode =
      config.at("mode").get<std::string>() == "variable" ? Mode::variable : Mode::feature;
  const json& cv = config.at("cv");
  const int folds = cv.at("folds").get<int>();
  if (cv.value("n_iter", 0) > 0) penalty.n_iter = cv.at("n_iter").get<int>();
  const int subsample = cv.value("subsample", 0);
  Matrix X_cv = X;
  Vector Y_cv = Y;
  if (subsample > 0 && subsample < X.rows()) {
    X_cv = X.topRows(subsample);
    Y_cv = Y.head(subsample);
  }
  const std::vector<GridPoint> grid = build_grid(cv, penalty.r, static_cast<int>(X.cols()));
  const CvResult result = cross_validate(X_cv, Y_cv, grid, penalty, folds, mode);

  ensure_out_dir(args.out_dir);
  std::string table = "kind,rho_or_M,mu,mean_r2,std_r2\n";
  for (const auto& row : result.table) {
    const auto& w = row.point.weights;
    table += (w.is_geometric() ? "geometric," + format_double(w.rho())
                               : "cutoff," + std::to_string(w.cutoff_degree())) +
             "," + format_double(row.point.mu) + "," + format_double(row.mean_r2) + "," +
             format_double(row.std_r2) + "\n";
  }
  write_file(args.out_dir + "/cv_table.csv", table);
  json best = {{"weights", weights_to_json(result.best.weights)}, {"mu", result.best.mu}};
  write_file(args.out_dir + "/best.json", best.dump(2) + "\n");
  write_config(args.out_dir, config, threads);
  std::cout << "cv: best mu=" << result.best.mu << " mean_r2=" << result.table.front().mean_r2
            << "\n";
  return 0;
}

int cmd_score(const CommonArgs& args) {
  const int threads = resolve_threads(args.threads);
  json config = load_config(args, json{{"data", "out"}, {"model", "out/model.json"}});
  const std::string data_dir = config.at("data").get<std::string>();
  Matrix X, X_test;
  Vector Y, Y_test;
  json metadata;
  load_dataset_dir(data_dir, X, Y, X_test, Y_test, metadata);
  json model_json;
  try {
    model_json = json::parse(read_file(config.at("model").get<std::string>()));
  } catch (const json::exception& e) {
    throw DataError("model parse failure: " + std::string(e.what()));
  }
  const FittedModel model = model_from_json(model_json);

  json scores;
  scores["test_r2"] = r2_score(Y_test, predict(model, X_test));
  scores["s_hat"] = model.report.s_hat;
  const Matrix P = matrix_from_json(metadata.at("P"));
  if (model.report.P_hat.cols() > 0)
    scores["feature_score"] =
        feature_score(P, model.report.P_hat, static_cast<int>(P.cols()));
  const double sigma = metadata.value("noise_sigma", 0.0);
  if (sigma > 0.0) scores["noise_level_score"] = noise_level_score(Y_test, sigma);

  ensure_out_dir(args.out_dir);
  write_file(args.out_dir + "/scores.json", scores.dump(2) + "\n");
  write_config(args.out_dir, config, threads);
  std::cout << scores.dump() << "\n";
  return 0;
}

struct ReplicateResult {
  double test_r2 = 0.0;
  double feature_score = 0.0;
  FittedModel model;
};

ReplicateResult run_replicate(const SyntheticSpec& spec, const PenaltyConfig& penalty) {
  const GeneratedData data = make_dataset(spec);
  ReplicateResult res;
  res.model = fit(data.X, data.Y, penalty, spec.mode);
  res.test_r2 = r2_score(data.Y_test, predict(res.model, data.X_test));
  res.feature_score = res.model.report.P_hat.cols() > 0
                          ? feature_score(data.P, res.model.report.P_hat,
                                          static_cast<int>(data.P.cols()))
                          : 0.0;
  return res;
}

// Picks (rho, mu) by cross-validation on a replicate-0 dataset.
GridPoint select_by_cv(const SyntheticSpec& spec, PenaltyConfig penalty, const json& cv) {
  const GeneratedData data = make_dataset(spec);
  Matrix X = data.X;
  Vector Y = data.Y;
  const int subsample = cv.value("subsample", 0);
  if (subsample > 0 && subsample < X.rows()) {
    X = data.X.topRows(subsample);
    Y = data.Y.head(subsample);
  }
  if (cv.value("n_iter", 0) > 0) penalty.n_iter = cv.at("n_iter").get<int>();
  const std::vector<GridPoint> grid = build_grid(cv, penalty.r, spec.d);
  return cross_validate(X, Y, grid, penalty, cv.at("folds").get<int>(), spec.mode).best;
}

int cmd_exp1(const CommonArgs& args) {
  const int threads = resolve_threads(args.threads);
  json defaults = {{"dataset", default_dataset()},
                   {"penalty", default_penalty()},
                   {"cv", default_cv(true)},
                   {"d_list", {10, 20, 40}},
                   {"n_list", {100, 300, 1000}},
                   {"replicates", 5},
                   {"baseline_lambda", {1e-6, 1e-4, 1e-2, 1.0}},
                   {"seed", 0}};
  defaults["dataset"]["mode"] = "variable";
  defaults["dataset"]["sigma"] = 0.5;
  defaults["cv"]["folds"] = 3;
  defaults["cv"]["subsample"] = 500;
  defaults["cv"]["n_iter"] = 2;
  json config = load_config(args, defaults);

  const int replicates = config.at("replicates").get<int>();
  const std::uint64_t seed = config.at("seed").get<std::uint64_t>();
  const std::vector<double> baseline_grid =
      config.at("baseline_lambda").get<std::vector<double>>();
  ensure_out_dir(args.out_dir);

  std::vector<std::vector<double>> rep_rows, agg_rows;
  for (int d : config.at("d_list")) {
    for (int n : config.at("n_list")) {
      SyntheticSpec spec = parse_dataset(config.at("dataset"));
      spec.d = d;
      spec.n = n;
      PenaltyConfig penalty = parse_penalty(config.at("penalty"));

      spec.seed = Rng(seed).substream(static_cast<std::uint64_t>(d * 1000 + n)).seed();
      const GridPoint best = select_by_cv(spec, penalty, config.at("cv"));
      penalty.weights = best.weights;
      penalty.mu = best.mu;

      std::vector<double> ours, base, fscore;
      for (int rep = 0; rep < replicates; ++rep) {
        Rng rep_rng = Rng(seed).substream(
            static_cast<std::uint64_t>(d) * 1000000 + static_cast<std::uint64_t>(n) * 100 +
            static_cast<std::uint64_t>(rep));
        spec.seed = rep_rng.substream(0).seed();
        penalty.seed = rep_rng.substream(1).seed();
        const ReplicateResult res = run_replicate(spec, penalty);

        const GeneratedData data = make_dataset(spec);
        const FittedModel krr = kernel_ridge_baseline(
            data.X, data.Y, penalty.weights, baseline_grid, penalty.m, penalty.seed);
        const double krr_r2 = r2_score(data.Y_test, predict(krr, data.X_test));

        ours.push_back(res.test_r2);
        base.push_back(krr_r2);
        fscore.push_back(res.feature_score);
        rep_rows.push_back({static_cast<double>(d), static_cast<double>(n),
                            static_cast<double>(rep), res.test_r2, krr_r2,
                            res.feature_score});
      }
      agg_rows.push_back({static_cast<double>(d), static_cast<double>(n), mean_of(ours),
                          stderr_of(ours), mean_of(base), stderr_of(base), mean_of(fscore),
                          stderr_of(fscore)});
    }
  }
  write_table(args.out_dir + "/exp1_replicates.csv",
              {"d", "n", "replicate", "regfeal_r2", "baseline_r2", "feature_score"},
              rep_rows);
  write_table(args.out_dir + "/exp1_aggregate.csv",
              {"d", "n", "regfeal_r2_mean", "regfeal_r2_se", "baseline_r2_mean",
               "baseline_r2_se", "feature_score_mean", "feature_score_se"},
              agg_rows);
  write_config(args.out_dir, config, threads);
  std::cout << "exp1: " << rep_rows.size() << " replicate rows\n";
  return 0;
}

int cmd_exp2(const CommonArgs& args) {
  const int threads = resolve_threads(args.threads);
  json defaults = {{"dataset", default_dataset()},
                   {"penalty", default_penalty()},
                   {"cv", default_cv(false)},
                   {"m_list", {125, 250, 500, 1000, 2000}},
                   {"replicates", 5},
                   {"seed", 0}};
  defaults["dataset"]["n"] = 1000;
  defaults["penalty"]["n_iter"] = 3;
  defaults["cv"]["folds"] = 3;
  defaults["cv"]["n_iter"] = 2;
  json config = load_config(args, defaults);

  const int replicates = config.at("replicates").get<int>();
  const std::uint64_t seed = config.at("seed").get<std::uint64_t>();
  const std::vector<int> m_list = config.at("m_list").get<std::vector<int>>();
  ensure_out_dir(args.out_dir);

  SyntheticSpec spec = parse_dataset(config.at("dataset"));
  PenaltyConfig penalty = parse_penalty(config.at("penalty"));
  // rho and mu are selected once at the largest m, then reused for every m.
  penalty.m = *std::max_element(m_list.begin(), m_list.end());
  spec.seed = Rng(seed).substream(0xc5).seed();
  const GridPoint best = select_by_cv(spec, penalty, config.at("cv"));
  penalty.weights = best.weights;
  penalty.mu = best.mu;

  std::vector<std::vector<double>> rep_rows, agg_rows;
  for (int m : m_list) {
    penalty.m = m;
    std::vector<double> r2s, fscores;
    for (int rep = 0; rep < replicates; ++rep) {
      Rng rep_rng =
          Rng(seed).substream(static_cast<std::uint64_t>(m) * 100 + static_cast<std::uint64_t>(rep));
      spec.seed = rep_rng.substream(0).seed();
      penalty.seed = rep_rng.substream(1).seed();
      const ReplicateResult res = run_replicate(spec, penalty);
      r2s.push_back(res.test_r2);
      fscores.push_back(res.feature_score);
      rep_rows.push_back({static_cast<double>(m), static_cast<double>(rep), res.test_r2,
                          res.feature_score});
    }
    agg_rows.push_back({static_cast<double>(m), mean_of(r2s), stderr_of(r2s),
                        mean_of(fscores), stderr_of(fscores)});
  }
  write_table(args.out_dir + "/exp2_replicates.csv",
              {"m", "replicate", "test_r2", "feature_score"}, rep_rows);
  write_table(args.out_dir + "/exp2_aggregate.csv",
              {"m", "test_r2_mean", "test_r2_se", "feature_score_mean", "feature_score_se"},
              agg_rows);
  write_config(args.out_dir, config, threads);
  std::cout << "exp2: " << rep_rows.size() << " replicate rows\n";
  return 0;
}

int cmd_exp3(const CommonArgs& args) {
  const int threads = resolve_threads(args.threads);
  json defaults = {{"dataset", default_dataset()},
                   {"penalty", default_penalty()},
                   {"replicates", 5},
                   {"seed", 0}};
  defaults["dataset"]["n"] = 5000;
  defaults["penalty"]["m"] = 2500;
  defaults["penalty"]["n_iter"] = 10;
  json config = load_config(args, defaults);

  const int replicates = config.at("replicates").get<int>();
  const std::uint64_t seed = config.at("seed").get<std::uint64_t>();
  ensure_out_dir(args.out_dir);

  SyntheticSpec spec = parse_dataset(config.at("dataset"));
  PenaltyConfig penalty = parse_penalty(config.at("penalty"));

  std::vector<std::vector<double>> iter_rows, final_rows, hist_rows;
  std::map<int, std::vector<std::vector<double>>> per_iter_scores;  // iter -> columns
  for (int rep = 0; rep < replicates; ++rep) {
    Rng rep_rng = Rng(seed).substream(static_cast<std::uint64_t>(rep));
    spec.seed = rep_rng.substream(0).seed();
    penalty.seed = rep_rng.substream(1).seed();
    const ReplicateResult res = run_replicate(spec, penalty);
    final_rows.push_back({static_cast<double>(rep), res.test_r2, res.feature_score,
                          static_cast<double>(res.model.report.s_hat)});
    for (const auto& rec : res.model.report.iterations) {
      std::vector<double> row = {static_cast<double>(rep),
                                 static_cast<double>(rec.iteration), rec.train_r2,
                                 static_cast<double>(rec.m_prime)};
      const std::vector<double> imp =
          FeatureState{res.model.state.rotation, rec.eta, penalty.r, spec.mode}.importances();
      row.insert(row.end(), imp.begin(), imp.end());
      iter_rows.push_back(row);
      auto& cols = per_iter_scores[rec.iteration];
      cols.resize(2 + imp.size());
      cols[0].push_back(rec.train_r2);
      cols[1].push_back(static_cast<double>(rec.m_prime));
      for (std::size_t a = 0; a < imp.size(); ++a) cols[2 + a].push_back(imp[a]);
      for (const auto& [deg, count] : rec.degree_histogram)
        hist_rows.push_back({static_cast<double>(rep), static_cast<double>(rec.iteration),
                             static_cast<double>(deg), static_cast<double>(count)});
    }
  }

  std::vector<std::string> iter_header = {"replicate", "iteration", "train_r2", "m_prime"};
  for (int a = 1; a <= spec.d; ++a) iter_header.push_back("importance_" + std::to_string(a));
  write_table(args.out_dir + "/exp3_iterations.csv", iter_header, iter_rows);
  write_table(args.out_dir + "/exp3_final.csv",
              {"replicate", "test_r2", "feature_score", "s_hat"}, final_rows);
  write_table(args.out_dir + "/exp3_degree_histogram.csv",
              {"replicate", "iteration", "degree", "count"}, hist_rows);

  std::vector<std::string> agg_header = {"iteration", "train_r2_mean", "train_r2_se",
                                         "m_prime_mean"};
  for (int a = 1; a <= spec.d; ++a) {
    agg_header.push_back("importance_" + std::to_string(a) + "_mean");
    agg_header.push_back("importance_" + std::to_string(a) + "_se");
  }
  std::vector<std::vector<double>> agg_rows;
  for (const auto& [iter, cols] : per_iter_scores) {
    std::vector<double> row = {static_cast<double>(iter), mean_of(cols[0]),
                               stderr_of(cols[0]), mean_of(cols[1])};
    for (std::size_t a = 2; a < cols.size(); ++a) {
      row.push_back(mean_of(cols[a]));
      row.push_back(stderr_of(cols[a]));
    }
    agg_rows.push_back(row);
  }
  write_table(args.out_dir + "/exp3_aggregate.csv", agg_header, agg_rows);
  write_config(args.out_dir, config, threads);
  std::cout << "exp3: " << final_rows.size() << " replicates\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RegFeaL: nonparametric regression with linear feature learning"};
  app.require_subcommand(1);

  std::map<std::string, CommonArgs> args;
  std::map<std::string, int (*)(const CommonArgs&)> handlers = {
      {"gen", cmd_gen},   {"fit", cmd_fit},   {"cv", cmd_cv},   {"score", cmd_score},
      {"exp1", cmd_exp1}, {"exp2", cmd_exp2}, {"exp3", cmd_exp3}};
  const std::map<std::string, std::string> descriptions = {
      {"gen", "Generate a synthetic dataset"},
      {"fit", "Fit the estimator on a dataset directory"},
      {"cv", "Cross-validate the (rho, mu) grid"},
      {"score", "Score a fitted model on a dataset's test split"},
      {"exp1", "Accuracy vs dimension and sample size, with a kernel ridge baseline"},
      {"exp2", "Accuracy vs number of random features"},
      {"exp3", "Training behaviour across iterations"}};
  for (auto& [name, fn] : handlers)
    add_common(app.add_subcommand(name, descriptions.at(name)), args[name]);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    return handlers.at(name)(args[name]);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}
