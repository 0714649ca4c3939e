#include "regfeal/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace regfeal {

std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf, res.ptr);
}

void write_csv(const std::string& path, const Matrix& X, const Vector& Y) {
  if (X.rows() != Y.size()) throw std::invalid_argument("write_csv: row mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  const Eigen::Index d = X.cols();
  for (Eigen::Index a = 0; a < d; ++a) out << "x_" << (a + 1) << ",";
  out << "y\n";
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index a = 0; a < d; ++a) out << format_double(X(i, a)) << ",";
    out << format_double(Y[i]) << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

double parse_double(const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::runtime_error("bad numeric field: " + s);
  return v;
}

std::vector<std::string> split_comma(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace

void read_csv(const std::string& path, Matrix& X, Vector& Y) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty csv: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_comma(line);
  if (header.size() < 2 || header.back() != "y")
    throw std::runtime_error("csv header must end with y: " + path);
  const std::size_t d = header.size() - 1;
  for (std::size_t a = 0; a < d; ++a) {
    const std::string want = "x_" + std::to_string(a + 1);
    if (header[a] != want) throw std::runtime_error("unexpected csv column: " + header[a]);
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_comma(line);
    if (fields.size() != d + 1) throw std::runtime_error("csv row width mismatch: " + path);
    std::vector<double> row(d + 1);
    for (std::size_t a = 0; a <= d; ++a) row[a] = parse_double(fields[a]);
    rows.push_back(std::move(row));
  }
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  X.resize(n, static_cast<Eigen::Index>(d));
  Y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < d; ++a) X(i, static_cast<Eigen::Index>(a)) = rows[i][a];
    Y[i] = rows[i][d];
  }
}

nlohmann::json matrix_to_json(const Matrix& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return Matrix(0, 0);
  const Eigen::Index cols = static_cast<Eigen::Index>(j.at(0).size());
  Matrix M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index c = 0; c < cols; ++c) M(i, c) = j.at(i).at(c).get<double>();
  return M;
}

nlohmann::json vector_to_json(const Vector& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Vector vector_from_json(const nlohmann::json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j.at(i).get<double>();
  return v;
}

nlohmann::json report_to_json(const FitReport& report) {
  nlohmann::json iters = nlohmann::json::array();
  for (const auto& rec : report.iterations) {
    nlohmann::json hist = nlohmann::json::object();
    for (const auto& [deg, count] : rec.degree_histogram)
      hist[std::to_string(deg)] = count;
    iters.push_back({{"iteration", rec.iteration},
                     {"train_r2", rec.train_r2},
                     {"eta", rec.eta},
                     {"m_prime", rec.m_prime},
                     {"degree_histogram", std::move(hist)},
                     {"sampler_normaliser", rec.sampler_normaliser},
                     {"sampler_tail_mass", rec.sampler_tail_mass},
                     {"view", rec.view},
                     {"wall_seconds", rec.wall_seconds}});
  }
  return {{"iterations", std::move(iters)},
          {"s_hat", report.s_hat},
          {"P_hat", matrix_to_json(report.P_hat)},
          {"seed", report.seed},
          {"total_seconds", report.total_seconds}};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << contents;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace regfeal
