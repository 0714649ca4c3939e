#include "regfeal/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace regfeal {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed), state_(splitmix64(seed ^ 0x2545f4914f6cdd1dull)) {}

Rng Rng::substream(std::uint64_t id) const {
  return Rng(splitmix64(seed_ + 0x632be59bd9b4e019ull * (id + 1)));
}

std::uint64_t Rng::next_u64() {
  // xorshift64* on a splitmix-initialised state
  std::uint64_t x = state_;
  x ^= x >> 12;
  x ^= x << 25;
  x ^= x >> 27;
  state_ = x;
  return x * 0x2545f4914f6cdd1dull;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

int Rng::uniform_int(int lo, int hi) {
  const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return lo + static_cast<int>(v % range);
}

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1a, u2;
  do {
    u1a = uniform();
  } while (u1a <= 0.0);
  u2 = uniform();
  const double mag = std::sqrt(-2.0 * std::log(u1a));
  spare_ = mag * std::sin(2.0 * M_PI * u2);
  have_spare_ = true;
  return mag * std::cos(2.0 * M_PI * u2);
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c *= static_cast<double>(n - k + i) / static_cast<double>(i);
  return c;
}

namespace {

// Sorted subset of size `size` from {1, ..., universe} via Floyd's algorithm.
std::vector<int> sample_sorted_subset(int universe, int size, Rng& rng) {
  std::vector<int> subset;
  subset.reserve(static_cast<std::size_t>(size));
  for (int j = universe - size + 1; j <= universe; ++j) {
    const int t = rng.uniform_int(1, j);
    if (std::find(subset.begin(), subset.end(), t) != subset.end())
      subset.push_back(j);
    else
      subset.push_back(t);
  }
  std::sort(subset.begin(), subset.end());
  return subset;
}

MultiIndex differences_to_index(const std::vector<int>& sorted, int d) {
  std::vector<int> alpha(static_cast<std::size_t>(d));
  int prev = 0;
  for (int a = 0; a < d; ++a) {
    alpha[static_cast<std::size_t>(a)] = sorted[static_cast<std::size_t>(a)] - prev - 1;
    prev = sorted[static_cast<std::size_t>(a)];
  }
  return MultiIndex(std::move(alpha));
}

// alpha^T v with the convention 0 * inf = 0 skipped via alpha_a > 0 check.
double dot_inverse(const MultiIndex& alpha, const std::vector<double>& inv) {
  double s = 0.0;
  for (int a = 0; a < alpha.dim(); ++a) {
    if (alpha[a] == 0) continue;
    if (std::isinf(inv[static_cast<std::size_t>(a)])) return kInf;
    s += alpha[a] * inv[static_cast<std::size_t>(a)];
  }
  return s;
}

std::vector<WeightedSample> aggregate(std::map<MultiIndex, double>&& acc) {
  std::vector<WeightedSample> out;
  out.reserve(acc.size());
  for (auto& [alpha, w] : acc) {
    if (w > 0.0) out.push_back({alpha, w});
  }
  return out;
}

}  // namespace

MultiIndex sample_uniform_bounded(int d, int M, Rng& rng) {
  if (d < 1 || M < 1) throw std::invalid_argument("sample_uniform_bounded: d, M >= 1 required");
  while (true) {
    MultiIndex alpha = differences_to_index(sample_sorted_subset(M + d, d, rng), d);
    if (!alpha.is_zero()) return alpha;
  }
}

MultiIndex sample_uniform_composition(int d, int k, Rng& rng) {
  if (d < 1 || k < 0) throw std::invalid_argument("sample_uniform_composition: bad arguments");
  if (k == 0) return MultiIndex(std::vector<int>(static_cast<std::size_t>(d), 0));
  if (d == 1) return MultiIndex({k});
  // Subset of size d-1 from [k+d-1]; bars at the subset, parts are the gaps.
  std::vector<int> bars = sample_sorted_subset(k + d - 1, d - 1, rng);
  bars.push_back(k + d);
  return differences_to_index(bars, d);
}

int DegreeTable::sample(Rng& rng) const {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < prob.size(); ++i) {
    acc += prob[i];
    if (u < acc) return static_cast<int>(i) + 1;
  }
  return static_cast<int>(prob.size());
}

DegreeTable degree_table(int d_group, double rho, double lambda, double mu,
                         double inv_eta_tilde, int k_max) {
  if (k_max < 1) throw std::invalid_argument("degree_table: k_max >= 1 required");
  DegreeTable table;
  table.raw.resize(static_cast<std::size_t>(k_max));
  double rho_k = 1.0;
  for (int k = 1; k <= k_max; ++k) {
    rho_k *= rho;
    const double denom = lambda + mu * static_cast<double>(k) * inv_eta_tilde;
    table.raw[static_cast<std::size_t>(k - 1)] =
        denom > 0.0 ? binomial(k + d_group - 1, d_group - 1) * rho_k / denom : 0.0;
  }
  table.normaliser = std::accumulate(table.raw.begin(), table.raw.end(), 0.0);
  if (!(table.normaliser > 0.0))
    throw std::invalid_argument("degree_table: all masses are zero");
  table.prob.resize(table.raw.size());
  for (std::size_t i = 0; i < table.raw.size(); ++i) table.prob[i] = table.raw[i] / table.normaliser;
  if (k_max >= 2 && table.raw[static_cast<std::size_t>(k_max - 2)] > 0.0) {
    const double q = table.raw[static_cast<std::size_t>(k_max - 1)] /
                     table.raw[static_cast<std::size_t>(k_max - 2)];
    if (q < 1.0)
      table.tail_mass_estimate =
          table.raw[static_cast<std::size_t>(k_max - 1)] * q / (1.0 - q) / table.normaliser;
    else
      table.tail_mass_estimate = 1.0;
  }
  return table;
}

namespace {

void check_eta_norm(const std::vector<double>& eta, double r) {
  const double p = r / (2.0 - r);
  double s = 0.0;
  for (double e : eta) {
    if (e < 0.0) throw std::invalid_argument("sample_group: eta must be non-negative");
    s += std::pow(e, p);
  }
  if (std::abs(std::pow(s, 1.0 / p) - 1.0) > 1e-8)
    throw std::invalid_argument("sample_group: ||eta||_{r/(2-r)} must equal 1");
}

}  // namespace

GroupSampleResult sample_group(int d, const std::vector<double>& eta,
                               const WeightSequence& weights, double lambda, double mu,
                               double r, int m, int k_max, Rng& rng) {
  if (!weights.is_geometric())
    throw std::invalid_argument("sample_group: geometric weight sequence required");
  if (static_cast<int>(eta.size()) != d)
    throw std::invalid_argument("sample_group: eta has wrong length");
  check_eta_norm(eta, r);
  const double rho = weights.rho();

  std::vector<double> inv_eta(eta.size());
  for (std::size_t a = 0; a < eta.size(); ++a)
    inv_eta[a] = eta[a] > 0.0 ? 1.0 / eta[a] : kInf;

  // Split at the largest strictly positive gap of sorted eta; equal components
  // (or d = 1) fall back to the exact initial distribution.
  std::vector<int> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return eta[static_cast<std::size_t>(a)] < eta[static_cast<std::size_t>(b)]; });
  int gap_at = -1;
  double best_gap = 0.0;
  for (int i = 0; i + 1 < d; ++i) {
    const double g = eta[static_cast<std::size_t>(order[static_cast<std::size_t>(i + 1)])] -
                     eta[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    if (g > best_gap) {
      best_gap = g;
      gap_at = i;
    }
  }

  GroupSampleResult result;
  std::map<MultiIndex, double> acc;

  if (gap_at < 0) {
    // All components equal: eta_a = d^{-(2-r)/r}; the proposal is the target and
    // every importance weight is C / m.
    const double inv = inv_eta[0];
    DegreeTable table = degree_table(d, rho, lambda, mu, inv, k_max);
    result.normaliser = table.normaliser;
    result.tail_mass_estimate = table.tail_mass_estimate;
    const double w = table.normaliser / static_cast<double>(m);
    for (int j = 0; j < m; ++j) {
      const int k = table.sample(rng);
      acc[sample_uniform_composition(d, k, rng)] += w;
    }
    result.raw_draws = m;
    result.samples = aggregate(std::move(acc));
    return result;
  }

  // Group 1: components above the gap (large eta); Group 2: the rest.
  const int d2 = gap_at + 1;
  const int d1 = d - d2;
  std::vector<int> group2(order.begin(), order.begin() + d2);
  std::vector<int> group1(order.begin() + d2, order.end());
  const double eta1 = eta[static_cast<std::size_t>(group1.front())];  // min of group 1
  const double eta2 = eta[static_cast<std::size_t>(group2.back())];   // max of group 2
  const double inv1 = 1.0 / eta1;
  const double inv2 = eta2 > 0.0 ? 1.0 / eta2 : kInf;

  // Joint mass over (k1, k2) in [0, k_max]^2 \ {(0,0)}.
  const std::size_t side = static_cast<std::size_t>(k_max) + 1;
  std::vector<double> joint(side * side, 0.0);
  double total = 0.0;
  for (int k1 = 0; k1 <= k_max; ++k1) {
    for (int k2 = 0; k2 <= k_max; ++k2) {
      if (k1 == 0 && k2 == 0) continue;
      const double cross = (k1 > 0 ? k1 * inv1 : 0.0) + (k2 > 0 ? k2 * inv2 : 0.0);
      if (std::isinf(cross)) continue;
      const double denom = lambda + mu * cross;
      if (!(denom > 0.0)) continue;
      const double mass = binomial(k1 + d1 - 1, d1 - 1) * binomial(k2 + d2 - 1, d2 - 1) *
                          std::pow(rho, k1 + k2) / denom;
      joint[static_cast<std::size_t>(k1) * side + static_cast<std::size_t>(k2)] = mass;
      total += mass;
    }
  }
  if (!(total > 0.0)) throw std::invalid_argument("sample_group: joint degree table is empty");
  result.normaliser = total;

  std::vector<double> eta_tilde_inv(eta.size());
  for (int a : group1) eta_tilde_inv[static_cast<std::size_t>(a)] = inv1;
  for (int a : group2) eta_tilde_inv[static_cast<std::size_t>(a)] = inv2;

  std::vector<int> alpha(static_cast<std::size_t>(d));
  for (int j = 0; j < m; ++j) {
    const double u = rng.uniform() * total;
    double run = 0.0;
    int k1 = 0, k2 = 0;
    bool found = false;
    for (std::size_t idx = 0; idx < joint.size() && !found; ++idx) {
      run += joint[idx];
      if (u < run && joint[idx] > 0.0) {
        k1 = static_cast<int>(idx / side);
        k2 = static_cast<int>(idx % side);
        found = true;
      }
    }
    if (!found) {
      for (std::size_t idx = joint.size(); idx-- > 0;) {
        if (joint[idx] > 0.0) {
          k1 = static_cast<int>(idx / side);
          k2 = static_cast<int>(idx % side);
          break;
        }
      }
    }
    MultiIndex a1 = sample_uniform_composition(d1, k1, rng);
    MultiIndex a2 = sample_uniform_composition(d2, k2, rng);
    std::fill(alpha.begin(), alpha.end(), 0);
    for (int i = 0; i < d1; ++i) alpha[static_cast<std::size_t>(group1[static_cast<std::size_t>(i)])] = a1[i];
    for (int i = 0; i < d2; ++i) alpha[static_cast<std::size_t>(group2[static_cast<std::size_t>(i)])] = a2[i];
    MultiIndex full{std::vector<int>(alpha)};
    const double target_dot = dot_inverse(full, inv_eta);
    if (std::isinf(target_dot)) continue;  // zero importance weight
    const double proposal_dot = dot_inverse(full, eta_tilde_inv);
    const double w = total * (lambda + mu * proposal_dot) / (lambda + mu * target_dot) /
                     static_cast<double>(m);
    acc[std::move(full)] += w;
  }
  result.raw_draws = m;
  result.samples = aggregate(std::move(acc));
  return result;
}

GroupSampleResult sample_bounded_weighted(int d, const std::vector<double>& eta,
                                          int M, double lambda, double mu, int m, Rng& rng) {
  if (static_cast<int>(eta.size()) != d)
    throw std::invalid_argument("sample_bounded_weighted: eta has wrong length");
  std::vector<double> inv_eta(eta.size());
  for (std::size_t a = 0; a < eta.size(); ++a)
    inv_eta[a] = eta[a] > 0.0 ? 1.0 / eta[a] : kInf;
  const double support = binomial(M + d, d) - 1.0;
  GroupSampleResult result;
  result.normaliser = support;
  std::map<MultiIndex, double> acc;
  for (int j = 0; j < m; ++j) {
    MultiIndex alpha = sample_uniform_bounded(d, M, rng);
    const double dot = dot_inverse(alpha, inv_eta);
    if (std::isinf(dot)) continue;
    const double denom = lambda + mu * dot;
    if (!(denom > 0.0)) continue;
    acc[std::move(alpha)] += support / denom / static_cast<double>(m);
  }
  result.raw_draws = m;
  result.samples = aggregate(std::move(acc));
  return result;
}

GroupSampleResult sample_plain_kernel(int d, const WeightSequence& weights, int m,
                                      int k_max, Rng& rng) {
  GroupSampleResult result;
  std::map<MultiIndex, double> acc;
  if (weights.is_cutoff()) {
    const int M = weights.cutoff_degree();
    const double support = binomial(M + d, d) - 1.0;
    result.normaliser = support;
    const double w = support / static_cast<double>(m);
    for (int j = 0; j < m; ++j) acc[sample_uniform_bounded(d, M, rng)] += w;
  } else {
    // Degree proposal proportional to C(k+d-1, d-1) rho^k; the importance weight
    // c_{|alpha|} / p(alpha) / m is then the table normaliser over m.
    DegreeTable table = degree_table(d, weights.rho(), 1.0, 0.0, 0.0, k_max);
    result.normaliser = table.normaliser;
    result.tail_mass_estimate = table.tail_mass_estimate;
    const double w = table.normaliser / static_cast<double>(m);
    for (int j = 0; j < m; ++j) {
      const int k = table.sample(rng);
      acc[sample_uniform_composition(d, k, rng)] += w;
    }
  }
  result.raw_draws = m;
  result.samples = aggregate(std::move(acc));
  return result;
}

}  // namespace regfeal
