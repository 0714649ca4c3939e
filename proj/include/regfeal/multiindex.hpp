#pragma once

#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <variant>
#include <vector>

namespace regfeal {

// Tuple of non-negative integers indexing a multivariate Hermite polynomial.
struct MultiIndex {
  std::vector<int> entries;

  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> e) : entries(std::move(e)) {
    for (int v : entries)
      if (v < 0) throw std::invalid_argument("MultiIndex: negative entry");
  }

  int dim() const { return static_cast<int>(entries.size()); }
  int degree() const { return std::accumulate(entries.begin(), entries.end(), 0); }
  bool is_zero() const {
    for (int v : entries)
      if (v != 0) return false;
    return true;
  }
  int operator[](int a) const { return entries[static_cast<std::size_t>(a)]; }

  bool operator==(const MultiIndex& o) const = default;
  auto operator<=>(const MultiIndex& o) const = default;
};

struct MultiIndexHash {
  std::size_t operator()(const MultiIndex& mi) const {
    std::size_t h = 0x9e3779b97f4a7c15ull;
    for (int v : mi.entries) {
      h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return h;
  }
};

// Weight sequence (c_k)_{k>0}: cutoff (c_k = 1 for k <= M) or geometric (c_k = rho^k).
struct CutoffWeights {
  int max_degree;
};
struct GeometricWeights {
  double rho;
};

class WeightSequence {
 public:
  static WeightSequence cutoff(int max_degree) {
    if (max_degree < 1) throw std::invalid_argument("cutoff weights: M >= 1 required");
    return WeightSequence(CutoffWeights{max_degree});
  }
  static WeightSequence geometric(double rho) {
    // rho = 1 is allowed as the flat limit; the degree table truncation keeps it finite.
    if (!(rho > 0.0 && rho <= 1.0))
      throw std::invalid_argument("geometric weights: rho in (0, 1] required");
    return WeightSequence(GeometricWeights{rho});
  }

  bool is_cutoff() const { return std::holds_alternative<CutoffWeights>(variant_); }
  bool is_geometric() const { return std::holds_alternative<GeometricWeights>(variant_); }
  int cutoff_degree() const { return std::get<CutoffWeights>(variant_).max_degree; }
  double rho() const { return std::get<GeometricWeights>(variant_).rho; }

  // c_k for k >= 1.
  double value(int k) const {
    if (const auto* c = std::get_if<CutoffWeights>(&variant_))
      return k <= c->max_degree ? 1.0 : 0.0;
    double rho = std::get<GeometricWeights>(variant_).rho;
    double v = 1.0;
    for (int i = 0; i < k; ++i) v *= rho;
    return v;
  }

 private:
  explicit WeightSequence(std::variant<CutoffWeights, GeometricWeights> v) : variant_(v) {}
  std::variant<CutoffWeights, GeometricWeights> variant_;
};

// Sampled multi-index with its importance weight.
struct WeightedSample {
  MultiIndex alpha;
  double weight = 0.0;
};

}  // namespace regfeal
