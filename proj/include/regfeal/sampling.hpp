#pragma once

#include <cstdint>
#include <vector>

#include "regfeal/multiindex.hpp"

namespace regfeal {

// Seedable counter-free generator with deterministic substream derivation.
// All randomness in the library flows through this type so that runs are
// reproducible from the recorded seed alone.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Independent substream deterministically derived from this stream's seed.
  Rng substream(std::uint64_t id) const;

  std::uint64_t next_u64();
  double uniform();                    // [0, 1)
  int uniform_int(int lo, int hi);     // inclusive, unbiased
  double normal();                     // standard normal
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Binomial coefficient as a double (exact for small arguments).
double binomial(int n, int k);

// Uniform draw over the C(M+d, d) - 1 nonzero tuples with |alpha| <= M,
// via sorted-subset differences with zero-tuple rejection.
MultiIndex sample_uniform_bounded(int d, int M, Rng& rng);

// Uniform draw over the C(k+d-1, d-1) compositions of k into d non-negative parts.
MultiIndex sample_uniform_composition(int d, int k, Rng& rng);

// Probability table over total degree k in [1, k_max] with mass proportional to
// C(k + d_group - 1, d_group - 1) rho^k / (lambda + mu * k * inv_eta_tilde).
struct DegreeTable {
  std::vector<double> prob;        // prob[k-1] for k in [1, k_max]
  std::vector<double> raw;         // unnormalised masses
  double normaliser = 0.0;         // sum of raw masses (truncated)
  double tail_mass_estimate = 0.0; // geometric extrapolation past k_max

  int sample(Rng& rng) const;      // returns k in [1, k_max]
};

DegreeTable degree_table(int d_group, double rho, double lambda, double mu,
                         double inv_eta_tilde, int k_max);

struct GroupSampleResult {
  std::vector<WeightedSample> samples;  // aggregated, sorted, no zero tuple
  double normaliser = 0.0;              // C(eta_tilde), truncated
  double tail_mass_estimate = 0.0;
  int raw_draws = 0;
};

// "Group sampling" importance sampler for geometric degree weights. eta must be
// non-negative with ||eta||_{r/(2-r)} = 1 to 1e-8. Importance weights already
// include the normaliser and the 1/m factor; duplicates are merged and samples
// with zero importance weight (eta_a = 0 with alpha_a > 0) are dropped.
GroupSampleResult sample_group(int d, const std::vector<double>& eta,
                               const WeightSequence& weights, double lambda, double mu,
                               double r, int m, int k_max, Rng& rng);

// Importance sampler for the cutoff sequence: uniform bounded-degree proposal,
// weight (C(M+d,d)-1) / (lambda + mu alpha^T eta^{-1}) / m. Same aggregation
// contract as sample_group.
GroupSampleResult sample_bounded_weighted(int d, const std::vector<double>& eta,
                                          int M, double lambda, double mu, int m, Rng& rng);

// Features for the plain Hermite kernel k(x,x') = sum c_{|alpha|} H H: importance
// weight c_{|alpha|} / p(alpha) / m under the matching proposal.
GroupSampleResult sample_plain_kernel(int d, const WeightSequence& weights, int m,
                                      int k_max, Rng& rng);

}  // namespace regfeal
