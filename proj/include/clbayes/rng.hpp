#pragma once

#include <cstdint>
#include <random>

namespace clbayes {

// Deterministic random stream with its own variate generators.  The standard
// <random> distributions are not required to produce identical sequences
// across library implementations, so every variate here is generated from
// raw engine output through fixed algorithms.  Two streams built from the
// same seed produce identical sequences; substreams derived from the same
// (master, keys) tuple are identical regardless of how many other streams
// were created in between.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  // Child stream keyed by up to three indices (e.g. setting, replication,
  // purpose).  Keys are absorbed through a SplitMix64-style mix, so distinct
  // tuples map to well-separated seeds.
  static RandomStream substream(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                                std::uint64_t c = 0);

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on the open interval (0, 1); never returns 0 or 1.
  double uniform();

  // Uniform on (lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller.
  double normal();

  // Exponential with rate 1.
  double exponential();

  // Gamma with the given shape and unit scale (Marsaglia-Tsang, with the
  // shape-boost trick below 1).
  double gamma(double shape);

  // Binomial as a sum of Bernoulli draws; n must be non-negative and p in
  // [0, 1].
  int binomial(int n, double p);

 private:
  std::mt19937_64 engine_;
};

}  // namespace clbayes
