#include "clbayes/rng.hpp"

#include <cmath>
#include <numbers>

#include "clbayes/errors.hpp"

namespace clbayes {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

RandomStream RandomStream::substream(std::uint64_t master, std::uint64_t a, std::uint64_t b,
                                     std::uint64_t c) {
  std::uint64_t s = splitmix64(master);
  s = splitmix64(s ^ splitmix64(a));
  s = splitmix64(s ^ splitmix64(b));
  s = splitmix64(s ^ splitmix64(c));
  return RandomStream(s);
}

double RandomStream::uniform() {
  // 53-bit mantissa, shifted off the centre of each cell so the endpoints
  // are unreachable.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RandomStream::normal() {
  double u1 = uniform();
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double RandomStream::exponential() { return -std::log(uniform()); }

double RandomStream::gamma(double shape) {
  if (!(shape > 0.0)) throw InvalidInput("gamma: shape must be positive");
  if (shape < 1.0) {
    // Boost: X ~ Gamma(shape + 1), X * U^(1/shape) ~ Gamma(shape).
    double boost = std::pow(uniform(), 1.0 / shape);
    return gamma(shape + 1.0) * boost;
  }
  double d = shape - 1.0 / 3.0;
  double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal();
    double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    double v = t * t * t;
    double u = uniform();
    double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

int RandomStream::binomial(int n, double p) {
  if (n < 0) throw InvalidInput("binomial: n must be non-negative");
  if (!(p >= 0.0) || !(p <= 1.0)) throw InvalidInput("binomial: p must lie in [0, 1]");
  int count = 0;
  for (int i = 0; i < n; ++i) {
    if (uniform() < p) ++count;
  }
  return count;
}

}  // namespace clbayes
