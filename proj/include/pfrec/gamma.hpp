#ifndef PFREC_GAMMA_HPP
#define PFREC_GAMMA_HPP

#include <cmath>
#include <cstdint>

namespace pfrec {

// A Gamma distribution in shape/rate form. Every variational factor in the
// model is one of these; expected value is shape/rate, expected log value is
// digamma(shape) - log(rate).
struct GammaParams {
  double shape = 1.0;
  double rate = 1.0;

  bool valid() const { return shape > 0.0 && rate > 0.0; }
  bool operator==(const GammaParams&) const = default;
};

// Digamma via upward recurrence onto x >= 8 followed by the asymptotic
// Bernoulli series. Relative error stays below 1e-12 down to x = 1e-6.
double digamma(double x);

inline double expected_weight(const GammaParams& g) { return g.shape / g.rate; }

inline double expected_log_weight(const GammaParams& g) {
  return digamma(g.shape) - std::log(g.rate);
}

// Differential entropy of Gamma(shape, rate).
inline double gamma_entropy(const GammaParams& g) {
  return g.shape - std::log(g.rate) + std::lgamma(g.shape) +
         (1.0 - g.shape) * digamma(g.shape);
}

// log P(y) under Poisson(rate); rate must be positive, y >= 0.
inline double poisson_log_pmf(std::uint64_t y, double rate) {
  if (y == 0) return -rate;
  return double(y) * std::log(rate) - rate - std::lgamma(double(y) + 1.0);
}

}  // namespace pfrec

#endif
