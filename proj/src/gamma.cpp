#include "pfrec/gamma.hpp"

#include <cmath>
#include <limits>

namespace pfrec {

double digamma(double x) {
  if (!(x > 0.0)) return std::numeric_limits<double>::quiet_NaN();

  // psi(x) = psi(x + 1) - 1/x, applied until the asymptotic series is safe.
  double acc = 0.0;
  while (x < 8.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }

  // psi(x) ~ ln x - 1/(2x) - sum_n B_2n / (2n x^2n), terms through x^-14.
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  const double series =
      inv2 * (1.0 / 12.0 -
              inv2 * (1.0 / 120.0 -
                      inv2 * (1.0 / 252.0 -
                              inv2 * (1.0 / 240.0 -
                                      inv2 * (1.0 / 132.0 -
                                              inv2 * (691.0 / 32760.0 -
                                                      inv2 / 12.0))))));
  return acc + std::log(x) - 0.5 * inv - series;
}

}  // namespace pfrec
