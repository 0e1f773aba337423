#include "pfrec/simulate.hpp"

#include <cmath>
#include <random>

#include "pfrec/errors.hpp"

namespace pfrec {

namespace {

// std::gamma_distribution is parameterized by shape/scale.
double draw_gamma(std::mt19937_64& rng, double shape, double rate) {
  std::gamma_distribution<double> dist(shape, 1.0 / rate);
  double v = dist(rng);
  // Shape < 1 mass piles up near zero; keep latents strictly positive.
  while (v <= 0.0) v = dist(rng);
  return v;
}

// The hierarchy's tails occasionally put a cell's rate in the 1e9+ range,
// where the library's Poisson rejection sampler stops terminating. At such
// means the distribution is numerically normal (skew ~ 1/sqrt(rate)), so
// switch to the matched-moment normal draw there.
std::uint64_t draw_poisson(std::mt19937_64& rng, double rate) {
  constexpr double normal_regime = 1e8;
  if (rate < normal_regime) {
    std::poisson_distribution<std::int64_t> poisson(rate);
    return std::uint64_t(poisson(rng));
  }
  const double capped = std::min(rate, 1e18);
  std::normal_distribution<double> normal(capped, std::sqrt(capped));
  const double y = std::round(normal(rng));
  return y <= 0.0 ? 0 : std::uint64_t(y);
}

}  // namespace

Simulation simulate_generative(const Hyperparameters& hyper,
                               std::uint32_t n_users, std::uint32_t n_items,
                               std::uint64_t seed) {
  hyper.validate();
  if (n_users < 1 || n_items < 1)
    throw ArgumentError("simulation needs at least one user and one item");

  const bool hier = hyper.variant == Variant::hpf;
  std::mt19937_64 rng(seed);

  LatentState latents;
  latents.theta = Matrix(n_users, hyper.k);
  latents.beta = Matrix(n_items, hyper.k);
  if (hier) {
    latents.xi.resize(n_users);
    latents.eta.resize(n_items);
  }

  for (std::uint32_t u = 0; u < n_users; ++u) {
    double user_rate = hyper.bpf_user_rate;
    if (hier) {
      latents.xi[u] =
          draw_gamma(rng, hyper.a_prime, hyper.a_prime / hyper.b_prime);
      user_rate = latents.xi[u];
    }
    for (std::uint32_t k = 0; k < hyper.k; ++k)
      latents.theta(u, k) = draw_gamma(rng, hyper.a, user_rate);
  }
  for (std::uint32_t i = 0; i < n_items; ++i) {
    double item_rate = hyper.bpf_item_rate;
    if (hier) {
      latents.eta[i] =
          draw_gamma(rng, hyper.c_prime, hyper.c_prime / hyper.d_prime);
      item_rate = latents.eta[i];
    }
    for (std::uint32_t k = 0; k < hyper.k; ++k)
      latents.beta(i, k) = draw_gamma(rng, hyper.c, item_rate);
  }

  std::vector<Entry> entries;
  for (std::uint32_t u = 0; u < n_users; ++u) {
    auto theta_u = latents.theta.row(u);
    for (std::uint32_t i = 0; i < n_items; ++i) {
      auto beta_i = latents.beta.row(i);
      double rate = 0.0;
      for (std::uint32_t k = 0; k < hyper.k; ++k) rate += theta_u[k] * beta_i[k];
      const std::uint64_t y = draw_poisson(rng, rate);
      if (y > 0) entries.push_back({u, i, y});
    }
  }

  return {std::move(latents),
          Dataset(n_users, n_items, std::move(entries),
                  IdMaps::numeric(n_users, n_items))};
}

}  // namespace pfrec
