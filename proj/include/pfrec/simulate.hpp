#ifndef PFREC_SIMULATE_HPP
#define PFREC_SIMULATE_HPP

#include <cstdint>

#include "pfrec/dataset.hpp"
#include "pfrec/hyper.hpp"
#include "pfrec/matrix.hpp"

namespace pfrec {

// True latent draws from the generative process. xi/eta are empty under bpf
// (its weight rates are fixed hyperparameters, not latent variables).
struct LatentState {
  Matrix theta;  // n_users x k, user preferences
  Matrix beta;   // n_items x k, item attributes
  std::vector<double> xi;   // user activity (hpf)
  std::vector<double> eta;  // item popularity (hpf)
};

struct Simulation {
  LatentState latents;
  Dataset data;
};

// Runs the generative process end to end: activity/popularity, weights, then
// one Poisson draw per cell. Only nonzero counts are stored; the Dataset
// keeps all n_users x n_items in its index space with numeric external ids.
Simulation simulate_generative(const Hyperparameters& hyper,
                               std::uint32_t n_users, std::uint32_t n_items,
                               std::uint64_t seed);

}  // namespace pfrec

#endif
