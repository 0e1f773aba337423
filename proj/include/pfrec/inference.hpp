#ifndef PFREC_INFERENCE_HPP
#define PFREC_INFERENCE_HPP

//
// Mean-field coordinate-ascent variational inference for Poisson
// factorization. Every factor is a Gamma; the per-entry component
// responsibilities are recomputed on the fly during each sweep rather than
// stored, so a sweep costs O(nnz*k + (n_users+n_items)*k) time and
// O((n_users+n_items)*k) memory.
//

#include <cstdint>
#include <span>
#include <vector>

#include "pfrec/dataset.hpp"
#include "pfrec/gamma.hpp"
#include "pfrec/hyper.hpp"
#include "pfrec/matrix.hpp"
#include "pfrec/model.hpp"

namespace pfrec {

struct GammaMatrix {
  Matrix shape;
  Matrix rate;

  GammaParams at(std::uint32_t r, std::uint32_t c) const {
    return {shape(r, c), rate(r, c)};
  }
};

struct GammaVec {
  std::vector<double> shape;
  std::vector<double> rate;

  GammaParams at(std::uint32_t i) const { return {shape[i], rate[i]}; }
};

// All per-user and per-item variational Gammas. Under hpf the activity and
// popularity shapes are closed forms of the hyperparameters (a' + k*a and
// c' + k*c); they are set once at initialization and never touched again.
struct VariationalState {
  GammaMatrix user_weight;      // n_users x k
  GammaMatrix item_weight;      // n_items x k
  GammaVec user_activity;       // n_users (hpf only)
  GammaVec item_popularity;     // n_items (hpf only)
  Variant variant = Variant::hpf;

  std::uint32_t n_users() const { return user_weight.shape.rows(); }
  std::uint32_t n_items() const { return item_weight.shape.rows(); }
  std::uint32_t k() const { return user_weight.shape.cols(); }
};

struct FitOptions {
  std::uint32_t max_iters = 500;
  double rel_tol = 1e-6;          // relative change of validation loglik
  std::uint32_t check_every = 1;  // validation-likelihood cadence
  std::uint64_t seed = 0;
  double init_offset_scale = 0.01;
  unsigned threads = 1;  // 1 = deterministic sequential reference

  bool operator==(const FitOptions&) const = default;
};

// Prior values plus a uniform [0, offset_scale) offset per parameter.
VariationalState initialize(const Hyperparameters& hyper,
                            std::uint32_t n_users, std::uint32_t n_items,
                            std::uint64_t seed, double offset_scale = 0.01);

// Multinomial responsibilities for one observed cell: softmax over k of
// E[log theta_uk] + E[log beta_ik], computed in log space.
std::vector<double> compute_phi(std::uint32_t u, std::uint32_t i,
                                const VariationalState& state);

// One full coordinate update. Responsibilities use the pre-sweep weights
// throughout; the user block (weights, then activity) runs first and the
// item block conditions on the freshly updated user weights.
void sweep(VariationalState& state, const Dataset& train,
           const Hyperparameters& hyper, unsigned threads = 1);

// Evidence lower bound for the current state, responsibilities recomputed
// from it. Non-decreasing across sweeps.
double elbo(const VariationalState& state, const Dataset& train,
            const Hyperparameters& hyper);

// Mean log PoissonPMF(y; sum_k E[theta_uk] E[beta_ik]) over held-out entries.
double predictive_loglik(const VariationalState& state,
                         std::span<const Entry> heldout);
double predictive_loglik(const FittedModel& model,
                         std::span<const Entry> heldout);

// Posterior-mean snapshot of the weight factors.
FittedModel posterior_means(const VariationalState& state,
                            const Hyperparameters& hyper);

struct TracePoint {
  std::uint32_t iter = 0;
  double elbo = 0.0;
  double valid_loglik = 0.0;  // NaN on iterations without a validation check
  double seconds = 0.0;       // cumulative wall time
};

struct FitResult {
  FittedModel model;
  std::vector<TracePoint> trace;
  bool converged = false;
};

// Initialize then sweep until the validation log likelihood stabilizes
// (relative change below rel_tol) or max_iters is hit. An empty validation
// set disables convergence checking and the loop runs max_iters sweeps.
// Throws NumericalError if any parameter goes non-finite.
FitResult fit(const Dataset& train, std::span<const Entry> validation,
              const Hyperparameters& hyper, const FitOptions& opts);

void save_trace_tsv(std::span<const TracePoint> trace,
                    const std::filesystem::path& file,
                    bool timestamps_off = false);

}  // namespace pfrec

#endif
