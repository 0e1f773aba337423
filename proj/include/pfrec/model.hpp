#ifndef PFREC_MODEL_HPP
#define PFREC_MODEL_HPP

#include <cstdint>
#include <filesystem>
#include <limits>

#include "pfrec/hyper.hpp"
#include "pfrec/matrix.hpp"

namespace pfrec {

struct FitMeta {
  std::uint32_t iterations = 0;
  double final_valid_loglik = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 0;
  bool converged = false;
};

// Posterior-mean summaries of a fitted factorization, persistable and
// sufficient for scoring/recommendation.
struct FittedModel {
  Matrix e_theta;  // n_users x k expected preferences
  Matrix e_beta;   // n_items x k expected attributes
  Hyperparameters hyper;
  FitMeta meta;

  std::uint32_t n_users() const { return e_theta.rows(); }
  std::uint32_t n_items() const { return e_beta.rows(); }
  std::uint32_t k() const { return e_theta.cols(); }
};

// theta.tsv / beta.tsv hold (row, component, value) triples with 17
// significant digits so reloading reproduces the doubles exactly; model.json
// holds the hyperparameters and fit metadata.
void save_model(const FittedModel& model, const std::filesystem::path& dir);
FittedModel load_model(const std::filesystem::path& dir);

}  // namespace pfrec

#endif
