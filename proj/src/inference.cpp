#include "pfrec/inference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "pfrec/errors.hpp"
#include "src/io_util.hpp"
#include "src/parallel.hpp"

namespace pfrec {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Matrix expected_log_table(const GammaMatrix& g) {
  Matrix out(g.shape.rows(), g.shape.cols());
  auto shape = g.shape.flat();
  auto rate = g.rate.flat();
  auto dst = out.flat();
  for (std::size_t n = 0; n < dst.size(); ++n)
    dst[n] = digamma(shape[n]) - std::log(rate[n]);
  return out;
}

// Softmax of log_a + log_b written into phi.
void phi_from_logs(std::span<const double> log_a, std::span<const double> log_b,
                   std::span<double> phi) {
  const std::size_t k = phi.size();
  double top = kNegInf;
  for (std::size_t j = 0; j < k; ++j) {
    phi[j] = log_a[j] + log_b[j];
    top = std::max(top, phi[j]);
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    phi[j] = std::exp(phi[j] - top);
    sum += phi[j];
  }
  for (std::size_t j = 0; j < k; ++j) phi[j] /= sum;
}

std::vector<double> mean_colsums(const GammaMatrix& g) {
  std::vector<double> sums(g.shape.cols(), 0.0);
  for (std::uint32_t r = 0; r < g.shape.rows(); ++r)
    for (std::uint32_t c = 0; c < g.shape.cols(); ++c)
      sums[c] += g.shape(r, c) / g.rate(r, c);
  return sums;
}

void check_dims(const VariationalState& state, const Dataset& train,
                const Hyperparameters& hyper) {
  if (state.n_users() != train.n_users() || state.n_items() != train.n_items())
    throw ArgumentError("state and dataset dimensions disagree");
  if (state.k() != hyper.k)
    throw ArgumentError("state and hyperparameter component counts disagree");
  if (state.variant != hyper.variant)
    throw ArgumentError("state and hyperparameter variants disagree");
}

// Throws NumericalError on the first non-finite parameter.
void check_finite(const VariationalState& state, std::uint32_t iteration) {
  auto scan_matrix = [&](const Matrix& m, const char* name) {
    auto data = m.flat();
    for (std::size_t n = 0; n < data.size(); ++n)
      if (!std::isfinite(data[n]))
        throw NumericalError(
            iteration, std::string(name) + "[" +
                           std::to_string(n / m.cols()) + "," +
                           std::to_string(n % m.cols()) + "]");
  };
  auto scan_vec = [&](const std::vector<double>& v, const char* name) {
    for (std::size_t n = 0; n < v.size(); ++n)
      if (!std::isfinite(v[n]))
        throw NumericalError(iteration,
                             std::string(name) + "[" + std::to_string(n) + "]");
  };
  scan_matrix(state.user_weight.shape, "user_weight.shape");
  scan_matrix(state.user_weight.rate, "user_weight.rate");
  scan_matrix(state.item_weight.shape, "item_weight.shape");
  scan_matrix(state.item_weight.rate, "item_weight.rate");
  scan_vec(state.user_activity.shape, "user_activity.shape");
  scan_vec(state.user_activity.rate, "user_activity.rate");
  scan_vec(state.item_popularity.shape, "item_popularity.shape");
  scan_vec(state.item_popularity.rate, "item_popularity.rate");
}

double mean_poisson_loglik(const Matrix& e_theta, const Matrix& e_beta,
                           std::span<const Entry> heldout) {
  if (heldout.empty())
    throw ArgumentError("predictive log likelihood needs a nonempty held-out set");
  const std::uint32_t k = e_theta.cols();
  double sum = 0.0;
  for (const Entry& e : heldout) {
    if (e.user >= e_theta.rows() || e.item >= e_beta.rows())
      throw ArgumentError("held-out entry outside the model's dimensions");
    auto tu = e_theta.row(e.user);
    auto bi = e_beta.row(e.item);
    double rate = 0.0;
    for (std::uint32_t j = 0; j < k; ++j) rate += tu[j] * bi[j];
    sum += poisson_log_pmf(e.count, rate);
  }
  return sum / double(heldout.size());
}

}  // namespace

VariationalState initialize(const Hyperparameters& hyper,
                            std::uint32_t n_users, std::uint32_t n_items,
                            std::uint64_t seed, double offset_scale) {
  hyper.validate();
  if (n_users < 1 || n_items < 1)
    throw ArgumentError("initialization needs at least one user and one item");
  if (offset_scale < 0.0)
    throw ArgumentError("init offset scale must be non-negative");

  const bool hier = hyper.variant == Variant::hpf;
  const std::uint32_t k = hyper.k;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, offset_scale);
  auto offset = [&] { return offset_scale > 0.0 ? dist(rng) : 0.0; };

  VariationalState state;
  state.variant = hyper.variant;
  state.user_weight.shape = Matrix(n_users, k);
  state.user_weight.rate = Matrix(n_users, k);
  state.item_weight.shape = Matrix(n_items, k);
  state.item_weight.rate = Matrix(n_items, k);

  const double user_rate_base = hier ? hyper.b_prime : hyper.bpf_user_rate;
  const double item_rate_base = hier ? hyper.d_prime : hyper.bpf_item_rate;

  for (double& v : state.user_weight.shape.flat()) v = hyper.a + offset();
  for (double& v : state.user_weight.rate.flat()) v = user_rate_base + offset();
  if (hier) {
    state.user_activity.shape.assign(n_users, hyper.a_prime + double(k) * hyper.a);
    state.user_activity.rate.resize(n_users);
    for (double& v : state.user_activity.rate) v = hyper.b_prime + offset();
  }
  for (double& v : state.item_weight.shape.flat()) v = hyper.c + offset();
  for (double& v : state.item_weight.rate.flat()) v = item_rate_base + offset();
  if (hier) {
    state.item_popularity.shape.assign(n_items,
                                       hyper.c_prime + double(k) * hyper.c);
    state.item_popularity.rate.resize(n_items);
    for (double& v : state.item_popularity.rate) v = hyper.d_prime + offset();
  }
  return state;
}

std::vector<double> compute_phi(std::uint32_t u, std::uint32_t i,
                                const VariationalState& state) {
  if (u >= state.n_users() || i >= state.n_items())
    throw ArgumentError("phi requested for an out-of-range (user, item) pair");
  const std::uint32_t k = state.k();
  std::vector<double> log_user(k);
  std::vector<double> log_item(k);
  for (std::uint32_t j = 0; j < k; ++j) {
    log_user[j] = expected_log_weight(state.user_weight.at(u, j));
    log_item[j] = expected_log_weight(state.item_weight.at(i, j));
  }
  std::vector<double> phi(k);
  phi_from_logs(log_user, log_item, phi);
  return phi;
}

void sweep(VariationalState& state, const Dataset& train,
           const Hyperparameters& hyper, unsigned threads) {
  check_dims(state, train, hyper);
  const bool hier = hyper.variant == Variant::hpf;
  const std::uint32_t n_users = state.n_users();
  const std::uint32_t n_items = state.n_items();
  const std::uint32_t k = state.k();
  if (threads < 1) threads = 1;
  const unsigned user_threads = std::min<unsigned>(threads, n_users);

  // All responsibilities in this sweep come from the pre-sweep state.
  const Matrix log_user = expected_log_table(state.user_weight);
  const Matrix log_item = expected_log_table(state.item_weight);
  const std::vector<double> item_mean_colsum = mean_colsums(state.item_weight);

  std::vector<double> user_rate_offset(n_users, hyper.bpf_user_rate);
  if (hier)
    for (std::uint32_t u = 0; u < n_users; ++u)
      user_rate_offset[u] =
          state.user_activity.shape[u] / state.user_activity.rate[u];
  std::vector<double> item_rate_offset(n_items, hyper.bpf_item_rate);
  if (hier)
    for (std::uint32_t i = 0; i < n_items; ++i)
      item_rate_offset[i] =
          state.item_popularity.shape[i] / state.item_popularity.rate[i];

  const double activity_prior_rate = hyper.a_prime / hyper.b_prime;
  const double popularity_prior_rate = hyper.c_prime / hyper.d_prime;

  // User block: weights then activities, accumulating the item-side expected
  // counts per thread so the later merge is in fixed thread order.
  std::vector<Matrix> item_shape_acc(user_threads, Matrix(n_items, k));
  parallel_rows(n_users, user_threads,
                [&](unsigned t, std::uint32_t begin, std::uint32_t end) {
    std::vector<double> phi(k);
    Matrix& acc = item_shape_acc[t];
    for (std::uint32_t u = begin; u < end; ++u) {
      auto shape_row = state.user_weight.shape.row(u);
      for (std::uint32_t j = 0; j < k; ++j) shape_row[j] = hyper.a;
      for (const ItemObservation& obs : train.for_user(u)) {
        phi_from_logs(log_user.row(u), log_item.row(obs.item), phi);
        auto acc_row = acc.row(obs.item);
        const double y = double(obs.count);
        for (std::uint32_t j = 0; j < k; ++j) {
          const double expected_count = y * phi[j];
          shape_row[j] += expected_count;
          acc_row[j] += expected_count;
        }
      }
      auto rate_row = state.user_weight.rate.row(u);
      for (std::uint32_t j = 0; j < k; ++j)
        rate_row[j] = user_rate_offset[u] + item_mean_colsum[j];
      if (hier) {
        double mean_sum = 0.0;
        for (std::uint32_t j = 0; j < k; ++j)
          mean_sum += shape_row[j] / rate_row[j];
        state.user_activity.rate[u] = activity_prior_rate + mean_sum;
      }
    }
  });

  const std::vector<double> user_mean_colsum = mean_colsums(state.user_weight);

  // Item block conditions on the freshly updated user weights.
  parallel_rows(n_items, std::min<unsigned>(threads, n_items),
                [&](unsigned, std::uint32_t begin, std::uint32_t end) {
    for (std::uint32_t i = begin; i < end; ++i) {
      auto shape_row = state.item_weight.shape.row(i);
      auto rate_row = state.item_weight.rate.row(i);
      for (std::uint32_t j = 0; j < k; ++j) {
        double total = hyper.c;
        for (unsigned t = 0; t < user_threads; ++t)
          total += item_shape_acc[t](i, j);
        shape_row[j] = total;
        rate_row[j] = item_rate_offset[i] + user_mean_colsum[j];
      }
      if (hier) {
        double mean_sum = 0.0;
        for (std::uint32_t j = 0; j < k; ++j)
          mean_sum += shape_row[j] / rate_row[j];
        state.item_popularity.rate[i] = popularity_prior_rate + mean_sum;
      }
    }
  });
}

double elbo(const VariationalState& state, const Dataset& train,
            const Hyperparameters& hyper) {
  check_dims(state, train, hyper);
  const bool hier = hyper.variant == Variant::hpf;
  const std::uint32_t k = state.k();

  const Matrix log_user = expected_log_table(state.user_weight);
  const Matrix log_item = expected_log_table(state.item_weight);

  double total = 0.0;

  // Observation block: expected complete-data log likelihood of the nonzero
  // cells plus the entropy of the per-entry multinomials, minus the total
  // Poisson rate over the whole matrix.
  std::vector<double> phi(k);
  for (const Entry& e : train.entries()) {
    phi_from_logs(log_user.row(e.user), log_item.row(e.item), phi);
    const double y = double(e.count);
    for (std::uint32_t j = 0; j < k; ++j) {
      if (phi[j] <= 0.0) continue;
      total += y * phi[j] *
               (log_user(e.user, j) + log_item(e.item, j) - std::log(phi[j]));
    }
    total -= std::lgamma(y + 1.0);
  }
  const std::vector<double> user_mean_colsum = mean_colsums(state.user_weight);
  const std::vector<double> item_mean_colsum = mean_colsums(state.item_weight);
  for (std::uint32_t j = 0; j < k; ++j)
    total -= user_mean_colsum[j] * item_mean_colsum[j];

  // Weight priors and entropies, with the hpf hierarchy terms when present.
  auto side = [&](const GammaMatrix& weight, const Matrix& log_weight,
                  const GammaVec& scale, double shape_hyper, double scale_shape,
                  double scale_mean, double fixed_rate) {
    const std::uint32_t rows = weight.shape.rows();
    double acc = 0.0;
    const double lg_shape = std::lgamma(shape_hyper);
    const double prior_rate = scale_shape / scale_mean;
    for (std::uint32_t r = 0; r < rows; ++r) {
      double rate_log;    // E[log rate] of the weight prior
      double rate_mean;   // E[rate]
      if (hier) {
        const GammaParams g = scale.at(r);
        rate_log = expected_log_weight(g);
        rate_mean = expected_weight(g);
        // Scale prior cross term and entropy.
        acc += scale_shape * std::log(prior_rate) - std::lgamma(scale_shape) +
               (scale_shape - 1.0) * rate_log - prior_rate * rate_mean;
        acc += gamma_entropy(g);
      } else {
        rate_log = std::log(fixed_rate);
        rate_mean = fixed_rate;
      }
      for (std::uint32_t j = 0; j < k; ++j) {
        const GammaParams w = weight.at(r, j);
        acc += shape_hyper * rate_log - lg_shape +
               (shape_hyper - 1.0) * log_weight(r, j) -
               rate_mean * expected_weight(w);
        acc += gamma_entropy(w);
      }
    }
    return acc;
  };

  total += side(state.user_weight, log_user, state.user_activity, hyper.a,
                hyper.a_prime, hyper.b_prime, hyper.bpf_user_rate);
  total += side(state.item_weight, log_item, state.item_popularity, hyper.c,
                hyper.c_prime, hyper.d_prime, hyper.bpf_item_rate);
  return total;
}

double predictive_loglik(const VariationalState& state,
                         std::span<const Entry> heldout) {
  const std::uint32_t k = state.k();
  Matrix e_theta(state.n_users(), k);
  Matrix e_beta(state.n_items(), k);
  for (std::uint32_t u = 0; u < state.n_users(); ++u)
    for (std::uint32_t j = 0; j < k; ++j)
      e_theta(u, j) = expected_weight(state.user_weight.at(u, j));
  for (std::uint32_t i = 0; i < state.n_items(); ++i)
    for (std::uint32_t j = 0; j < k; ++j)
      e_beta(i, j) = expected_weight(state.item_weight.at(i, j));
  return mean_poisson_loglik(e_theta, e_beta, heldout);
}

double predictive_loglik(const FittedModel& model,
                         std::span<const Entry> heldout) {
  return mean_poisson_loglik(model.e_theta, model.e_beta, heldout);
}

FittedModel posterior_means(const VariationalState& state,
                            const Hyperparameters& hyper) {
  if (state.k() != hyper.k)
    throw ArgumentError("state and hyperparameter component counts disagree");
  FittedModel model;
  model.hyper = hyper;
  model.e_theta = Matrix(state.n_users(), state.k());
  model.e_beta = Matrix(state.n_items(), state.k());
  for (std::uint32_t u = 0; u < state.n_users(); ++u)
    for (std::uint32_t j = 0; j < state.k(); ++j)
      model.e_theta(u, j) = expected_weight(state.user_weight.at(u, j));
  for (std::uint32_t i = 0; i < state.n_items(); ++i)
    for (std::uint32_t j = 0; j < state.k(); ++j)
      model.e_beta(i, j) = expected_weight(state.item_weight.at(i, j));
  return model;
}

FitResult fit(const Dataset& train, std::span<const Entry> validation,
              const Hyperparameters& hyper, const FitOptions& opts) {
  hyper.validate();
  if (train.nnz() == 0)
    throw ArgumentError("fit needs a nonempty training set");
  if (opts.max_iters < 1) throw ArgumentError("max_iters must be at least 1");
  if (!(opts.rel_tol > 0.0)) throw ArgumentError("rel_tol must be positive");
  if (opts.check_every < 1)
    throw ArgumentError("check_every must be at least 1");
  const unsigned threads = std::max(1u, opts.threads);

  VariationalState state = initialize(hyper, train.n_users(), train.n_items(),
                                      opts.seed, opts.init_offset_scale);

  FitResult result;
  result.trace.reserve(std::min<std::uint32_t>(opts.max_iters, 1024));
  std::optional<double> prev;
  std::uint32_t iters_done = 0;
  const auto start = std::chrono::steady_clock::now();

  for (std::uint32_t iter = 1; iter <= opts.max_iters; ++iter) {
    sweep(state, train, hyper, threads);
    check_finite(state, iter);
    iters_done = iter;

    TracePoint point;
    point.iter = iter;
    point.elbo = elbo(state, train, hyper);
    point.valid_loglik = std::numeric_limits<double>::quiet_NaN();

    if (!validation.empty() && iter % opts.check_every == 0) {
      const double current = predictive_loglik(state, validation);
      point.valid_loglik = current;
      if (!std::isfinite(opts.rel_tol)) {
        result.converged = true;
      } else if (prev) {
        if (std::abs(current - *prev) < opts.rel_tol * std::abs(*prev))
          result.converged = true;
      }
      prev = current;
    }

    point.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    result.trace.push_back(point);
    if (result.converged) break;
  }

  result.model = posterior_means(state, hyper);
  result.model.meta.iterations = iters_done;
  result.model.meta.seed = opts.seed;
  result.model.meta.converged = result.converged;
  if (prev) result.model.meta.final_valid_loglik = *prev;
  return result;
}

void save_trace_tsv(std::span<const TracePoint> trace,
                    const std::filesystem::path& file, bool timestamps_off) {
  auto out = open_output(file);
  for (const TracePoint& p : trace)
    out << p.iter << '\t' << g17(p.elbo) << '\t' << g17(p.valid_loglik) << '\t'
        << g17(timestamps_off ? 0.0 : p.seconds) << '\n';
}

}  // namespace pfrec
