// End-to-end acceptance checks. Each criterion prints exactly one PASS/FAIL
// line; the process exits nonzero if any criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <nlohmann/json.hpp>
#include <numeric>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "pfrec/config.hpp"
#include "pfrec/gamma.hpp"
#include "pfrec/inference.hpp"
#include "pfrec/metrics.hpp"
#include "pfrec/ppc.hpp"
#include "pfrec/simulate.hpp"
#include "tests/naive_vb.hpp"
#include "tests/test_util.hpp"

using namespace pfrec;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// ---- 1. oracle equivalence -------------------------------------------------

Outcome oracle_equivalence() {
  const auto start = Clock::now();
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Hyperparameters hyper;
    hyper.k = 2;
    Dataset train = testutil::random_dataset(5, 4, 0.6, 5, seed + 300);
    VariationalState state = initialize(hyper, 5, 4, seed);
    naive::State reference = naive::copy_state(state);
    sweep(state, train, hyper);
    naive::one_sweep(reference, train, hyper);
    worst = std::max(worst, naive::max_diff(reference, state));
  }
  const double elapsed = seconds_since(start);
  char buf[160];
  std::snprintf(buf, sizeof buf, "20 seeds, max param diff %.3g, %.2fs",
                worst, elapsed);
  return {worst <= 1e-10 && elapsed < 1.0, buf};
}

// ---- 2. ELBO monotonicity --------------------------------------------------

int count_elbo_drops(const Dataset& data, const Hyperparameters& hyper,
                     std::uint64_t seed, int sweeps, double* worst_drop) {
  VariationalState state =
      initialize(hyper, data.n_users(), data.n_items(), seed);
  int violations = 0;
  double prev = elbo(state, data, hyper);
  for (int pass = 0; pass < sweeps; ++pass) {
    sweep(state, data, hyper);
    const double current = elbo(state, data, hyper);
    if (current < prev - 1e-8 * std::abs(prev)) {
      ++violations;
      *worst_drop = std::max(*worst_drop, prev - current);
    }
    prev = current;
  }
  return violations;
}

Outcome elbo_monotonic() {
  const auto start = Clock::now();
  Hyperparameters hyper;
  hyper.k = 5;
  int violations = 0;
  double worst_drop = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Dataset data = testutil::random_dataset(50, 60, 0.3, 5, 400 + seed);
    violations += count_elbo_drops(data, hyper, seed, 55, &worst_drop);
  }
  // Stress the same property on draws from the generative process itself,
  // whose heavy activity tails produce extreme count scales.
  for (std::uint64_t seed = 0; seed < 2; ++seed) {
    Simulation sim = simulate_generative(hyper, 50, 60, 400 + seed);
    violations += count_elbo_drops(sim.data, hyper, seed, 55, &worst_drop);
  }
  const double elapsed = seconds_since(start);
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "12 seeds x 55 sweeps, %d violations (worst drop %.3g), %.2fs",
                violations, worst_drop, elapsed);
  return {violations == 0 && elapsed < 10.0, buf};
}

// ---- 3. convergence protocol -----------------------------------------------

Outcome convergence_protocol() {
  Hyperparameters hyper;
  hyper.k = 5;
  Dataset data = testutil::random_dataset(50, 60, 0.3, 5, 400);
  SplitDataset parts = split(data, 0.0, 0.05, 1);
  FitOptions opts;
  opts.max_iters = 500;
  opts.rel_tol = 1e-6;
  opts.seed = 0;
  FitResult result = fit(parts.train, parts.validation, hyper, opts);
  char buf[160];
  std::snprintf(buf, sizeof buf, "converged=%d after %u sweeps",
                int(result.converged), result.model.meta.iterations);
  return {result.converged && result.model.meta.iterations <= 500, buf};
}

// ---- 4. synthetic recovery vs popularity baseline ---------------------------

double popularity_loglik(const Dataset& train, std::span<const Entry> test) {
  std::vector<double> item_total(train.n_items(), 0.0);
  for (const Entry& e : train.entries()) item_total[e.item] += double(e.count);
  double total = 0.0;
  for (const Entry& e : test) {
    const double rate =
        std::max(item_total[e.item] / double(train.n_users()), 1e-6);
    total += poisson_log_pmf(e.count, rate);
  }
  return total / double(test.size());
}

Outcome synthetic_recovery() {
  const auto start = Clock::now();
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Hyperparameters hyper;
    hyper.k = 10;
    // With the default activity/popularity shape of 0.3 the simulated rate
    // for a cell has an infinite marginal mean, so a few astronomically
    // large held-out counts decide the whole comparison by themselves.
    // Shape 5 keeps the per-user/per-item scale heterogeneity the
    // hierarchy is for, with every moment finite, so recovery is
    // measurable at this size.
    hyper.a_prime = 5.0;
    hyper.c_prime = 5.0;
    Simulation sim = simulate_generative(hyper, 200, 300, 1000 + seed);
    SplitDataset parts = split(sim.data, 0.20, 0.01, seed);
    if (parts.test.empty()) continue;
    FitOptions opts;
    opts.seed = seed;
    // A fixed sweep budget: held-out quality, not convergence, is the gate.
    opts.max_iters = 120;
    opts.check_every = 5;
    FitResult result = fit(parts.train, parts.validation, hyper, opts);
    const double model_ll = predictive_loglik(result.model, parts.test);
    const double base_ll = popularity_loglik(parts.train, parts.test);
    if (model_ll > base_ll) ++wins;
  }
  const double elapsed = seconds_since(start);
  char buf[160];
  std::snprintf(buf, sizeof buf, "model beat popularity in %d/10 seeds, %.1fs",
                wins, elapsed);
  return {wins >= 9 && elapsed < 120.0, buf};
}

// ---- 5. sparsity scaling ---------------------------------------------------

Dataset fixed_nnz_dataset(std::uint32_t n, std::uint64_t nnz,
                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Entry> entries;
  entries.reserve(nnz);
  const std::uint64_t cells = std::uint64_t(n) * n;
  if (cells <= 1000000) {
    std::vector<std::uint32_t> index(cells);
    std::iota(index.begin(), index.end(), 0u);
    std::shuffle(index.begin(), index.end(), rng);
    for (std::uint64_t j = 0; j < nnz; ++j)
      entries.push_back({index[j] / n, index[j] % n, 1 + rng() % 3});
  } else {
    std::unordered_set<std::uint64_t> taken;
    taken.reserve(nnz * 2);
    while (taken.size() < nnz) {
      const std::uint32_t u = std::uint32_t(rng() % n);
      const std::uint32_t i = std::uint32_t(rng() % n);
      if (taken.insert((std::uint64_t(u) << 32) | i).second)
        entries.push_back({u, i, 1 + rng() % 3});
    }
  }
  return Dataset(n, n, std::move(entries), IdMaps::numeric(n, n));
}

double median_sweep_seconds(const Dataset& data,
                            const Hyperparameters& hyper) {
  VariationalState state =
      initialize(hyper, data.n_users(), data.n_items(), 1);
  sweep(state, data, hyper);  // warm up caches and the allocator
  std::vector<double> times;
  for (int pass = 0; pass < 5; ++pass) {
    const auto start = Clock::now();
    sweep(state, data, hyper);
    times.push_back(seconds_since(start));
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

Outcome sparsity_scaling() {
  Hyperparameters hyper;
  hyper.k = 20;
  const std::uint64_t nnz = 100000;
  Dataset small = fixed_nnz_dataset(500, nnz, 7);
  Dataset large = fixed_nnz_dataset(5000, nnz, 8);
  const double t_small = median_sweep_seconds(small, hyper);
  const double t_large = median_sweep_seconds(large, hyper);
  const double ratio = t_large / t_small;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "per-sweep %.1fms at 500x500 vs %.1fms at 5000x5000 "
                "(ratio %.2f)",
                t_small * 1e3, t_large * 1e3, ratio);
  return {ratio < 3.0, buf};
}

// ---- 6. posterior predictive check fidelity ---------------------------------

Outcome ppc_fidelity() {
  Hyperparameters hyper;
  hyper.k = 5;
  Simulation sim = simulate_generative(hyper, 300, 200, 77);
  FitOptions opts;
  opts.max_iters = 150;
  opts.seed = 3;
  FitResult result = fit(sim.data, {}, hyper, opts);
  PPCReport report = ppc_user_activity(result.model, sim.data, 99);
  int close = 0;
  for (const DecileRatio& row : report.summary)
    if (row.ratio >= 0.5 && row.ratio <= 2.0) ++close;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "%d/%zu activity deciles within a factor of 2", close,
                report.summary.size());
  return {close >= 8, buf};
}

// ---- 7. metric unit suite ---------------------------------------------------

Outcome metric_suite() {
  using IdVec = std::vector<std::uint32_t>;
  bool ok = true;

  IdVec top20(20);
  std::iota(top20.begin(), top20.end(), 0u);
  IdVec test_ab = {3, 7};
  ok &= normalized_precision_at_m(top20, test_ab, 20) == 1.0;

  IdVec top2 = {4, 9};
  IdVec test_abc = {4, 5, 6};
  ok &= normalized_precision_at_m(top2, test_abc, 2) == 0.5;
  IdVec misses = {1, 2};
  ok &= normalized_precision_at_m(misses, test_abc, 2) == 0.0;

  IdVec rec5 = {1, 2, 3, 4, 5};
  IdVec four = {2, 4, 30, 31};
  ok &= recall_at_m(rec5, four, 5) == 0.5;
  IdVec both = {2, 4};
  ok &= recall_at_m(rec5, both, 5) == 1.0;
  ok &= !normalized_precision_at_m(top2, {}, 2).has_value();

  int fuzz_failures = 0;
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::uint32_t m = 1 + std::uint32_t(rng() % 15);
    IdVec rec;
    for (std::uint32_t r = 0; r < m; ++r)
      rec.push_back(std::uint32_t(rng() % 50));
    std::sort(rec.begin(), rec.end());
    rec.erase(std::unique(rec.begin(), rec.end()), rec.end());
    IdVec test;
    for (std::uint32_t r = 0, n = 1 + std::uint32_t(rng() % 12); r < n; ++r)
      test.push_back(std::uint32_t(rng() % 50));
    std::sort(test.begin(), test.end());
    test.erase(std::unique(test.begin(), test.end()), test.end());
    std::uint64_t hits = 0;
    for (std::uint32_t item : rec)
      if (std::binary_search(test.begin(), test.end(), item)) ++hits;
    const double plain = double(hits) / double(m);
    if (*normalized_precision_at_m(rec, test, m) < plain - 1e-15)
      ++fuzz_failures;
  }
  ok &= fuzz_failures == 0;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "trivial cases exact, %d/1000 fuzz violations", fuzz_failures);
  return {ok, buf};
}

// ---- 8. determinism ----------------------------------------------------------

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(PFREC_BINARY) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

bool same_bytes(const std::filesystem::path& a,
                const std::filesystem::path& b) {
  return testutil::slurp(a) == testutil::slurp(b);
}

Outcome determinism() {
  testutil::TempDir first("acc_det_a");
  testutil::TempDir second("acc_det_b");
  bool cli_ok = true;
  for (const testutil::TempDir* dir : {&first, &second}) {
    const std::string out = " --output '" + dir->path().string() + "'";
    cli_ok &= run_cli("simulate --n-users 40 --n-items 30 --k 4 --seed 5" +
                      out) == 0;
    cli_ok &= run_cli("prepare '" + (dir->path() / "data/entries.tsv").string() +
                      "' --seed 4" + out) == 0;
    const int train = run_cli(
        "train --k 4 --seed 9 --threads 1 --timestamps-off --max-iters 40" +
        out);
    cli_ok &= train == 0 || train == 2;
  }
  bool identical = cli_ok;
  for (const char* rel : {"model/theta.tsv", "model/beta.tsv",
                          "model/model.json", "trace.tsv"})
    identical = identical &&
                same_bytes(first.path() / rel, second.path() / rel);

  Hyperparameters hyper;
  hyper.k = 4;
  Dataset train = testutil::random_dataset(30, 24, 0.3, 5, 60);
  VariationalState sequential = initialize(hyper, 30, 24, 6);
  VariationalState threaded = sequential;
  for (int pass = 0; pass < 10; ++pass) {
    sweep(sequential, train, hyper, 1);
    sweep(threaded, train, hyper, 4);
  }
  double worst = 0.0;
  auto compare = [&](std::span<const double> a, std::span<const double> b) {
    for (std::size_t n = 0; n < a.size(); ++n)
      worst = std::max(worst, std::abs(a[n] - b[n]));
  };
  compare(sequential.user_weight.shape.flat(),
          threaded.user_weight.shape.flat());
  compare(sequential.user_weight.rate.flat(), threaded.user_weight.rate.flat());
  compare(sequential.item_weight.shape.flat(),
          threaded.item_weight.shape.flat());
  compare(sequential.item_weight.rate.flat(), threaded.item_weight.rate.flat());
  compare(sequential.user_activity.rate, threaded.user_activity.rate);
  compare(sequential.item_popularity.rate, threaded.item_popularity.rate);

  char buf[160];
  std::snprintf(buf, sizeof buf,
                "single-thread reruns byte-identical=%d, "
                "4-thread max param diff %.3g",
                int(identical), worst);
  return {identical && worst <= 1e-9, buf};
}

// ---- 9. golden defaults -------------------------------------------------------

Outcome golden_defaults() {
  RunConfig defaults;
  nlohmann::json j = nlohmann::json::parse(config_json(defaults));
  const bool ok = j.at("variant") == "hpf" && j.at("hyper").at("a") == 0.3 &&
                  j.at("hyper").at("a_prime") == 0.3 &&
                  j.at("hyper").at("b_prime") == 1.0 &&
                  j.at("hyper").at("c") == 0.3 &&
                  j.at("hyper").at("c_prime") == 0.3 &&
                  j.at("hyper").at("d_prime") == 1.0 &&
                  j.at("hyper").at("k") == 100 && j.at("m") == 20 &&
                  j.at("split").at("test_frac") == 0.2 &&
                  j.at("split").at("valid_frac") == 0.01 &&
                  j.at("fit").at("rel_tol") == 1e-6;
  return {ok, ok ? "default config matches the reference settings"
                 : "default config diverges from the reference settings"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* label;
    Outcome (*check)();
  };
  const Criterion criteria[] = {
      {"oracle equivalence", oracle_equivalence},
      {"elbo monotonicity", elbo_monotonic},
      {"convergence protocol", convergence_protocol},
      {"synthetic recovery", synthetic_recovery},
      {"sparsity scaling", sparsity_scaling},
      {"ppc fidelity", ppc_fidelity},
      {"metric unit suite", metric_suite},
      {"determinism", determinism},
      {"golden defaults", golden_defaults},
  };

  int failures = 0;
  int index = 0;
  for (const Criterion& c : criteria) {
    ++index;
    Outcome outcome;
    try {
      outcome = c.check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    if (!outcome.pass) ++failures;
    std::printf("%s %d %s: %s\n", outcome.pass ? "PASS" : "FAIL", index,
                c.label, outcome.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
