#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pfrec/config.hpp"
#include "pfrec/errors.hpp"
#include "tools/commands.hpp"

namespace {

// Flag values plus their CLI11 handles, so only flags the user actually
// passed override the config file.
struct SharedFlags {
  std::string config_path;
  std::uint64_t seed = 0;
  std::uint32_t k = 0;
  std::string variant;
  std::uint64_t binarize = 0;
  std::uint32_t m = 0;
  unsigned threads = 0;
  std::uint32_t max_iters = 0;
  double rel_tol = 0.0;
  std::string output;
  bool timestamps_off = false;

  CLI::Option* seed_opt = nullptr;
  CLI::Option* k_opt = nullptr;
  CLI::Option* variant_opt = nullptr;
  CLI::Option* binarize_opt = nullptr;
  CLI::Option* m_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
  CLI::Option* max_iters_opt = nullptr;
  CLI::Option* rel_tol_opt = nullptr;
  CLI::Option* output_opt = nullptr;
  CLI::Option* timestamps_opt = nullptr;

  void attach(CLI::App& app) {
    app.add_option("--config", config_path, "JSON run configuration");
    seed_opt = app.add_option("--seed", seed, "RNG seed");
    k_opt = app.add_option("--k", k, "number of latent components");
    variant_opt =
        app.add_option("--variant", variant, "model variant: hpf or bpf");
    binarize_opt = app.add_option(
        "--binarize", binarize, "threshold t: counts >= t become 1, rest drop");
    m_opt = app.add_option("--m", m, "recommendation list length");
    threads_opt =
        app.add_option("--threads", threads, "worker threads (0 = all cores)");
    max_iters_opt = app.add_option("--max-iters", max_iters, "sweep limit");
    rel_tol_opt = app.add_option("--rel-tol", rel_tol,
                                 "relative validation-loglik tolerance");
    output_opt = app.add_option("--output", output, "working directory");
    timestamps_opt = app.add_flag("--timestamps-off", timestamps_off,
                                  "zero the seconds column in trace output");
  }

  pfrec::RunConfig resolve() const {
    pfrec::RunConfig config;
    if (!config_path.empty()) config = pfrec::load_config(config_path);
    if (seed_opt->count()) config.seed = seed;
    if (k_opt->count()) config.hyper.k = k;
    if (variant_opt->count())
      config.hyper.variant = pfrec::variant_from_string(variant);
    if (binarize_opt->count()) config.binarize = binarize;
    if (m_opt->count()) config.m = m;
    if (threads_opt->count()) config.threads = threads;
    if (max_iters_opt->count()) config.fit.max_iters = max_iters;
    if (rel_tol_opt->count()) config.fit.rel_tol = rel_tol;
    if (output_opt->count()) config.output = output;
    if (timestamps_opt->count()) config.timestamps_off = timestamps_off;
    return config;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Poisson factorization recommender"};
  app.require_subcommand(1);

  SharedFlags flags;
  flags.attach(app);

  std::string input;
  CLI::App* prepare = app.add_subcommand(
      "prepare", "ingest ratings, split into train/validation/test");
  prepare->add_option("input", input, "ratings file (user, item[, count])");
  prepare->fallthrough();

  CLI::App* train =
      app.add_subcommand("train", "fit the factorization on a prepared split");
  train->fallthrough();

  std::vector<std::string> users;
  CLI::App* recommend =
      app.add_subcommand("recommend", "write top-m lists per user");
  recommend->add_option("--users", users, "external user ids (default: all)")
      ->delimiter(',');
  recommend->fallthrough();

  CLI::App* eval_cmd = app.add_subcommand(
      "eval", "ranking metrics of the model against the test split");
  eval_cmd->fallthrough();

  CLI::App* ppc =
      app.add_subcommand("ppc", "posterior predictive check of user activity");
  ppc->fallthrough();

  std::uint32_t n_users = 0;
  std::uint32_t n_items = 0;
  CLI::App* simulate =
      app.add_subcommand("simulate", "sample a synthetic dataset");
  simulate->add_option("--n-users", n_users, "rows to simulate")->required();
  simulate->add_option("--n-items", n_items, "columns to simulate")->required();
  simulate->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 3;
  }

  try {
    pfrec::RunConfig config = flags.resolve();
    if (prepare->parsed()) {
      if (!input.empty()) config.input = input;
      return pfrec::cmd_prepare(config);
    }
    if (train->parsed()) return pfrec::cmd_train(config);
    if (recommend->parsed()) return pfrec::cmd_recommend(config, users);
    if (eval_cmd->parsed()) return pfrec::cmd_eval(config);
    if (ppc->parsed()) return pfrec::cmd_ppc(config);
    if (simulate->parsed())
      return pfrec::cmd_simulate(config, n_users, n_items);
  } catch (const pfrec::NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 3;
}
