#include "tools/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <thread>

#include <nlohmann/json.hpp>

#include "pfrec/errors.hpp"
#include "pfrec/inference.hpp"
#include "pfrec/metrics.hpp"
#include "pfrec/ppc.hpp"
#include "pfrec/recommend.hpp"
#include "pfrec/simulate.hpp"
#include "src/io_util.hpp"

namespace pfrec {

namespace {

namespace fs = std::filesystem;

unsigned effective_threads(const RunConfig& config) {
  if (config.threads > 0) return config.threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

fs::path work_dir(const RunConfig& config) {
  if (config.output.empty())
    throw ArgumentError("an output directory is required");
  return fs::path(config.output);
}

void save_latent_matrix(const Matrix& m, const fs::path& file) {
  auto out = open_output(file);
  for (std::uint32_t r = 0; r < m.rows(); ++r)
    for (std::uint32_t c = 0; c < m.cols(); ++c)
      out << r << '\t' << c << '\t' << g17(m(r, c)) << '\n';
}

void save_latent_vector(const std::vector<double>& v, const fs::path& file) {
  auto out = open_output(file);
  for (std::size_t n = 0; n < v.size(); ++n)
    out << n << '\t' << g17(v[n]) << '\n';
}

}  // namespace

int cmd_prepare(const RunConfig& config) {
  if (config.input.empty())
    throw ArgumentError("prepare needs an input ratings file");
  auto in = open_input(config.input);
  RawRatings raw = parse_ratings(in, config.input_format);

  BuildReport build;
  Dataset full = build_dataset(raw, config.binarize, &build);
  SplitDataset parts =
      split(full, config.test_frac, config.valid_frac, config.seed);

  const fs::path out = work_dir(config);
  fs::create_directories(out);

  nlohmann::json meta;
  meta["seed"] = config.seed;
  meta["test_frac"] = config.test_frac;
  meta["valid_frac"] = config.valid_frac;
  if (config.binarize) meta["binarize"] = *config.binarize;
  meta["ingest"] = {{"lines_read", raw.lines_read},
                    {"records_in", build.records_in},
                    {"zeros_dropped", raw.zeros_dropped},
                    {"duplicates_merged", build.duplicates_merged},
                    {"dropped_below_threshold", build.dropped_below_threshold},
                    {"entries_out", build.entries_out}};
  meta["train_nnz"] = parts.train.nnz();
  meta["validation_nnz"] = parts.validation.size();
  meta["test_nnz"] = parts.test.size();

  save_dataset(parts.train, out / "train");
  save_entries_tsv(parts.validation, out / "validation.tsv");
  save_entries_tsv(parts.test, out / "test.tsv");
  {
    auto meta_out = open_output(out / "meta.json");
    meta_out << meta.dump(2) << '\n';
  }

  std::cout << "prepared " << full.n_users() << " users x " << full.n_items()
            << " items: " << parts.train.nnz() << " train / "
            << parts.validation.size() << " validation / "
            << parts.test.size() << " test entries\n";
  return 0;
}

int cmd_train(const RunConfig& config) {
  const fs::path out = work_dir(config);
  Dataset train = load_dataset(out / "train");
  std::vector<Entry> validation = load_entries_tsv(out / "validation.tsv");

  FitOptions opts = config.fit;
  opts.seed = config.seed;
  opts.threads = effective_threads(config);

  FitResult result = fit(train, validation, config.hyper, opts);
  save_model(result.model, out / "model");
  save_trace_tsv(result.trace, out / "trace.tsv", config.timestamps_off);

  std::cout << (result.converged ? "converged" : "stopped at max_iters")
            << " after " << result.model.meta.iterations << " sweeps";
  if (std::isfinite(result.model.meta.final_valid_loglik))
    std::cout << ", validation loglik "
              << g17(result.model.meta.final_valid_loglik);
  std::cout << '\n';
  return result.converged ? 0 : 2;
}

int cmd_recommend(const RunConfig& config,
                  const std::vector<std::string>& users) {
  const fs::path out = work_dir(config);
  FittedModel model = load_model(out / "model");
  Dataset train = load_dataset(out / "train");

  std::vector<std::uint32_t> targets;
  if (users.empty()) {
    targets.resize(train.n_users());
    for (std::uint32_t u = 0; u < train.n_users(); ++u) targets[u] = u;
  } else {
    for (const std::string& id : users) {
      auto found = train.ids().user_index.find(id);
      if (found == train.ids().user_index.end())
        throw ArgumentError("unknown user id '" + id + "'");
      targets.push_back(found->second);
    }
  }

  std::vector<RecommendationList> lists;
  lists.reserve(targets.size());
  for (std::uint32_t u : targets)
    lists.push_back(top_m(model, u, config.m, train));
  save_recommendations_tsv(lists, train.ids(), out / "recommendations.tsv");

  std::cout << "wrote top-" << config.m << " recommendations for "
            << lists.size() << " users\n";
  return 0;
}

int cmd_eval(const RunConfig& config) {
  const fs::path out = work_dir(config);
  FittedModel model = load_model(out / "model");
  Dataset train = load_dataset(out / "train");
  std::vector<Entry> test = load_entries_tsv(out / "test.tsv");

  const std::vector<double> percentiles = {10, 20, 30, 40, 50,
                                           60, 70, 80, 90, 100};
  MetricReport report =
      evaluate_ranking(model, train, test, config.m, percentiles);

  {
    auto json_out = open_output(out / "metrics.json");
    json_out << metric_report_json(report) << '\n';
  }
  {
    auto tsv = open_output(out / "per_user_metrics.tsv");
    for (const UserMetric& um : report.per_user)
      tsv << train.ids().user_ids[um.user] << '\t' << g17(um.precision)
          << '\t' << g17(um.recall) << '\n';
  }

  std::cout << "mean normalized precision@" << config.m << " "
            << g17(report.mean_norm_precision_at_m) << ", mean recall@"
            << config.m << " " << g17(report.mean_recall_at_m) << " over "
            << report.users_evaluated << " users (" << report.users_skipped
            << " skipped)\n";
  return 0;
}

int cmd_ppc(const RunConfig& config) {
  const fs::path out = work_dir(config);
  FittedModel model = load_model(out / "model");
  Dataset train = load_dataset(out / "train");

  PpcOptions opts = config.ppc;
  opts.threads = effective_threads(config);
  PPCReport report = ppc_user_activity(model, train, config.seed, opts);

  {
    auto json_out = open_output(out / "ppc.json");
    json_out << ppc_report_json(report) << '\n';
  }
  save_histogram_tsv(report.observed_activity, out / "ppc_observed.tsv");
  save_histogram_tsv(report.replicated_activity, out / "ppc_replicated.tsv");

  std::uint32_t close = 0;
  for (const DecileRatio& row : report.summary)
    if (row.ratio >= 0.5 && row.ratio <= 2.0) ++close;
  std::cout << close << "/" << report.summary.size()
            << " activity buckets within a factor of 2\n";
  return 0;
}

int cmd_simulate(const RunConfig& config, std::uint32_t n_users,
                 std::uint32_t n_items) {
  const fs::path out = work_dir(config);
  Simulation sim =
      simulate_generative(config.hyper, n_users, n_items, config.seed);

  nlohmann::json extra;
  extra["seed"] = config.seed;
  extra["variant"] = to_string(config.hyper.variant);
  save_dataset(sim.data, out / "data", extra.dump());

  const fs::path latents = out / "latents";
  fs::create_directories(latents);
  save_latent_matrix(sim.latents.theta, latents / "theta.tsv");
  save_latent_matrix(sim.latents.beta, latents / "beta.tsv");
  if (!sim.latents.xi.empty())
    save_latent_vector(sim.latents.xi, latents / "xi.tsv");
  if (!sim.latents.eta.empty())
    save_latent_vector(sim.latents.eta, latents / "eta.tsv");

  std::cout << "simulated " << n_users << " users x " << n_items << " items, "
            << sim.data.nnz() << " nonzero entries\n";
  return 0;
}

}  // namespace pfrec
