#include "pfrec/ppc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include <nlohmann/json.hpp>

#include "pfrec/errors.hpp"
#include "src/io_util.hpp"
#include "src/parallel.hpp"

namespace pfrec {

namespace {

// splitmix-style mix so every row gets its own stream regardless of how the
// rows are scheduled across threads.
std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t row) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (row + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::vector<HistogramBin> histogram(const std::vector<std::uint64_t>& values) {
  std::map<std::uint64_t, std::uint64_t> counts;
  for (std::uint64_t v : values) ++counts[v];
  std::vector<HistogramBin> bins;
  bins.reserve(counts.size());
  for (const auto& [value, num] : counts) bins.push_back({value, num});
  return bins;
}

std::uint64_t count_in_range(const std::vector<std::uint64_t>& sorted,
                             std::uint64_t low_exclusive,
                             std::uint64_t high_inclusive, bool first_bucket) {
  auto lo = first_bucket
                ? sorted.begin()
                : std::upper_bound(sorted.begin(), sorted.end(), low_exclusive);
  auto hi = std::upper_bound(sorted.begin(), sorted.end(), high_inclusive);
  return std::uint64_t(hi - lo);
}

}  // namespace

PPCReport ppc_user_activity(const FittedModel& model, const Dataset& observed,
                            std::uint64_t seed, const PpcOptions& opts) {
  if (model.n_users() != observed.n_users() ||
      model.n_items() != observed.n_items())
    throw ArgumentError("model and dataset dimensions disagree");
  if (opts.deciles < 1) throw ArgumentError("need at least one summary bucket");

  const std::uint64_t cells =
      std::uint64_t(model.n_users()) * model.n_items();
  if (cells > opts.cell_budget && !opts.streaming)
    throw ResourceError(
        "replicating " + std::to_string(cells) +
        " cells exceeds the cell budget of " +
        std::to_string(opts.cell_budget) +
        "; enable streaming to run anyway");

  const Matrix& rows_factor = opts.by_item ? model.e_beta : model.e_theta;
  const Matrix& cols_factor = opts.by_item ? model.e_theta : model.e_beta;
  const std::uint32_t n_rows = rows_factor.rows();
  const std::uint32_t n_cols = cols_factor.rows();
  const std::uint32_t k = model.k();

  std::vector<std::uint64_t> observed_counts(n_rows);
  for (std::uint32_t r = 0; r < n_rows; ++r)
    observed_counts[r] =
        opts.by_item ? observed.item_popularity(r) : observed.user_activity(r);

  // One replicate of the full matrix, streamed: per row, draw every cell and
  // keep only how many came out nonzero.
  std::vector<std::uint64_t> replicated_counts(n_rows);
  parallel_rows(n_rows, std::max(1u, opts.threads),
                [&](unsigned, std::uint32_t begin, std::uint32_t end) {
    for (std::uint32_t r = begin; r < end; ++r) {
      std::mt19937_64 rng(derive_stream(seed, r));
      auto row = rows_factor.row(r);
      std::uint64_t active = 0;
      for (std::uint32_t c = 0; c < n_cols; ++c) {
        auto col = cols_factor.row(c);
        double rate = 0.0;
        for (std::uint32_t j = 0; j < k; ++j) rate += row[j] * col[j];
        // Past this point P(zero) = exp(-rate) underflows outright and the
        // library's rejection sampler can fail to terminate, so the cell is
        // active with certainty.
        if (rate >= 1e8) {
          ++active;
          continue;
        }
        std::poisson_distribution<std::int64_t> poisson(rate);
        if (poisson(rng) > 0) ++active;
      }
      replicated_counts[r] = active;
    }
  });

  PPCReport report;
  report.seed = seed;
  report.n_users = n_rows;
  report.observed_activity = histogram(observed_counts);
  report.replicated_activity = histogram(replicated_counts);

  // Bucket edges are the observed activity quantiles, so each bucket holds
  // about an equal share of the observed rows.
  std::vector<std::uint64_t> sorted_observed = observed_counts;
  std::sort(sorted_observed.begin(), sorted_observed.end());
  std::vector<std::uint64_t> sorted_replicated = replicated_counts;
  std::sort(sorted_replicated.begin(), sorted_replicated.end());

  std::uint64_t prev_edge = 0;
  for (std::uint32_t d = 1; d <= opts.deciles; ++d) {
    const double p = 100.0 * double(d) / double(opts.deciles);
    const std::size_t rank =
        std::size_t(std::ceil(p / 100.0 * double(n_rows)));
    const std::uint64_t edge = sorted_observed[rank == 0 ? 0 : rank - 1];
    const bool first = d == 1;

    DecileRatio row;
    row.percentile = p;
    row.upper_edge = edge;
    row.observed_users = count_in_range(sorted_observed, prev_edge, edge, first);
    row.replicated_users =
        count_in_range(sorted_replicated, prev_edge, edge, first);
    if (row.observed_users > 0)
      row.ratio = double(row.replicated_users) / double(row.observed_users);
    else
      row.ratio = row.replicated_users == 0
                      ? 1.0
                      : std::numeric_limits<double>::infinity();
    report.summary.push_back(row);
    prev_edge = edge;
  }
  return report;
}

std::string ppc_report_json(const PPCReport& report) {
  nlohmann::json j;
  j["seed"] = report.seed;
  j["n_users"] = report.n_users;
  auto hist_json = [](const std::vector<HistogramBin>& hist) {
    nlohmann::json arr = nlohmann::json::array();
    for (const HistogramBin& bin : hist)
      arr.push_back({{"count", bin.value}, {"num_users", bin.num_users}});
    return arr;
  };
  j["observed_activity"] = hist_json(report.observed_activity);
  j["replicated_activity"] = hist_json(report.replicated_activity);
  j["summary"] = nlohmann::json::array();
  for (const DecileRatio& row : report.summary) {
    nlohmann::json entry = {{"percentile", row.percentile},
                            {"upper_edge", row.upper_edge},
                            {"observed_users", row.observed_users},
                            {"replicated_users", row.replicated_users}};
    // JSON has no inf; an unmatched empty bucket serializes as null.
    if (std::isfinite(row.ratio))
      entry["ratio"] = row.ratio;
    else
      entry["ratio"] = nullptr;
    j["summary"].push_back(entry);
  }
  return j.dump(2);
}

void save_histogram_tsv(std::span<const HistogramBin> hist,
                        const std::filesystem::path& file) {
  auto out = open_output(file);
  for (const HistogramBin& bin : hist)
    out << bin.value << '\t' << bin.num_users << '\n';
}

}  // namespace pfrec
