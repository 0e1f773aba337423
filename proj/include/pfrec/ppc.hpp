#ifndef PFREC_PPC_HPP
#define PFREC_PPC_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pfrec/dataset.hpp"
#include "pfrec/model.hpp"

namespace pfrec {

struct PpcOptions {
  std::uint64_t cell_budget = 100000000;  // max n_users * n_items cells
  bool streaming = false;  // permit runs above the cell budget
  bool by_item = false;    // swap axes: item popularity instead of activity
  unsigned threads = 1;
  std::uint32_t deciles = 10;

  bool operator==(const PpcOptions&) const = default;
};

struct HistogramBin {
  std::uint64_t value;      // activity (items consumed)
  std::uint64_t num_users;  // users with exactly that activity
};

struct DecileRatio {
  double percentile;
  std::uint64_t upper_edge;         // bucket covers (previous edge, this edge]
  std::uint64_t observed_users;
  std::uint64_t replicated_users;
  double ratio;  // replicated / observed
};

// Replicated-vs-observed user activity. Bucket edges come from the observed
// activity quantiles, so each decile holds ~10% of the observed users.
struct PPCReport {
  std::vector<HistogramBin> observed_activity;
  std::vector<HistogramBin> replicated_activity;
  std::vector<DecileRatio> summary;
  std::uint64_t seed = 0;
  std::uint64_t n_users = 0;  // rows of the checked axis
};

// Draws one replicate y_ui ~ Poisson(sum_k E[theta_uk] E[beta_ik]) per cell,
// streamed row by row with a derived RNG stream per row (never stored), and
// counts the nonzero cells per row. Errors with ResourceError when the cell
// count exceeds the budget and streaming is off.
PPCReport ppc_user_activity(const FittedModel& model, const Dataset& observed,
                            std::uint64_t seed, const PpcOptions& opts = {});

std::string ppc_report_json(const PPCReport& report);
// TSV rows: count<TAB>num_users.
void save_histogram_tsv(std::span<const HistogramBin> hist,
                        const std::filesystem::path& file);

}  // namespace pfrec

#endif
