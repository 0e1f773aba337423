#ifndef PFREC_METRICS_HPP
#define PFREC_METRICS_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pfrec/dataset.hpp"
#include "pfrec/model.hpp"

namespace pfrec {

// Hits in the top m divided by min(m, |test_items|). `recommended` is in
// rank order (length <= m); `test_items` must be sorted. nullopt marks a
// user with an empty test set, excluded from means.
std::optional<double> normalized_precision_at_m(
    std::span<const std::uint32_t> recommended,
    std::span<const std::uint32_t> test_items, std::uint32_t m);

// Hits divided by |test_items|.
std::optional<double> recall_at_m(std::span<const std::uint32_t> recommended,
                                  std::span<const std::uint32_t> test_items,
                                  std::uint32_t m);

struct UserMetric {
  std::uint32_t user;
  double precision;
  double recall;
};

struct ActivityBucket {
  double percentile;  // in (0, 100]
  double mean_precision;
  double mean_recall;
  std::uint32_t n_users;
};

// Cumulative buckets: the p% row averages over the users whose training
// activity is at or below the p-th percentile of activity among the
// evaluated users (nearest-rank percentile).
std::vector<ActivityBucket> metrics_by_activity(
    std::span<const UserMetric> per_user,
    std::span<const std::uint64_t> activity,
    std::span<const double> percentiles);

struct MetricReport {
  double mean_norm_precision_at_m = 0.0;
  double mean_recall_at_m = 0.0;
  std::uint32_t m = 0;
  std::uint32_t users_evaluated = 0;
  std::uint32_t users_skipped = 0;  // empty test set
  std::vector<UserMetric> per_user;
  std::vector<ActivityBucket> by_activity_percentile;
};

// Ranks every user's unconsumed items (training consumption excluded), then
// scores the ranking against that user's held-out items.
MetricReport evaluate_ranking(const FittedModel& model, const Dataset& train,
                              std::span<const Entry> heldout, std::uint32_t m,
                              std::span<const double> percentiles);

std::string metric_report_json(const MetricReport& report);

}  // namespace pfrec

#endif
