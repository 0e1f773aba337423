#include "pfrec/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "pfrec/errors.hpp"
#include "pfrec/recommend.hpp"

namespace pfrec {

namespace {

std::uint64_t count_hits(std::span<const std::uint32_t> recommended,
                         std::span<const std::uint32_t> test_items,
                         std::uint32_t m) {
  std::uint64_t hits = 0;
  std::size_t depth = std::min<std::size_t>(recommended.size(), m);
  for (std::size_t r = 0; r < depth; ++r)
    if (std::binary_search(test_items.begin(), test_items.end(),
                           recommended[r]))
      ++hits;
  return hits;
}

}  // namespace

std::optional<double> normalized_precision_at_m(
    std::span<const std::uint32_t> recommended,
    std::span<const std::uint32_t> test_items, std::uint32_t m) {
  if (m < 1) throw ArgumentError("m must be at least 1");
  if (test_items.empty()) return std::nullopt;
  const double denom = double(std::min<std::uint64_t>(m, test_items.size()));
  return double(count_hits(recommended, test_items, m)) / denom;
}

std::optional<double> recall_at_m(std::span<const std::uint32_t> recommended,
                                  std::span<const std::uint32_t> test_items,
                                  std::uint32_t m) {
  if (m < 1) throw ArgumentError("m must be at least 1");
  if (test_items.empty()) return std::nullopt;
  return double(count_hits(recommended, test_items, m)) /
         double(test_items.size());
}

std::vector<ActivityBucket> metrics_by_activity(
    std::span<const UserMetric> per_user,
    std::span<const std::uint64_t> activity,
    std::span<const double> percentiles) {
  for (double p : percentiles)
    if (!(p > 0.0) || p > 100.0)
      throw ArgumentError("percentiles must lie in (0, 100]");
  if (!std::is_sorted(percentiles.begin(), percentiles.end()) ||
      std::adjacent_find(percentiles.begin(), percentiles.end()) !=
          percentiles.end())
    throw ArgumentError("percentiles must be strictly increasing");

  std::vector<std::uint64_t> evaluated_activity;
  evaluated_activity.reserve(per_user.size());
  for (const UserMetric& um : per_user) {
    if (um.user >= activity.size())
      throw ArgumentError("per-user metric for a user without activity data");
    evaluated_activity.push_back(activity[um.user]);
  }
  std::vector<std::uint64_t> sorted = evaluated_activity;
  std::sort(sorted.begin(), sorted.end());

  std::vector<ActivityBucket> buckets;
  buckets.reserve(percentiles.size());
  for (double p : percentiles) {
    ActivityBucket bucket{p, 0.0, 0.0, 0};
    if (!sorted.empty()) {
      // Nearest-rank percentile: the smallest activity with at least p% of
      // the evaluated users at or below it.
      const std::size_t rank = std::size_t(
          std::ceil(p / 100.0 * double(sorted.size())));
      const std::uint64_t threshold = sorted[rank == 0 ? 0 : rank - 1];
      double precision_sum = 0.0;
      double recall_sum = 0.0;
      for (std::size_t n = 0; n < per_user.size(); ++n) {
        if (evaluated_activity[n] > threshold) continue;
        precision_sum += per_user[n].precision;
        recall_sum += per_user[n].recall;
        ++bucket.n_users;
      }
      if (bucket.n_users > 0) {
        bucket.mean_precision = precision_sum / bucket.n_users;
        bucket.mean_recall = recall_sum / bucket.n_users;
      }
    }
    buckets.push_back(bucket);
  }
  return buckets;
}

MetricReport evaluate_ranking(const FittedModel& model, const Dataset& train,
                              std::span<const Entry> heldout, std::uint32_t m,
                              std::span<const double> percentiles) {
  if (m < 1) throw ArgumentError("m must be at least 1");
  if (train.n_users() != model.n_users() || train.n_items() != model.n_items())
    throw ArgumentError("model and dataset dimensions disagree");

  // Held-out items per user; heldout entries are sorted by (user, item).
  std::vector<std::vector<std::uint32_t>> test_items(train.n_users());
  for (const Entry& e : heldout) {
    if (e.user >= train.n_users() || e.item >= train.n_items())
      throw ArgumentError("held-out entry outside the dataset's dimensions");
    test_items[e.user].push_back(e.item);
  }

  MetricReport report;
  report.m = m;
  double precision_sum = 0.0;
  double recall_sum = 0.0;
  for (std::uint32_t u = 0; u < train.n_users(); ++u) {
    if (test_items[u].empty()) {
      ++report.users_skipped;
      continue;
    }
    RecommendationList recs = top_m(model, u, m, train);
    std::vector<std::uint32_t> ranked;
    ranked.reserve(recs.items.size());
    for (const ScoredItem& si : recs.items) ranked.push_back(si.item);
    const double precision =
        *normalized_precision_at_m(ranked, test_items[u], m);
    const double recall = *recall_at_m(ranked, test_items[u], m);
    report.per_user.push_back({u, precision, recall});
    precision_sum += precision;
    recall_sum += recall;
    ++report.users_evaluated;
  }
  if (report.users_evaluated > 0) {
    report.mean_norm_precision_at_m = precision_sum / report.users_evaluated;
    report.mean_recall_at_m = recall_sum / report.users_evaluated;
  }

  std::vector<std::uint64_t> activity(train.n_users());
  for (std::uint32_t u = 0; u < train.n_users(); ++u)
    activity[u] = train.user_activity(u);
  report.by_activity_percentile =
      metrics_by_activity(report.per_user, activity, percentiles);
  return report;
}

std::string metric_report_json(const MetricReport& report) {
  nlohmann::json j;
  j["mean_norm_precision_at_m"] = report.mean_norm_precision_at_m;
  j["mean_recall_at_m"] = report.mean_recall_at_m;
  j["m"] = report.m;
  j["users_evaluated"] = report.users_evaluated;
  j["users_skipped"] = report.users_skipped;
  j["by_activity_percentile"] = nlohmann::json::array();
  for (const ActivityBucket& b : report.by_activity_percentile)
    j["by_activity_percentile"].push_back({{"percentile", b.percentile},
                                           {"mean_precision", b.mean_precision},
                                           {"mean_recall", b.mean_recall},
                                           {"n_users", b.n_users}});
  return j.dump(2);
}

}  // namespace pfrec
