#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>

#include "pfrec/errors.hpp"
#include "pfrec/metrics.hpp"
#include "pfrec/ppc.hpp"
#include "tests/test_util.hpp"

using namespace pfrec;

namespace {

using IdVec = std::vector<std::uint32_t>;

Dataset tiny(std::uint32_t n_users, std::uint32_t n_items,
             std::vector<Entry> entries) {
  return Dataset(n_users, n_items, std::move(entries),
                 IdMaps::numeric(n_users, n_items));
}

}  // namespace

TEST_CASE("normalized precision trivial cases") {
  IdVec top20 = {7, 3};
  top20.resize(20);
  std::iota(top20.begin() + 2, top20.end(), 100);
  IdVec test_ab = {3, 7};
  CHECK(normalized_precision_at_m(top20, test_ab, 20) == 1.0);

  IdVec top2 = {4, 9};   // test holds {4, 5, 6}: one hit, min(2, 3) = 2
  IdVec test_abc = {4, 5, 6};
  CHECK(normalized_precision_at_m(top2, test_abc, 2) == 0.5);

  IdVec misses = {1, 2};
  CHECK(normalized_precision_at_m(misses, test_abc, 2) == 0.0);

  CHECK_FALSE(normalized_precision_at_m(top2, {}, 2).has_value());
  CHECK_THROWS_AS(normalized_precision_at_m(top2, test_abc, 0), ArgumentError);
}

TEST_CASE("recall trivial cases") {
  IdVec rec = {1, 2, 3, 4, 5};
  IdVec four = {2, 4, 30, 31};
  CHECK(recall_at_m(rec, four, 5) == 0.5);

  IdVec both = {2, 4};
  CHECK(recall_at_m(rec, both, 5) == 1.0);

  // m < |test| and every slot relevant: recall caps at m / |test|
  IdVec two_of_four = {2, 4};
  CHECK(recall_at_m(two_of_four, four, 2) == 0.5);

  CHECK_FALSE(recall_at_m(rec, {}, 5).has_value());
}

TEST_CASE("normalized precision dominates plain precision") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::uint32_t m = 1 + std::uint32_t(rng() % 12);
    IdVec rec;
    for (std::uint32_t r = 0; r < m; ++r)
      rec.push_back(std::uint32_t(rng() % 40));
    std::sort(rec.begin(), rec.end());
    rec.erase(std::unique(rec.begin(), rec.end()), rec.end());

    IdVec test;
    const std::uint32_t n_test = 1 + std::uint32_t(rng() % 10);
    for (std::uint32_t r = 0; r < n_test; ++r)
      test.push_back(std::uint32_t(rng() % 40));
    std::sort(test.begin(), test.end());
    test.erase(std::unique(test.begin(), test.end()), test.end());

    std::uint64_t hits = 0;
    for (std::uint32_t item : rec)
      if (std::binary_search(test.begin(), test.end(), item)) ++hits;
    const double plain = double(hits) / double(m);
    const double normalized = *normalized_precision_at_m(rec, test, m);
    CHECK(normalized >= plain - 1e-15);
    CHECK(normalized <= 1.0 + 1e-15);
  }
}

TEST_CASE("activity buckets cumulate by percentile") {
  std::vector<UserMetric> per_user = {{0, 1.0, 0.5}, {1, 0.0, 0.0}};
  std::vector<std::uint64_t> activity = {1, 100};

  std::vector<double> all = {100.0};
  std::vector<ActivityBucket> overall =
      metrics_by_activity(per_user, activity, all);
  REQUIRE(overall.size() == 1);
  CHECK(overall[0].n_users == 2);
  CHECK(overall[0].mean_precision == 0.5);
  CHECK(overall[0].mean_recall == 0.25);

  std::vector<double> half_full = {50.0, 100.0};
  std::vector<ActivityBucket> buckets =
      metrics_by_activity(per_user, activity, half_full);
  REQUIRE(buckets.size() == 2);
  // nearest rank of p50 over {1, 100} is the first sorted value
  CHECK(buckets[0].n_users == 1);
  CHECK(buckets[0].mean_precision == 1.0);
  CHECK(buckets[1].n_users == 2);

  std::vector<std::uint64_t> equal = {7, 7};
  std::vector<ActivityBucket> flat =
      metrics_by_activity(per_user, equal, half_full);
  for (const ActivityBucket& b : flat) {
    CHECK(b.n_users == 2);
    CHECK(b.mean_precision == 0.5);
  }

  std::vector<double> zero = {0.0};
  CHECK_THROWS_AS(metrics_by_activity(per_user, activity, zero),
                  ArgumentError);
  std::vector<double> beyond = {120.0};
  CHECK_THROWS_AS(metrics_by_activity(per_user, activity, beyond),
                  ArgumentError);
  std::vector<double> unsorted = {80.0, 40.0};
  CHECK_THROWS_AS(metrics_by_activity(per_user, activity, unsorted),
                  ArgumentError);
}

TEST_CASE("evaluate_ranking on a controlled model") {
  // Two users, four items. theta picks a distinct component per user and
  // beta makes the item ranking obvious.
  FittedModel model;
  model.hyper.k = 2;
  model.e_theta = Matrix(2, 2);
  model.e_theta(0, 0) = 1.0;
  model.e_theta(1, 1) = 1.0;
  model.e_beta = Matrix(4, 2);
  model.e_beta(0, 0) = 4.0;  // user 0 order: 0, 1, 2, 3
  model.e_beta(1, 0) = 3.0;
  model.e_beta(2, 0) = 2.0;
  model.e_beta(3, 0) = 1.0;
  model.e_beta(0, 1) = 1.0;  // user 1 order: 3, 2, 1, 0
  model.e_beta(1, 1) = 2.0;
  model.e_beta(2, 1) = 3.0;
  model.e_beta(3, 1) = 4.0;

  // user 0 consumed its top item, so the eligible ranking starts at item 1
  Dataset train = tiny(2, 4, {{0, 0, 5}});
  std::vector<Entry> heldout = {{0, 1, 1}, {0, 2, 1}};

  std::vector<double> percentiles = {100.0};
  MetricReport report = evaluate_ranking(model, train, heldout, 2, percentiles);
  CHECK(report.users_evaluated == 1);
  CHECK(report.users_skipped == 1);  // user 1 has no held-out items
  REQUIRE(report.per_user.size() == 1);
  CHECK(report.per_user[0].user == 0);
  CHECK(report.per_user[0].precision == 1.0);  // top 2 eligible = {1, 2}
  CHECK(report.per_user[0].recall == 1.0);
  CHECK(report.mean_norm_precision_at_m == 1.0);
  CHECK(report.m == 2);
  REQUIRE(report.by_activity_percentile.size() == 1);
  CHECK(report.by_activity_percentile[0].n_users == 1);

  // held-out user index out of range
  std::vector<Entry> bad = {{9, 0, 1}};
  CHECK_THROWS_AS(evaluate_ranking(model, train, bad, 2, percentiles),
                  ArgumentError);
}

TEST_CASE("metric report serializes to parseable json") {
  MetricReport report;
  report.mean_norm_precision_at_m = 0.75;
  report.mean_recall_at_m = 0.5;
  report.m = 20;
  report.users_evaluated = 2;
  report.users_skipped = 1;
  report.per_user = {{0, 1.0, 0.5}, {3, 0.5, 0.5}};
  report.by_activity_percentile = {{100.0, 0.75, 0.5, 2}};
  nlohmann::json j = nlohmann::json::parse(metric_report_json(report));
  CHECK(j.at("mean_norm_precision_at_m") == 0.75);
  CHECK(j.at("mean_recall_at_m") == 0.5);
  CHECK(j.at("m") == 20);
  CHECK(j.at("users_evaluated") == 2);
  CHECK(j.at("users_skipped") == 1);
  CHECK(j.at("by_activity_percentile").size() == 1);
  CHECK(j.at("by_activity_percentile")[0].at("percentile") == 100.0);
}

TEST_CASE("ppc replicate matches the Bernoulli rate of a constant model") {
  // One item with rate 0.7: each user's replicated activity is Bernoulli
  // with p = 1 - exp(-0.7). 10k users keeps the 3-sigma band tight.
  const std::uint32_t n = 10000;
  FittedModel model;
  model.hyper.k = 1;
  model.e_theta = Matrix(n, 1, 0.7);
  model.e_beta = Matrix(1, 1, 1.0);
  Dataset observed = tiny(n, 1, {{0, 0, 1}, {5, 0, 2}});

  PPCReport report = ppc_user_activity(model, observed, 123);
  const double p = 1.0 - std::exp(-0.7);
  std::uint64_t active = 0;
  std::uint64_t total = 0;
  for (const HistogramBin& bin : report.replicated_activity) {
    total += bin.num_users;
    if (bin.value >= 1) active += bin.num_users;
  }
  CHECK(total == n);
  const double sigma = std::sqrt(double(n) * p * (1.0 - p));
  CHECK(std::abs(double(active) - double(n) * p) <= 3.0 * sigma);

  std::uint64_t observed_total = 0;
  for (const HistogramBin& bin : report.observed_activity)
    observed_total += bin.num_users;
  CHECK(observed_total == n);
  CHECK(report.n_users == n);
}

TEST_CASE("ppc is deterministic by seed") {
  Dataset observed = testutil::random_dataset(40, 30, 0.2, 4, 8);
  FittedModel model;
  model.hyper.k = 2;
  model.e_theta = Matrix(40, 2, 0.4);
  model.e_beta = Matrix(30, 2, 0.5);
  PPCReport a = ppc_user_activity(model, observed, 77);
  PPCReport b = ppc_user_activity(model, observed, 77);
  CHECK(ppc_report_json(a) == ppc_report_json(b));
  PPCReport c = ppc_user_activity(model, observed, 78);
  CHECK(ppc_report_json(a) != ppc_report_json(c));
}

TEST_CASE("ppc threading does not change the replicate") {
  Dataset observed = testutil::random_dataset(50, 20, 0.3, 4, 15);
  FittedModel model;
  model.hyper.k = 2;
  model.e_theta = Matrix(50, 2, 0.3);
  model.e_beta = Matrix(20, 2, 0.6);
  PpcOptions threaded;
  threaded.threads = 4;
  PPCReport a = ppc_user_activity(model, observed, 5);
  PPCReport b = ppc_user_activity(model, observed, 5, threaded);
  CHECK(ppc_report_json(a) == ppc_report_json(b));
}

TEST_CASE("ppc enforces the cell budget unless streaming") {
  Dataset observed = testutil::random_dataset(5, 5, 0.5, 3, 4);
  FittedModel model;
  model.hyper.k = 1;
  model.e_theta = Matrix(5, 1, 0.5);
  model.e_beta = Matrix(5, 1, 0.5);
  PpcOptions opts;
  opts.cell_budget = 10;
  CHECK_THROWS_AS(ppc_user_activity(model, observed, 1, opts), ResourceError);
  opts.streaming = true;
  PPCReport report = ppc_user_activity(model, observed, 1, opts);
  CHECK(report.summary.size() <= 10);
}

TEST_CASE("by_item swaps the checked axis") {
  Dataset observed = tiny(3, 2, {{0, 0, 1}, {1, 0, 2}, {2, 0, 1}, {2, 1, 3}});
  FittedModel model;
  model.hyper.k = 1;
  model.e_theta = Matrix(3, 1, 0.2);
  model.e_beta = Matrix(2, 1, 0.2);
  PpcOptions opts;
  opts.by_item = true;
  PPCReport report = ppc_user_activity(model, observed, 3, opts);
  CHECK(report.n_users == 2);
  // item 0 has three consumers, item 1 has one
  std::uint64_t with_three = 0;
  std::uint64_t with_one = 0;
  for (const HistogramBin& bin : report.observed_activity) {
    if (bin.value == 3) with_three += bin.num_users;
    if (bin.value == 1) with_one += bin.num_users;
  }
  CHECK(with_three == 1);
  CHECK(with_one == 1);
}

TEST_CASE("ppc json and histogram files round-trip the arithmetic") {
  Dataset observed = testutil::random_dataset(25, 15, 0.3, 3, 20);
  FittedModel model;
  model.hyper.k = 2;
  model.e_theta = Matrix(25, 2, 0.4);
  model.e_beta = Matrix(15, 2, 0.4);
  PPCReport report = ppc_user_activity(model, observed, 9);
  nlohmann::json j = nlohmann::json::parse(ppc_report_json(report));
  REQUIRE(j.at("summary").is_array());
  for (const auto& row : j.at("summary")) {
    const auto& ratio = row.at("ratio");
    if (ratio.is_null()) continue;
    const double obs = row.at("observed_users").get<double>();
    const double rep = row.at("replicated_users").get<double>();
    // an empty bucket on both sides reports the matched-exactly ratio of 1
    const double expected = obs == 0.0 ? 1.0 : rep / obs;
    CHECK(ratio.get<double>() == doctest::Approx(expected).epsilon(1e-12));
  }

  testutil::TempDir dir("ppc");
  save_histogram_tsv(report.observed_activity, dir.path() / "obs.tsv");
  const std::string text = testutil::slurp(dir.path() / "obs.tsv");
  std::uint64_t from_file = 0;
  std::istringstream in(text);
  std::uint64_t value = 0;
  std::uint64_t users = 0;
  while (in >> value >> users) from_file += users;
  CHECK(from_file == 25);
}
