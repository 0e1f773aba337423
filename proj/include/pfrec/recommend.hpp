#ifndef PFREC_RECOMMEND_HPP
#define PFREC_RECOMMEND_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "pfrec/dataset.hpp"
#include "pfrec/model.hpp"

namespace pfrec {

struct ScoredItem {
  std::uint32_t item;
  double score;
};

// Scores non-increasing; equal scores ordered by ascending item index; never
// contains a consumed item.
struct RecommendationList {
  std::uint32_t user = 0;
  std::vector<ScoredItem> items;
};

// Posterior expected Poisson rate: sum_k E[theta_uk] E[beta_ik].
double score(const FittedModel& model, std::uint32_t u, std::uint32_t i);

// The m highest-scoring items not in `consumed` (sorted item indices).
// Single pass with a size-m heap; returns fewer than m when the catalog of
// unconsumed items is smaller.
RecommendationList top_m(const FittedModel& model, std::uint32_t u,
                         std::uint32_t m,
                         std::span<const std::uint32_t> consumed);

// Convenience: exclude the user's training consumption.
RecommendationList top_m(const FittedModel& model, std::uint32_t u,
                         std::uint32_t m, const Dataset& train);

// The n items with the largest expected weight in component k, descending,
// ties by ascending index.
std::vector<ScoredItem> top_items_per_component(const FittedModel& model,
                                                std::uint32_t k,
                                                std::uint32_t n);

// TSV rows: user<TAB>rank<TAB>item<TAB>score, using external ids.
void save_recommendations_tsv(std::span<const RecommendationList> lists,
                              const IdMaps& ids,
                              const std::filesystem::path& file);

}  // namespace pfrec

#endif
