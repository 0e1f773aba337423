#include "pfrec/recommend.hpp"

#include <algorithm>

#include "pfrec/errors.hpp"
#include "src/io_util.hpp"

namespace pfrec {

namespace {

// Ranking order: higher score first, ties by lower item index.
bool ranks_before(const ScoredItem& a, const ScoredItem& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.item < b.item;
}

// Keeps the m best-ranked items seen so far; the heap top is the worst kept.
class BestM {
 public:
  explicit BestM(std::uint32_t m) : m_(m) {}

  void offer(ScoredItem candidate) {
    if (heap_.size() < m_) {
      heap_.push_back(candidate);
      std::push_heap(heap_.begin(), heap_.end(), ranks_before);
    } else if (ranks_before(candidate, heap_.front())) {
      std::pop_heap(heap_.begin(), heap_.end(), ranks_before);
      heap_.back() = candidate;
      std::push_heap(heap_.begin(), heap_.end(), ranks_before);
    }
  }

  std::vector<ScoredItem> take_sorted() {
    std::sort_heap(heap_.begin(), heap_.end(), ranks_before);
    return std::move(heap_);
  }

 private:
  std::uint32_t m_;
  std::vector<ScoredItem> heap_;
};

}  // namespace

double score(const FittedModel& model, std::uint32_t u, std::uint32_t i) {
  if (u >= model.n_users())
    throw ArgumentError("user index out of range");
  if (i >= model.n_items())
    throw ArgumentError("item index out of range");
  auto theta = model.e_theta.row(u);
  auto beta = model.e_beta.row(i);
  double s = 0.0;
  for (std::uint32_t j = 0; j < model.k(); ++j) s += theta[j] * beta[j];
  return s;
}

RecommendationList top_m(const FittedModel& model, std::uint32_t u,
                         std::uint32_t m,
                         std::span<const std::uint32_t> consumed) {
  if (u >= model.n_users())
    throw ArgumentError("user index out of range");
  if (m < 1) throw ArgumentError("m must be at least 1");

  auto theta = model.e_theta.row(u);
  BestM best(m);
  std::size_t next_consumed = 0;
  for (std::uint32_t i = 0; i < model.n_items(); ++i) {
    if (next_consumed < consumed.size() && consumed[next_consumed] == i) {
      ++next_consumed;
      continue;
    }
    auto beta = model.e_beta.row(i);
    double s = 0.0;
    for (std::uint32_t j = 0; j < model.k(); ++j) s += theta[j] * beta[j];
    best.offer({i, s});
  }
  return {u, best.take_sorted()};
}

RecommendationList top_m(const FittedModel& model, std::uint32_t u,
                         std::uint32_t m, const Dataset& train) {
  if (train.n_items() != model.n_items() || train.n_users() != model.n_users())
    throw ArgumentError("model and dataset dimensions disagree");
  auto obs = train.for_user(u);
  std::vector<std::uint32_t> consumed;
  consumed.reserve(obs.size());
  for (const ItemObservation& o : obs) consumed.push_back(o.item);
  return top_m(model, u, m, consumed);
}

std::vector<ScoredItem> top_items_per_component(const FittedModel& model,
                                                std::uint32_t k,
                                                std::uint32_t n) {
  if (k >= model.k()) throw ArgumentError("component index out of range");
  BestM best(n);
  for (std::uint32_t i = 0; i < model.n_items(); ++i)
    best.offer({i, model.e_beta(i, k)});
  return best.take_sorted();
}

void save_recommendations_tsv(std::span<const RecommendationList> lists,
                              const IdMaps& ids,
                              const std::filesystem::path& file) {
  auto out = open_output(file);
  for (const RecommendationList& list : lists) {
    std::uint32_t rank = 1;
    for (const ScoredItem& si : list.items)
      out << ids.user_ids[list.user] << '\t' << rank++ << '\t'
          << ids.item_ids[si.item] << '\t' << g17(si.score) << '\n';
  }
}

}  // namespace pfrec
