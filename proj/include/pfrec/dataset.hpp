#ifndef PFREC_DATASET_HPP
#define PFREC_DATASET_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace pfrec {

enum class InputFormat { tsv, csv };

InputFormat input_format_from_string(const std::string& s);

struct RawRecord {
  std::string user;
  std::string item;
  std::uint64_t value = 1;
};

// Parsed rating events. Zero-valued records carry no information in the
// sparse representation and are dropped at parse time (counted).
struct RawRatings {
  std::vector<RawRecord> records;
  std::uint64_t zeros_dropped = 0;
  std::uint64_t lines_read = 0;
};

// Lines are `user<sep>item[<sep>value]`; a missing value defaults to 1.
// Lines starting with '#' and blank lines are skipped.
RawRatings parse_ratings(std::istream& in, InputFormat format);

struct Entry {
  std::uint32_t user = 0;
  std::uint32_t item = 0;
  std::uint64_t count = 0;  // always >= 1 inside a Dataset

  bool operator==(const Entry&) const = default;
};

struct ItemObservation {
  std::uint32_t item;
  std::uint64_t count;
};

struct UserObservation {
  std::uint32_t user;
  std::uint64_t count;
};

// Bidirectional external<->dense id maps.
struct IdMaps {
  std::vector<std::string> user_ids;  // dense index -> external id
  std::vector<std::string> item_ids;
  std::unordered_map<std::string, std::uint32_t> user_index;
  std::unordered_map<std::string, std::uint32_t> item_index;

  static IdMaps numeric(std::uint32_t n_users, std::uint32_t n_items);
  bool operator==(const IdMaps& o) const {
    return user_ids == o.user_ids && item_ids == o.item_ids;
  }
};

// Deduplicated sparse count matrix with dual adjacency. Immutable once built;
// entries are kept sorted by (user, item) and both adjacencies index exactly
// the same entry set.
class Dataset {
 public:
  Dataset() = default;
  // Validates: indices in range, counts >= 1, no duplicate (user, item).
  Dataset(std::uint32_t n_users, std::uint32_t n_items,
          std::vector<Entry> entries, IdMaps ids);

  std::uint32_t n_users() const { return n_users_; }
  std::uint32_t n_items() const { return n_items_; }
  std::uint64_t nnz() const { return entries_.size(); }
  std::uint64_t total_count() const { return total_count_; }

  std::span<const Entry> entries() const { return entries_; }
  std::span<const ItemObservation> for_user(std::uint32_t u) const {
    return {by_user_.data() + user_offsets_[u],
            user_offsets_[u + 1] - user_offsets_[u]};
  }
  std::span<const UserObservation> for_item(std::uint32_t i) const {
    return {by_item_.data() + item_offsets_[i],
            item_offsets_[i + 1] - item_offsets_[i]};
  }
  // Number of distinct items consumed by u (the user's training activity).
  std::uint64_t user_activity(std::uint32_t u) const {
    return user_offsets_[u + 1] - user_offsets_[u];
  }
  std::uint64_t item_popularity(std::uint32_t i) const {
    return item_offsets_[i + 1] - item_offsets_[i];
  }

  const IdMaps& ids() const { return ids_; }

  bool operator==(const Dataset& o) const {
    return n_users_ == o.n_users_ && n_items_ == o.n_items_ &&
           entries_ == o.entries_ && ids_ == o.ids_;
  }

 private:
  std::uint32_t n_users_ = 0;
  std::uint32_t n_items_ = 0;
  std::uint64_t total_count_ = 0;
  std::vector<Entry> entries_;  // sorted by (user, item)
  std::vector<ItemObservation> by_user_;
  std::vector<std::size_t> user_offsets_;
  std::vector<UserObservation> by_item_;
  std::vector<std::size_t> item_offsets_;
  IdMaps ids_;
};

struct BuildReport {
  std::uint64_t records_in = 0;
  std::uint64_t duplicates_merged = 0;
  std::uint64_t dropped_below_threshold = 0;
  std::uint64_t entries_out = 0;
};

// Sums duplicate (user, item) records, applies the optional binarize
// threshold (count >= t becomes 1, count < t is dropped), and assigns dense
// ids to the surviving users/items in first-appearance order.
Dataset build_dataset(const RawRatings& raw,
                      std::optional<std::uint64_t> binarize = {},
                      BuildReport* report = nullptr);

struct SplitDataset {
  Dataset train;
  std::vector<Entry> validation;  // sorted by (user, item)
  std::vector<Entry> test;
  std::uint64_t seed = 0;
  double test_frac = 0.0;
  double valid_frac = 0.0;
};

// Uniformly random partition of the nonzero entries, seeded. valid_frac is
// taken from the post-test remainder. Users/items seen only in held-out
// parts keep their dense ids (their train rows are just empty).
SplitDataset split(const Dataset& ds, double test_frac, double valid_frac,
                   std::uint64_t seed);

// Directory layout: entries.tsv, users.tsv, items.tsv, meta.json. `extra`
// key/values (e.g. seed, binarize) are merged into meta.json.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir,
                  const std::string& extra_meta_json = "");
Dataset load_dataset(const std::filesystem::path& dir);

void save_entries_tsv(std::span<const Entry> entries,
                      const std::filesystem::path& file);
std::vector<Entry> load_entries_tsv(const std::filesystem::path& file);

}  // namespace pfrec

#endif
