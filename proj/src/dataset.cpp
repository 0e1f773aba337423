#include "pfrec/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <random>
#include <tuple>

#include <nlohmann/json.hpp>

#include "pfrec/errors.hpp"
#include "src/io_util.hpp"

namespace pfrec {

using json = nlohmann::json;

InputFormat input_format_from_string(const std::string& s) {
  if (s == "tsv") return InputFormat::tsv;
  if (s == "csv") return InputFormat::csv;
  throw ArgumentError("unknown input format '" + s + "' (expected tsv or csv)");
}

namespace {

std::uint64_t parse_count(std::string_view field, std::uint64_t line) {
  std::uint64_t value = 0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw ParseError("value '" + std::string(field) +
                         "' is not a non-negative integer",
                     line);
  return value;
}

std::uint32_t parse_index(std::string_view field, std::uint64_t line) {
  std::uint32_t value = 0;
  auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw ParseError("index '" + std::string(field) + "' is not an integer",
                     line);
  return value;
}

// Splits on the separator; trims a trailing '\r'.
std::vector<std::string_view> split_fields(std::string_view s, char sep) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(s.substr(start));
      break;
    }
    fields.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

}  // namespace

RawRatings parse_ratings(std::istream& in, InputFormat format) {
  const char sep = format == InputFormat::tsv ? '\t' : ',';
  RawRatings out;
  std::string line;
  std::uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    out.lines_read = lineno;
    if (line.empty() || line == "\r") continue;
    if (line.front() == '#') continue;  // header/comment
    auto fields = split_fields(line, sep);
    if (fields.size() < 2 || fields.size() > 3)
      throw ParseError("expected 2 or 3 fields, got " +
                           std::to_string(fields.size()),
                       lineno);
    if (fields[0].empty() || fields[1].empty())
      throw ParseError("empty user or item id", lineno);
    std::uint64_t value =
        fields.size() == 3 ? parse_count(fields[2], lineno) : 1;
    if (value == 0) {
      ++out.zeros_dropped;
      continue;
    }
    out.records.push_back(
        {std::string(fields[0]), std::string(fields[1]), value});
  }
  return out;
}

IdMaps IdMaps::numeric(std::uint32_t n_users, std::uint32_t n_items) {
  IdMaps ids;
  ids.user_ids.reserve(n_users);
  ids.item_ids.reserve(n_items);
  for (std::uint32_t u = 0; u < n_users; ++u) {
    ids.user_ids.push_back(std::to_string(u));
    ids.user_index.emplace(ids.user_ids.back(), u);
  }
  for (std::uint32_t i = 0; i < n_items; ++i) {
    ids.item_ids.push_back(std::to_string(i));
    ids.item_index.emplace(ids.item_ids.back(), i);
  }
  return ids;
}

Dataset::Dataset(std::uint32_t n_users, std::uint32_t n_items,
                 std::vector<Entry> entries, IdMaps ids)
    : n_users_(n_users), n_items_(n_items), entries_(std::move(entries)),
      ids_(std::move(ids)) {
  std::sort(entries_.begin(), entries_.end(),
            [](const Entry& a, const Entry& b) {
              return std::tie(a.user, a.item) < std::tie(b.user, b.item);
            });
  for (std::size_t j = 0; j < entries_.size(); ++j) {
    const Entry& e = entries_[j];
    if (e.user >= n_users_ || e.item >= n_items_)
      throw ArgumentError("entry index out of range");
    if (e.count == 0) throw ArgumentError("zero count in dataset entry");
    if (j > 0 && entries_[j - 1].user == e.user &&
        entries_[j - 1].item == e.item)
      throw ArgumentError("duplicate (user, item) entry");
  }

  user_offsets_.assign(std::size_t(n_users_) + 1, 0);
  item_offsets_.assign(std::size_t(n_items_) + 1, 0);
  for (const Entry& e : entries_) {
    ++user_offsets_[e.user + 1];
    ++item_offsets_[e.item + 1];
    total_count_ += e.count;
  }
  std::partial_sum(user_offsets_.begin(), user_offsets_.end(),
                   user_offsets_.begin());
  std::partial_sum(item_offsets_.begin(), item_offsets_.end(),
                   item_offsets_.begin());

  by_user_.resize(entries_.size());
  by_item_.resize(entries_.size());
  std::vector<std::size_t> cursor(item_offsets_.begin(),
                                  item_offsets_.end() - 1);
  std::size_t pos = 0;
  for (const Entry& e : entries_) {
    by_user_[pos++] = {e.item, e.count};
    by_item_[cursor[e.item]++] = {e.user, e.count};
  }

  // Cross-check: both adjacencies must index the same entry set.
  std::uint64_t by_item_total = 0;
  for (const UserObservation& o : by_item_) by_item_total += o.count;
  if (by_item_total != total_count_)
    throw ArgumentError("adjacency total-count mismatch");
}

Dataset build_dataset(const RawRatings& raw,
                      std::optional<std::uint64_t> binarize,
                      BuildReport* report) {
  if (raw.records.empty()) throw EmptyDatasetError("no rating records");

  BuildReport rep;
  rep.records_in = raw.records.size();

  // Sum duplicates, keeping pair first-appearance order.
  struct Agg {
    const std::string* user;
    const std::string* item;
    std::uint64_t sum;
  };
  std::unordered_map<std::string, std::size_t> pair_index;
  std::vector<Agg> aggregated;
  pair_index.reserve(raw.records.size() * 2);
  for (const RawRecord& r : raw.records) {
    std::string key = r.user + '\t' + r.item;
    auto [it, inserted] = pair_index.emplace(std::move(key), aggregated.size());
    if (inserted) {
      aggregated.push_back({&r.user, &r.item, r.value});
    } else {
      aggregated[it->second].sum += r.value;
      ++rep.duplicates_merged;
    }
  }

  IdMaps ids;
  std::vector<Entry> entries;
  entries.reserve(aggregated.size());
  for (const Agg& agg : aggregated) {
    std::uint64_t y = agg.sum;
    if (binarize) {
      if (y < *binarize) {
        ++rep.dropped_below_threshold;
        continue;
      }
      y = 1;
    }
    auto [uit, unew] =
        ids.user_index.emplace(*agg.user, std::uint32_t(ids.user_ids.size()));
    if (unew) ids.user_ids.push_back(*agg.user);
    auto [iit, inew] =
        ids.item_index.emplace(*agg.item, std::uint32_t(ids.item_ids.size()));
    if (inew) ids.item_ids.push_back(*agg.item);
    entries.push_back({uit->second, iit->second, y});
  }
  if (entries.empty())
    throw EmptyDatasetError("no entries left after thresholding");

  rep.entries_out = entries.size();
  if (report) *report = rep;
  const auto n_users = std::uint32_t(ids.user_ids.size());
  const auto n_items = std::uint32_t(ids.item_ids.size());
  return Dataset(n_users, n_items, std::move(entries), std::move(ids));
}

SplitDataset split(const Dataset& ds, double test_frac, double valid_frac,
                   std::uint64_t seed) {
  if (!(test_frac >= 0.0) || !(valid_frac >= 0.0) ||
      !(test_frac + valid_frac < 1.0))
    throw ArgumentError("split fractions must be non-negative and sum below 1");

  std::vector<std::size_t> order(ds.nnz());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const std::uint64_t n_test = std::llround(test_frac * double(ds.nnz()));
  const std::uint64_t n_valid =
      std::llround(valid_frac * double(ds.nnz() - n_test));

  auto sorted_subset = [&](std::size_t from, std::size_t count) {
    std::vector<Entry> part;
    part.reserve(count);
    for (std::size_t j = from; j < from + count; ++j)
      part.push_back(ds.entries()[order[j]]);
    std::sort(part.begin(), part.end(), [](const Entry& a, const Entry& b) {
      return std::tie(a.user, a.item) < std::tie(b.user, b.item);
    });
    return part;
  };

  SplitDataset out;
  out.seed = seed;
  out.test_frac = test_frac;
  out.valid_frac = valid_frac;
  out.test = sorted_subset(0, n_test);
  out.validation = sorted_subset(n_test, n_valid);
  std::vector<Entry> train_entries =
      sorted_subset(n_test + n_valid, ds.nnz() - n_test - n_valid);
  out.train = Dataset(ds.n_users(), ds.n_items(), std::move(train_entries),
                      ds.ids());
  return out;
}

void save_entries_tsv(std::span<const Entry> entries,
                      const std::filesystem::path& file) {
  auto out = open_output(file);
  for (const Entry& e : entries)
    out << e.user << '\t' << e.item << '\t' << e.count << '\n';
}

std::vector<Entry> load_entries_tsv(const std::filesystem::path& file) {
  auto in = open_input(file);
  std::vector<Entry> entries;
  std::string line;
  std::uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split_fields(line, '\t');
    if (fields.size() != 3)
      throw ParseError("expected 3 fields in " + file.string(), lineno);
    entries.push_back({parse_index(fields[0], lineno),
                       parse_index(fields[1], lineno),
                       parse_count(fields[2], lineno)});
  }
  return entries;
}

namespace {

void save_id_map(const std::vector<std::string>& ids,
                 const std::filesystem::path& file) {
  auto out = open_output(file);
  for (std::size_t j = 0; j < ids.size(); ++j)
    out << j << '\t' << ids[j] << '\n';
}

std::vector<std::string> load_id_map(const std::filesystem::path& file) {
  auto in = open_input(file);
  std::vector<std::string> ids;
  std::string line;
  std::uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split_fields(line, '\t');
    if (fields.size() != 2)
      throw ParseError("expected 2 fields in " + file.string(), lineno);
    if (parse_index(fields[0], lineno) != ids.size())
      throw ParseError("non-contiguous dense index in " + file.string(),
                       lineno);
    ids.emplace_back(fields[1]);
  }
  return ids;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::filesystem::path& dir,
                  const std::string& extra_meta_json) {
  std::filesystem::create_directories(dir);
  save_entries_tsv(ds.entries(), dir / "entries.tsv");
  save_id_map(ds.ids().user_ids, dir / "users.tsv");
  save_id_map(ds.ids().item_ids, dir / "items.tsv");

  json meta = {{"n_users", ds.n_users()},
               {"n_items", ds.n_items()},
               {"nnz", ds.nnz()},
               {"total_count", ds.total_count()}};
  if (!extra_meta_json.empty()) {
    json extra = json::parse(extra_meta_json);
    for (auto& [key, value] : extra.items()) meta[key] = value;
  }
  open_output(dir / "meta.json") << meta.dump(2) << '\n';
}

Dataset load_dataset(const std::filesystem::path& dir) {
  json meta = json::parse(open_input(dir / "meta.json"));
  IdMaps ids;
  ids.user_ids = load_id_map(dir / "users.tsv");
  ids.item_ids = load_id_map(dir / "items.tsv");
  for (std::uint32_t u = 0; u < ids.user_ids.size(); ++u)
    ids.user_index.emplace(ids.user_ids[u], u);
  for (std::uint32_t i = 0; i < ids.item_ids.size(); ++i)
    ids.item_index.emplace(ids.item_ids[i], i);
  Dataset ds(meta.at("n_users").get<std::uint32_t>(),
             meta.at("n_items").get<std::uint32_t>(),
             load_entries_tsv(dir / "entries.tsv"), std::move(ids));
  if (ds.nnz() != meta.at("nnz").get<std::uint64_t>())
    throw ParseError("entry count disagrees with meta.json in " +
                     dir.string());
  return ds;
}

}  // namespace pfrec
