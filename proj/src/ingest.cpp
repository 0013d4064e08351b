#include "popcal/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>

namespace popcal {

namespace {

bool parse_i64(const std::string& s, std::int64_t* out) {
  if (s.empty()) return false;
  const char* b = s.c_str();
  char* end = nullptr;
  errno = 0;
  long long v = std::strtoll(b, &end, 10);
  if (errno != 0 || end != b + s.size()) return false;
  *out = v;
  return true;
}

bool parse_f64(const std::string& s, double* out) {
  if (s.empty()) return false;
  const char* b = s.c_str();
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(b, &end);
  if (errno != 0 || end != b + s.size() || !std::isfinite(v)) return false;
  *out = v;
  return true;
}

std::vector<std::string> split_on(const std::string& line,
                                  const std::string& sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t next = line.find(sep, pos);
    if (next == std::string::npos) {
      out.push_back(line.substr(pos));
      break;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + sep.size();
  }
  return out;
}

void strip_cr(std::string* line) {
  if (!line->empty() && line->back() == '\r') line->pop_back();
}

}  // namespace

RatingDataset parse_movielens(const std::string& path, RatingScale scale,
                              ParseStats* stats) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open ratings file: " + path);

  DatasetBuilder builder(scale);
  ParseStats st;
  std::string line;
  while (std::getline(in, line)) {
    strip_cr(&line);
    if (line.empty()) continue;
    st.lines++;
    auto fields = split_on(line, "::");
    std::int64_t user_raw, item_raw, ts;
    double rating;
    if (fields.size() != 4 || !parse_i64(fields[0], &user_raw) ||
        !parse_i64(fields[1], &item_raw) || !parse_f64(fields[2], &rating) ||
        !parse_i64(fields[3], &ts) || rating != std::floor(rating) ||
        rating < scale.min || rating > scale.max) {
      st.malformed++;
      continue;
    }
    std::uint32_t u = builder.intern_user(fields[0]);
    std::uint32_t i = builder.intern_item(fields[1]);
    builder.add(u, i, rating, ts);
  }
  if (stats) *stats = st;
  if (builder.size() == 0) throw DataError("no interactions in " + path);
  if (st.malformed * 100 > st.lines)
    throw DataError("more than 1% malformed lines in " + path + " (" +
                    std::to_string(st.malformed) + "/" +
                    std::to_string(st.lines) + ")");
  return builder.build_last_wins();
}

PlayCountTable parse_playcounts(const std::string& path, bool skip_header,
                                ParseStats* stats) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open play-count file: " + path);

  PlayCountTable table;
  std::unordered_map<std::string, std::uint32_t> user_lookup, item_lookup;
  // (user, item) -> accumulated count
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::int64_t> acc;

  ParseStats st;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    strip_cr(&line);
    if (first && skip_header) {
      first = false;
      continue;
    }
    first = false;
    if (line.empty()) continue;
    st.lines++;
    auto fields = split_on(line, "\t");
    std::int64_t count;
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty() ||
        !parse_i64(fields[2], &count) || count <= 0) {
      st.malformed++;
      continue;
    }
    auto intern = [](std::unordered_map<std::string, std::uint32_t>& lookup,
                     std::vector<std::string>& ids, const std::string& id) {
      auto it = lookup.find(id);
      if (it != lookup.end()) return it->second;
      std::uint32_t idx = static_cast<std::uint32_t>(ids.size());
      ids.push_back(id);
      lookup.emplace(id, idx);
      return idx;
    };
    std::uint32_t u = intern(user_lookup, table.user_ids, fields[0]);
    std::uint32_t i = intern(item_lookup, table.item_ids, fields[1]);
    acc[{u, i}] += count;
  }
  if (stats) *stats = st;
  if (acc.empty()) throw DataError("no interactions in " + path);
  table.entries.reserve(acc.size());
  for (const auto& [key, count] : acc)
    table.entries.push_back({key.first, key.second, count});
  return table;
}

RatingDataset counts_to_ratings(const PlayCountTable& counts,
                                RatingScale scale) {
  if (counts.entries.empty()) throw DataError("no interactions");
  if (scale.max <= scale.min)
    throw UsageError("rating scale max must exceed min");

  // entries are sorted by (user, item); group per user.
  std::vector<Interaction> inters;
  inters.reserve(counts.entries.size());
  const auto& es = counts.entries;
  const double levels = scale.max - scale.min + 1.0;

  std::size_t begin = 0;
  while (begin < es.size()) {
    std::size_t end = begin;
    while (end < es.size() && es[end].user == es[begin].user) end++;
    const std::size_t n = end - begin;

    std::vector<std::int64_t> sorted(n);
    for (std::size_t j = 0; j < n; ++j) sorted[j] = es[begin + j].count;
    std::sort(sorted.begin(), sorted.end());

    for (std::size_t j = 0; j < n; ++j) {
      std::int64_t c = es[begin + j].count;
      // mid-rank over the count multiset; equal counts share a rank, which
      // keeps the map monotone and a degenerate profile at the midpoint
      auto lo = std::lower_bound(sorted.begin(), sorted.end(), c);
      auto hi = std::upper_bound(sorted.begin(), sorted.end(), c);
      double midrank =
          (static_cast<double>(lo - sorted.begin()) + 1.0 +
           static_cast<double>(hi - sorted.begin())) /
          2.0;
      double q = (midrank - 0.5) / static_cast<double>(n);
      double rating = scale.min + std::floor(q * levels);
      rating = std::min(scale.max, std::max(scale.min, rating));
      inters.push_back(
          {es[begin + j].user, es[begin + j].item, rating,
           Interaction::kNoTimestamp});
    }
    begin = end;
  }
  return RatingDataset(counts.user_ids, counts.item_ids, std::move(inters),
                       scale);
}

RatingDataset filter_min_profile(const RatingDataset& ds, std::size_t k) {
  if (k < 1) throw UsageError("min profile size must be >= 1");

  std::vector<bool> keep_user(ds.num_users(), false);
  for (std::uint32_t u = 0; u < ds.num_users(); ++u)
    keep_user[u] = ds.user_profile(u).size() >= k;

  std::vector<std::int64_t> item_count(ds.num_items(), 0);
  std::size_t kept_rows = 0;
  for (const Interaction& it : ds.interactions()) {
    if (!keep_user[it.user]) continue;
    item_count[it.item]++;
    kept_rows++;
  }
  if (kept_rows == 0) throw DataError("filter removed all users");

  std::vector<std::uint32_t> user_map(ds.num_users(), UINT32_MAX);
  std::vector<std::uint32_t> item_map(ds.num_items(), UINT32_MAX);
  std::vector<std::string> user_ids, item_ids;
  for (std::uint32_t u = 0; u < ds.num_users(); ++u) {
    if (!keep_user[u]) continue;
    user_map[u] = static_cast<std::uint32_t>(user_ids.size());
    user_ids.push_back(ds.user_id(u));
  }
  for (std::uint32_t i = 0; i < ds.num_items(); ++i) {
    if (item_count[i] == 0) continue;
    item_map[i] = static_cast<std::uint32_t>(item_ids.size());
    item_ids.push_back(ds.item_id(i));
  }

  std::vector<Interaction> inters;
  inters.reserve(kept_rows);
  for (const Interaction& it : ds.interactions()) {
    if (!keep_user[it.user]) continue;
    inters.push_back(
        {user_map[it.user], item_map[it.item], it.rating, it.timestamp});
  }
  return RatingDataset(std::move(user_ids), std::move(item_ids),
                       std::move(inters), ds.scale());
}

SplitDataset split_train_test(const RatingDataset& ds, double train_ratio,
                              std::uint64_t seed) {
  if (!(train_ratio > 0.0 && train_ratio < 1.0))
    throw UsageError("train ratio must be in (0,1)");

  std::vector<char> to_train(ds.num_interactions(), 0);
  const auto& all = ds.interactions();
  std::size_t offset = 0;
  for (std::uint32_t u = 0; u < ds.num_users(); ++u) {
    auto profile = ds.user_profile(u);
    const std::size_t n = profile.size();
    std::vector<std::uint32_t> perm(n);
    for (std::size_t j = 0; j < n; ++j)
      perm[j] = static_cast<std::uint32_t>(j);
    Rng rng(splitmix64(seed ^ splitmix64(0xA0B1C2D3ULL + u)));
    for (std::size_t j = n; j > 1; --j) {
      std::size_t r = static_cast<std::size_t>(rng.below(j));
      std::swap(perm[j - 1], perm[r]);
    }
    auto k = static_cast<std::size_t>(
        std::ceil(train_ratio * static_cast<double>(n) - 1e-9));
    if (k < 1) k = 1;
    if (k > n) k = n;
    for (std::size_t j = 0; j < k; ++j) to_train[offset + perm[j]] = 1;
    offset += n;
  }

  // train keeps every user; its item table drops items with no train rows.
  std::vector<std::int64_t> item_train_count(ds.num_items(), 0);
  std::size_t train_rows = 0;
  for (std::size_t r = 0; r < all.size(); ++r)
    if (to_train[r]) {
      item_train_count[all[r].item]++;
      train_rows++;
    }

  std::vector<std::uint32_t> item_map(ds.num_items(), UINT32_MAX);
  std::vector<std::string> item_ids;
  for (std::uint32_t i = 0; i < ds.num_items(); ++i) {
    if (item_train_count[i] == 0) continue;
    item_map[i] = static_cast<std::uint32_t>(item_ids.size());
    item_ids.push_back(ds.item_id(i));
  }

  std::vector<Interaction> train_rows_v, test_rows_v;
  train_rows_v.reserve(train_rows);
  test_rows_v.reserve(all.size() - train_rows);
  std::size_t dropped = 0;
  for (std::size_t r = 0; r < all.size(); ++r) {
    const Interaction& it = all[r];
    if (item_map[it.item] == UINT32_MAX) {
      // item has no train occurrence anywhere; it cannot be recommended
      dropped++;
      continue;
    }
    Interaction moved{it.user, item_map[it.item], it.rating, it.timestamp};
    if (to_train[r])
      train_rows_v.push_back(moved);
    else
      test_rows_v.push_back(moved);
  }

  SplitDataset out;
  out.seed = seed;
  out.train_ratio = train_ratio;
  out.dropped_test_rows = dropped;
  out.train = RatingDataset(ds.user_ids(), item_ids, std::move(train_rows_v),
                            ds.scale());
  out.test = RatingDataset(ds.user_ids(), item_ids, std::move(test_rows_v),
                           ds.scale());

  if (out.train.num_interactions() + out.test.num_interactions() + dropped !=
      ds.num_interactions())
    throw NumericError("split does not partition the dataset");
  return out;
}

}  // namespace popcal
