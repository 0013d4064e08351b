#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "popcal/dataset.hpp"

namespace popcal {

struct ParseStats {
  std::size_t lines = 0;      // non-empty input lines seen
  std::size_t malformed = 0;  // skipped (bad format / out-of-scale / count<=0)
};

/// MovieLens ratings file: `UserID::MovieID::Rating::Timestamp`, integer
/// ratings within the given scale. Malformed lines are skipped and counted;
/// more than 1% malformed is a data error.
RatingDataset parse_movielens(const std::string& path,
                              RatingScale scale = {1.0, 5.0},
                              ParseStats* stats = nullptr);

/// Aggregated play counts per (user, item): repeated pairs are summed.
struct PlayCountTable {
  struct Entry {
    std::uint32_t user;
    std::uint32_t item;
    std::int64_t count;
  };
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
  std::vector<Entry> entries;  // sorted by (user, item)

  std::size_t num_users() const { return user_ids.size(); }
  std::size_t num_items() const { return item_ids.size(); }
};

/// Tab-separated `user \t item \t count`, count >= 1. Rows with a
/// non-positive or unparseable count are rejected and counted.
PlayCountTable parse_playcounts(const std::string& path,
                                bool skip_header = false,
                                ParseStats* stats = nullptr);

/// Per-user quantile mapping of play counts onto the rating scale.
/// Monotone in count within each profile; a profile with a single distinct
/// count collapses to the scale midpoint.
RatingDataset counts_to_ratings(const PlayCountTable& counts,
                                RatingScale scale = {1.0, 5.0});

/// Drops users with fewer than k interactions (single pass), then drops
/// items left with no interactions and re-densifies both index spaces.
RatingDataset filter_min_profile(const RatingDataset& ds, std::size_t k);

/// Per-user stratified split: ceil(train_ratio * |profile|) interactions of
/// every user go to train, the remainder to test. Deterministic in `seed`.
SplitDataset split_train_test(const RatingDataset& ds, double train_ratio,
                              std::uint64_t seed);

}  // namespace popcal
