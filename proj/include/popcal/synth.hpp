#pragma once

#include <cstdint>
#include <string>

namespace popcal {

/// Deterministic corpus generators. Item popularity follows a
/// Zipf-Mandelbrot curve shaped so that the cumulative-share crossing used
/// by the head/tail partition lands on a designed rank with a guard band,
/// and users carry heterogeneous popularity affinity so the user-group
/// machinery has real structure to find.

struct MovieLensSynthConfig {
  std::uint64_t seed = 7;
  std::size_t users = 6040;
  std::size_t items = 3706;
  std::size_t interactions = 1000209;
  std::size_t head_items = 111;    // designed 20%-mass crossing rank
  double head_margin = 0.0008;     // share guard band around the crossing
  std::size_t max_head_per_user = 95;
  std::size_t min_profile = 20;
  std::size_t max_profile = 1000;

  // uniform shrink for fast test corpora
  MovieLensSynthConfig scaled(double f) const;
};

/// Writes `UserID::MovieID::Rating::Timestamp` lines.
void synth_movielens(const std::string& path, const MovieLensSynthConfig& cfg);

struct PlayCountSynthConfig {
  std::uint64_t seed = 11;
  std::size_t users = 2697;   // survivors of the min-20 filter
  std::size_t items = 6006;
  std::size_t pairs = 274707; // distinct (user,item) pairs among survivors
  std::size_t chaff_users = 120;  // short profiles removed by the filter
  std::size_t head_items = 150;
  double head_margin = 0.0012;
  std::size_t max_head_per_user = 120;
  std::size_t min_profile = 20;
  std::size_t max_profile = 900;

  PlayCountSynthConfig scaled(double f) const;
};

/// Writes `user \t item \t count` lines; a sprinkle of duplicate pair rows
/// exercises count aggregation.
void synth_playcounts(const std::string& path, const PlayCountSynthConfig& cfg);

}  // namespace popcal
