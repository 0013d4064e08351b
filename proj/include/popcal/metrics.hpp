#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "popcal/dataset.hpp"
#include "popcal/popularity.hpp"
#include "popcal/rerank.hpp"

namespace popcal {

/// One row of the evaluation report.
struct MetricReport {
  std::string method;
  double lambda = std::numeric_limits<double>::quiet_NaN();  // NaN for base
  double precision = 0;
  double agg_div = 0;
  double gini = 0;
  double arp = 0;      // phi normalized by |U| (the headline value)
  double arp_raw = 0;  // plain average rating count
  double upd = 0;
  std::array<double, 3> upd_group{0, 0, 0};
};

/// Mean over test users of |L_u intersect test_u| / n. Users without test
/// interactions are excluded. `min_rating` filters what counts as relevant.
double precision_at_n(const std::vector<RecommendationList>& lists,
                      const RatingDataset& test,
                      double min_rating = -std::numeric_limits<double>::infinity());

/// Average recommendation popularity: mean over lists of the mean phi of
/// their items. `normalize` divides phi by num_users first.
double average_rec_popularity(const std::vector<RecommendationList>& lists,
                              const ItemPopularity& pop, bool normalize,
                              std::size_t num_users);

/// |union of all lists| / catalog_size.
double aggregate_diversity(const std::vector<RecommendationList>& lists,
                           std::size_t catalog_size);

/// Gini index of recommendation frequency over the whole training catalog
/// (never-recommended items included): 0 = uniform, 1 = one item takes all.
double gini_index(const std::vector<RecommendationList>& lists,
                  std::size_t catalog_size);

struct UpdResult {
  double overall = 0;
  std::array<double, 3> per_group{0, 0, 0};
};

/// User Popularity Deviation: per-group mean of J(P_u, Q(L_u)), averaged
/// over the three groups with equal weight.
UpdResult user_popularity_deviation(
    const std::vector<RecommendationList>& lists,
    const std::vector<PopularityDistribution>& profiles,
    const UserGroupAssignment& groups, const PopularityPartition& part);

struct ExposureHistogram {
  std::vector<std::int64_t> count_by_item;  // indexed by item
  std::vector<std::int64_t> sorted_desc;    // counts sorted descending
};

ExposureHistogram exposure_histogram(
    const std::vector<RecommendationList>& lists, std::size_t catalog_size);

/// ratio[user group][item group]: mean over group members of the per-user
/// category ratios (of recommendation lists).
using GroupComposition = std::array<std::array<double, 3>, 3>;

GroupComposition group_composition(const std::vector<RecommendationList>& lists,
                                   const PopularityPartition& part,
                                   const UserGroupAssignment& groups);

/// Same, over training profiles (the "rating data" baseline bars).
GroupComposition profile_composition(const RatingDataset& train,
                                     const PopularityPartition& part,
                                     const UserGroupAssignment& groups);

}  // namespace popcal
