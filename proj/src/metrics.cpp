#include "popcal/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace popcal {

double precision_at_n(const std::vector<RecommendationList>& lists,
                      const RatingDataset& test, double min_rating) {
  KahanSum sum;
  std::size_t counted = 0;
  for (const RecommendationList& list : lists) {
    auto held_out = test.user_profile(list.user);
    std::size_t relevant = 0;
    for (const Interaction& it : held_out)
      if (it.rating >= min_rating) relevant++;
    if (relevant == 0) continue;  // user absent from test
    std::size_t hits = 0;
    for (std::uint32_t item : list.items)
      for (const Interaction& it : held_out)
        if (it.item == item && it.rating >= min_rating) {
          hits++;
          break;
        }
    sum.add(static_cast<double>(hits) / static_cast<double>(list.items.size()));
    counted++;
  }
  if (counted == 0) return 0.0;
  return sum.value() / static_cast<double>(counted);
}

double average_rec_popularity(const std::vector<RecommendationList>& lists,
                              const ItemPopularity& pop, bool normalize,
                              std::size_t num_users) {
  if (lists.empty()) throw DataError("no lists to evaluate");
  const double denom = normalize ? static_cast<double>(num_users) : 1.0;
  KahanSum sum;
  for (const RecommendationList& list : lists) {
    if (list.items.empty()) throw DataError("empty recommendation list");
    KahanSum inner;
    for (std::uint32_t item : list.items)
      inner.add(static_cast<double>(pop.phi[item]) / denom);
    sum.add(inner.value() / static_cast<double>(list.items.size()));
  }
  return sum.value() / static_cast<double>(lists.size());
}

double aggregate_diversity(const std::vector<RecommendationList>& lists,
                           std::size_t catalog_size) {
  std::vector<char> seen(catalog_size, 0);
  std::size_t unique = 0;
  for (const RecommendationList& list : lists)
    for (std::uint32_t item : list.items)
      if (!seen[item]) {
        seen[item] = 1;
        unique++;
      }
  return static_cast<double>(unique) / static_cast<double>(catalog_size);
}

double gini_index(const std::vector<RecommendationList>& lists,
                  std::size_t catalog_size) {
  if (catalog_size < 2) throw DataError("gini needs a catalog of >= 2 items");
  std::vector<std::int64_t> freq(catalog_size, 0);
  std::int64_t total = 0;
  for (const RecommendationList& list : lists)
    for (std::uint32_t item : list.items) {
      freq[item]++;
      total++;
    }
  if (total == 0) throw DataError("no recommendations to measure");
  std::sort(freq.begin(), freq.end());  // ascending occurrence

  // sum_k (2k - N - 1) * c_k stays integral, so the index is exact
  const std::int64_t n = static_cast<std::int64_t>(catalog_size);
  std::int64_t acc = 0;
  for (std::int64_t k = 1; k <= n; ++k)
    acc += (2 * k - n - 1) * freq[static_cast<std::size_t>(k - 1)];
  return static_cast<double>(acc) /
         (static_cast<double>(n - 1) * static_cast<double>(total));
}

UpdResult user_popularity_deviation(
    const std::vector<RecommendationList>& lists,
    const std::vector<PopularityDistribution>& profiles,
    const UserGroupAssignment& groups, const PopularityPartition& part) {
  std::array<KahanSum, 3> sums;
  std::array<std::size_t, 3> counts{0, 0, 0};
  for (const RecommendationList& list : lists) {
    const int g = static_cast<int>(groups.group_of[list.user]);
    const double j =
        js_divergence(profiles[list.user], list_distribution(list.items, part));
    sums[g].add(j);
    counts[g]++;
  }
  UpdResult out;
  KahanSum overall;
  for (int g = 0; g < 3; ++g) {
    if (counts[g] == 0)
      throw DataError("user group without evaluated lists");
    out.per_group[g] = sums[g].value() / static_cast<double>(counts[g]);
    overall.add(out.per_group[g]);
  }
  out.overall = overall.value() / 3.0;
  return out;
}

ExposureHistogram exposure_histogram(
    const std::vector<RecommendationList>& lists, std::size_t catalog_size) {
  ExposureHistogram h;
  h.count_by_item.assign(catalog_size, 0);
  for (const RecommendationList& list : lists)
    for (std::uint32_t item : list.items) h.count_by_item[item]++;
  h.sorted_desc = h.count_by_item;
  std::sort(h.sorted_desc.begin(), h.sorted_desc.end(),
            std::greater<std::int64_t>());
  return h;
}

GroupComposition group_composition(const std::vector<RecommendationList>& lists,
                                   const PopularityPartition& part,
                                   const UserGroupAssignment& groups) {
  std::array<std::array<KahanSum, 3>, 3> sums;
  std::array<std::size_t, 3> counts{0, 0, 0};
  for (const RecommendationList& list : lists) {
    const int g = static_cast<int>(groups.group_of[list.user]);
    PopularityDistribution q = list_distribution(list.items, part);
    for (int c = 0; c < 3; ++c) sums[g][c].add(q.p[c]);
    counts[g]++;
  }
  GroupComposition out{};
  for (int g = 0; g < 3; ++g)
    for (int c = 0; c < 3; ++c)
      out[g][c] = counts[g] == 0
                      ? 0.0
                      : sums[g][c].value() / static_cast<double>(counts[g]);
  return out;
}

GroupComposition profile_composition(const RatingDataset& train,
                                     const PopularityPartition& part,
                                     const UserGroupAssignment& groups) {
  std::array<std::array<KahanSum, 3>, 3> sums;
  std::array<std::size_t, 3> counts{0, 0, 0};
  for (std::uint32_t u = 0; u < train.num_users(); ++u) {
    const int g = static_cast<int>(groups.group_of[u]);
    PopularityDistribution p = profile_distribution(u, train, part, false);
    for (int c = 0; c < 3; ++c) sums[g][c].add(p.p[c]);
    counts[g]++;
  }
  GroupComposition out{};
  for (int g = 0; g < 3; ++g)
    for (int c = 0; c < 3; ++c)
      out[g][c] = counts[g] == 0
                      ? 0.0
                      : sums[g][c].value() / static_cast<double>(counts[g]);
  return out;
}

}  // namespace popcal
