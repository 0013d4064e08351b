#include "popcal/popularity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace popcal {

ItemPopularity compute_popularity(const RatingDataset& train) {
  if (train.num_interactions() == 0)
    throw DataError("cannot compute popularity of an empty training set");
  ItemPopularity pop;
  pop.phi.assign(train.num_items(), 0);
  for (const Interaction& it : train.interactions()) pop.phi[it.item]++;
  pop.total = static_cast<std::int64_t>(train.num_interactions());
  return pop;
}

PopularityPartition partition_items(const ItemPopularity& pop,
                                    double head_share, double tail_share) {
  if (!(head_share > 0.0 && tail_share > 0.0 &&
        head_share + tail_share < 1.0))
    throw UsageError("partition shares must be positive and sum below 1");
  const std::size_t n = pop.phi.size();
  if (n < 3) throw DataError("catalog too small to partition (need >= 3)");

  PopularityPartition part;
  part.by_rank.resize(n);
  std::iota(part.by_rank.begin(), part.by_rank.end(), 0u);
  std::sort(part.by_rank.begin(), part.by_rank.end(),
            [&pop](std::uint32_t a, std::uint32_t b) {
              if (pop.phi[a] != pop.phi[b]) return pop.phi[a] > pop.phi[b];
              return a < b;
            });

  const double total = static_cast<double>(pop.total);
  const double eps = 1e-9 * total;

  // H: minimal prefix reaching head_share of the mass.
  std::int64_t cum = 0;
  std::size_t head_end = 0;
  for (std::size_t r = 0; r < n; ++r) {
    cum += pop.phi[part.by_rank[r]];
    if (static_cast<double>(cum) >= head_share * total - eps) {
      head_end = r + 1;
      break;
    }
  }
  std::int64_t head_mass = cum;

  // T: maximal suffix staying within tail_share, never touching H.
  std::int64_t tail_mass = 0;
  std::size_t tail_begin = n;
  for (std::size_t r = n; r-- > head_end;) {
    std::int64_t next = tail_mass + pop.phi[part.by_rank[r]];
    if (static_cast<double>(next) > tail_share * total + eps) break;
    tail_mass = next;
    tail_begin = r;
  }

  part.head_size = head_end;
  part.tail_size = n - tail_begin;
  part.share_h = static_cast<double>(head_mass) / total;
  part.share_t = static_cast<double>(tail_mass) / total;
  part.share_m = 1.0 - part.share_h - part.share_t;

  part.group_of.assign(n, ItemGroup::Mid);
  for (std::size_t r = 0; r < head_end; ++r)
    part.group_of[part.by_rank[r]] = ItemGroup::Head;
  for (std::size_t r = tail_begin; r < n; ++r)
    part.group_of[part.by_rank[r]] = ItemGroup::Tail;
  return part;
}

bool PopularityDistribution::valid(double tol) const {
  double sum = 0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) return false;
    sum += v;
  }
  return std::fabs(sum - 1.0) <= tol;
}

PopularityDistribution profile_distribution(std::uint32_t user,
                                            const RatingDataset& train,
                                            const PopularityPartition& part,
                                            bool rating_weighted) {
  auto profile = train.user_profile(user);
  if (profile.empty())
    throw DataError("user has no training interactions: " +
                    train.user_id(user));
  PopularityDistribution dist;
  double total = 0;
  for (const Interaction& it : profile) {
    double w = rating_weighted ? it.rating : 1.0;
    dist[part.group_of[it.item]] += w;
    total += w;
  }
  for (double& v : dist.p) v /= total;
  return dist;
}

std::array<std::size_t, 3> UserGroupAssignment::sizes() const {
  std::array<std::size_t, 3> out{0, 0, 0};
  for (UserGroup g : group_of) out[static_cast<int>(g)]++;
  return out;
}

UserGroupAssignment group_users(const RatingDataset& train,
                                const PopularityPartition& part,
                                bool rating_weighted) {
  const std::size_t n = train.num_users();
  UserGroupAssignment out;
  out.affinity.resize(n);
  out.group_of.assign(n, UserGroup::G2);

  for (std::uint32_t u = 0; u < n; ++u) {
    auto dist = profile_distribution(u, train, part, rating_weighted);
    out.affinity[u] = dist[ItemGroup::Head];
  }

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(),
            [&out](std::uint32_t a, std::uint32_t b) {
              if (out.affinity[a] != out.affinity[b])
                return out.affinity[a] > out.affinity[b];
              return a < b;
            });

  // equal thirds; the remainder goes to the leading groups
  const std::size_t base = n / 3, rem = n % 3;
  const std::size_t g1 = base + (rem > 0 ? 1 : 0);
  const std::size_t g2 = base + (rem > 1 ? 1 : 0);
  for (std::size_t r = 0; r < n; ++r) {
    UserGroup g = r < g1              ? UserGroup::G1
                  : r < g1 + g2       ? UserGroup::G2
                                      : UserGroup::G3;
    out.group_of[order[r]] = g;
  }
  return out;
}

}  // namespace popcal
