#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "popcal/dataset.hpp"

namespace popcal {

enum class ItemGroup : unsigned char { Head = 0, Mid = 1, Tail = 2 };
enum class UserGroup : unsigned char { G1 = 0, G2 = 1, G3 = 2 };

inline const char* to_string(ItemGroup g) {
  switch (g) {
    case ItemGroup::Head: return "H";
    case ItemGroup::Mid: return "M";
    default: return "T";
  }
}
inline const char* to_string(UserGroup g) {
  switch (g) {
    case UserGroup::G1: return "G1";
    case UserGroup::G2: return "G2";
    default: return "G3";
  }
}

/// Per-item rating counts over the training set.
struct ItemPopularity {
  std::vector<std::int64_t> phi;  // indexed by item
  std::int64_t total = 0;
};

ItemPopularity compute_popularity(const RatingDataset& train);

/// Items split into Head / Mid / Tail by descending popularity:
/// H is the minimal prefix holding at least `head_share` of the rating
/// mass, T the maximal suffix holding at most `tail_share`.
struct PopularityPartition {
  std::vector<ItemGroup> group_of;    // indexed by item
  std::vector<std::uint32_t> by_rank; // items sorted by (phi desc, idx asc)
  std::size_t head_size = 0;
  std::size_t tail_size = 0;
  double share_h = 0, share_m = 0, share_t = 0;

  std::size_t count(ItemGroup g) const {
    if (g == ItemGroup::Head) return head_size;
    if (g == ItemGroup::Tail) return tail_size;
    return by_rank.size() - head_size - tail_size;
  }
};

PopularityPartition partition_items(const ItemPopularity& pop,
                                    double head_share = 0.2,
                                    double tail_share = 0.2);

/// A distribution over the three item groups (components sum to 1).
struct PopularityDistribution {
  std::array<double, 3> p{0.0, 0.0, 0.0};

  double& operator[](ItemGroup g) { return p[static_cast<int>(g)]; }
  double operator[](ItemGroup g) const { return p[static_cast<int>(g)]; }
  bool valid(double tol = 1e-9) const;
};

/// Group composition of a user's training profile. When `rating_weighted`
/// each item contributes its rating, otherwise a unit count.
PopularityDistribution profile_distribution(std::uint32_t user,
                                            const RatingDataset& train,
                                            const PopularityPartition& part,
                                            bool rating_weighted);

/// Users ranked by the ratio of Head items in their profile and cut into
/// equal thirds: G1 (blockbuster-focused) .. G3 (niche-focused).
struct UserGroupAssignment {
  std::vector<UserGroup> group_of;  // indexed by user
  std::vector<double> affinity;     // H-ratio used for the ordering

  std::array<std::size_t, 3> sizes() const;
};

UserGroupAssignment group_users(const RatingDataset& train,
                                const PopularityPartition& part,
                                bool rating_weighted = false);

}  // namespace popcal
