#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "popcal/popularity.hpp"
#include "popcal/recommender.hpp"

namespace popcal {

/// Jensen-Shannon divergence, base-2 logs, so the value lies in [0,1].
/// Symmetric; zero iff the distributions coincide; 0*log0 contributes 0.
double js_divergence(const PopularityDistribution& a,
                     const PopularityDistribution& b);

struct RerankConfig {
  double lambda = 0.5;  // 0 = pure relevance for every method
  std::size_t n = 10;

  // FS: the binding protected share is lambda * fs_target_share, so the
  // prefix constraint vanishes at lambda = 0.
  double fs_target_share = 0.8;
  double fs_alpha = 0.1;

  // XQ: saturating category gain (counts deplete linearly in n) instead of
  // the binary covered/uncovered product.
  bool xq_smooth = true;
};

struct RecommendationList {
  std::uint32_t user = 0;
  std::vector<std::uint32_t> items;     // length n, ranked
  bool constraint_infeasible = false;   // FS ran out of protected items
};

/// Unweighted category ratios of a recommendation list.
PopularityDistribution list_distribution(std::span<const std::uint32_t> items,
                                         const PopularityPartition& part);

/// Min-max normalized copy of the candidate scores (all 1.0 when tied).
std::vector<double> normalized_scores(const ScoredCandidates& cands);

/// Greedy maximization of (1-lambda)*Rel(L) - lambda*J(P, Q(L)) where Rel is
/// the sum of normalized predicted scores and P the user's rating-weighted
/// profile distribution.
RecommendationList rerank_cp(const ScoredCandidates& cands,
                             const PopularityDistribution& profile,
                             const PopularityPartition& part,
                             const RerankConfig& cfg);

/// Objective value of an item set under the calibration trade-off; shared by
/// the greedy and by exhaustive test oracles.
double cp_objective(std::span<const std::uint32_t> items,
                    std::span<const double> norm_scores,
                    std::span<const std::uint32_t> cand_items,
                    const PopularityDistribution& profile,
                    const PopularityPartition& part, double lambda);

/// Two-category (H vs M+T) diversification in the xQuAD style: greedy gain
/// (1-lambda)*score + lambda * p(c|u) * remaining-coverage of c.
RecommendationList rerank_xq(const ScoredCandidates& cands,
                             double profile_head_ratio,
                             const PopularityPartition& part,
                             const RerankConfig& cfg);

/// Minimum protected count required in each prefix 1..n so that the
/// protected share is plausibly >= p at significance alpha (binomial test).
std::vector<int> fair_min_protected_table(std::size_t n, double p,
                                          double alpha);

/// FA*IR-style merge of protected (M+T) and unprotected (H) score queues
/// under the prefix constraint table.
RecommendationList rerank_fair(const ScoredCandidates& cands,
                               const PopularityPartition& part,
                               const RerankConfig& cfg);

/// Global assignment: n items per user from their candidates, minimizing
/// blended rank-relevance loss and discrepancy between realized item
/// exposures and `targets` (min-cost flow). lambda = 0 is exactly top-n.
struct DmResult {
  std::vector<RecommendationList> lists;
  std::int64_t discrepancy = 0;  // sum |exposure - target| over items
  bool targets_missed = false;
};

DmResult rerank_dm(const std::vector<ScoredCandidates>& all_cands,
                   std::span<const std::int64_t> targets,
                   const RerankConfig& cfg);

/// Uniform exposure targets: |U|*n spread over the catalog by
/// largest remainder (ties to lower item index).
std::vector<std::int64_t> uniform_exposure_targets(std::size_t catalog_size,
                                                   std::size_t num_users,
                                                   std::size_t n);

/// Exposure counts of plain top-n lists; the fixed-point target for DM.
std::vector<std::int64_t> top_n_exposure_targets(
    const std::vector<ScoredCandidates>& all_cands, std::size_t catalog_size,
    std::size_t n);

/// Truncation to the n highest-scored candidates (the lambda = 0 limit).
RecommendationList top_n_of(const ScoredCandidates& cands, std::size_t n);

}  // namespace popcal
