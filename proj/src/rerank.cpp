#include "popcal/rerank.hpp"

#include <algorithm>
#include <cmath>

#include "popcal/mincostflow.hpp"

namespace popcal {

namespace {

double xlog2x_over(double x, double m) {
  // x * log2(x / m), zero when x == 0
  if (x <= 0.0) return 0.0;
  return x * std::log2(x / m);
}

void require_enough(const ScoredCandidates& cands, std::size_t n) {
  if (cands.items.size() < n)
    throw DataError("candidate list shorter than requested output length");
  if (n < 1) throw UsageError("output list length must be >= 1");
}

}  // namespace

double js_divergence(const PopularityDistribution& a,
                     const PopularityDistribution& b) {
  double sum = 0.0;
  for (int c = 0; c < 3; ++c) {
    const double m = 0.5 * (a.p[c] + b.p[c]);
    if (m <= 0.0) continue;
    sum += 0.5 * xlog2x_over(a.p[c], m) + 0.5 * xlog2x_over(b.p[c], m);
  }
  if (sum < 0.0) sum = 0.0;  // guard rounding at the J = 0 fixed point
  if (sum > 1.0) sum = 1.0;
  return sum;
}

PopularityDistribution list_distribution(std::span<const std::uint32_t> items,
                                         const PopularityPartition& part) {
  if (items.empty()) throw DataError("cannot take distribution of empty list");
  PopularityDistribution q;
  for (std::uint32_t i : items) q[part.group_of[i]] += 1.0;
  for (double& v : q.p) v /= static_cast<double>(items.size());
  return q;
}

std::vector<double> normalized_scores(const ScoredCandidates& cands) {
  std::vector<double> out(cands.items.size());
  if (out.empty()) return out;
  double lo = cands.items.front().second, hi = lo;
  for (const auto& [item, score] : cands.items) {
    lo = std::min(lo, score);
    hi = std::max(hi, score);
  }
  const double span = hi - lo;
  for (std::size_t j = 0; j < out.size(); ++j)
    out[j] = span > 0.0 ? (cands.items[j].second - lo) / span : 1.0;
  return out;
}

RecommendationList top_n_of(const ScoredCandidates& cands, std::size_t n) {
  require_enough(cands, n);
  RecommendationList list;
  list.user = cands.user;
  list.items.reserve(n);
  for (std::size_t j = 0; j < n; ++j) list.items.push_back(cands.items[j].first);
  return list;
}

double cp_objective(std::span<const std::uint32_t> items,
                    std::span<const double> norm_scores,
                    std::span<const std::uint32_t> cand_items,
                    const PopularityDistribution& profile,
                    const PopularityPartition& part, double lambda) {
  double rel = 0.0;
  for (std::uint32_t it : items) {
    auto at = std::find(cand_items.begin(), cand_items.end(), it);
    rel += norm_scores[static_cast<std::size_t>(at - cand_items.begin())];
  }
  return (1.0 - lambda) * rel -
         lambda * js_divergence(profile, list_distribution(items, part));
}

RecommendationList rerank_cp(const ScoredCandidates& cands,
                             const PopularityDistribution& profile,
                             const PopularityPartition& part,
                             const RerankConfig& cfg) {
  require_enough(cands, cfg.n);
  const std::size_t m = cands.items.size();
  const std::vector<double> score = normalized_scores(cands);

  RecommendationList list;
  list.user = cands.user;
  std::vector<char> used(m, 0);
  double rel_sum = 0.0;
  std::array<double, 3> counts{0, 0, 0};

  for (std::size_t step = 1; step <= cfg.n; ++step) {
    double best = 0.0;
    std::size_t best_j = m;
    for (std::size_t j = 0; j < m; ++j) {
      if (used[j]) continue;
      PopularityDistribution q;
      const int g = static_cast<int>(part.group_of[cands.items[j].first]);
      for (int c = 0; c < 3; ++c)
        q.p[c] = (counts[c] + (c == g ? 1.0 : 0.0)) /
                 static_cast<double>(step);
      const double obj = (1.0 - cfg.lambda) * (rel_sum + score[j]) -
                         cfg.lambda * js_divergence(profile, q);
      if (best_j == m || obj > best) {
        best = obj;
        best_j = j;  // ties keep the earlier (better-scored) candidate
      }
    }
    used[best_j] = 1;
    rel_sum += score[best_j];
    counts[static_cast<int>(part.group_of[cands.items[best_j].first])] += 1.0;
    list.items.push_back(cands.items[best_j].first);
  }
  return list;
}

RecommendationList rerank_xq(const ScoredCandidates& cands,
                             double profile_head_ratio,
                             const PopularityPartition& part,
                             const RerankConfig& cfg) {
  require_enough(cands, cfg.n);
  const std::size_t m = cands.items.size();
  const std::vector<double> score = normalized_scores(cands);
  const double weight[2] = {profile_head_ratio, 1.0 - profile_head_ratio};

  RecommendationList list;
  list.user = cands.user;
  std::vector<char> used(m, 0);
  double picked[2] = {0, 0};  // items chosen so far per category (H, M+T)

  for (std::size_t step = 0; step < cfg.n; ++step) {
    double best = 0.0;
    std::size_t best_j = m;
    for (std::size_t j = 0; j < m; ++j) {
      if (used[j]) continue;
      const int c =
          part.group_of[cands.items[j].first] == ItemGroup::Head ? 0 : 1;
      const double coverage =
          cfg.xq_smooth
              ? std::max(0.0, 1.0 - picked[c] / static_cast<double>(cfg.n))
              : (picked[c] == 0 ? 1.0 : 0.0);
      const double gain =
          (1.0 - cfg.lambda) * score[j] + cfg.lambda * weight[c] * coverage;
      if (best_j == m || gain > best) {
        best = gain;
        best_j = j;
      }
    }
    used[best_j] = 1;
    picked[part.group_of[cands.items[best_j].first] == ItemGroup::Head ? 0
                                                                       : 1] +=
        1.0;
    list.items.push_back(cands.items[best_j].first);
  }
  return list;
}

std::vector<int> fair_min_protected_table(std::size_t n, double p,
                                          double alpha) {
  if (!(p >= 0.0 && p <= 1.0)) throw UsageError("protected share not in [0,1]");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw UsageError("significance level not in (0,1)");
  std::vector<int> table(n, 0);
  for (std::size_t k = 1; k <= n; ++k) {
    // smallest z with P(Bin(k, p) <= z) > alpha
    double pmf = std::pow(1.0 - p, static_cast<double>(k));  // z = 0
    double cdf = pmf;
    int z = 0;
    while (cdf <= alpha && z < static_cast<int>(k)) {
      pmf *= (static_cast<double>(k - z) / static_cast<double>(z + 1)) *
             (p / (1.0 - p));
      cdf += pmf;
      z++;
    }
    table[k - 1] = z;
  }
  return table;
}

RecommendationList rerank_fair(const ScoredCandidates& cands,
                               const PopularityPartition& part,
                               const RerankConfig& cfg) {
  require_enough(cands, cfg.n);
  const double p_eff = cfg.lambda * cfg.fs_target_share;
  std::vector<int> table;
  if (p_eff > 0.0)
    table = fair_min_protected_table(cfg.n, p_eff, cfg.fs_alpha);
  else
    table.assign(cfg.n, 0);

  // queue cursors over the score-ordered candidate list
  std::size_t prot_at = 0, unprot_at = 0;
  const std::size_t m = cands.items.size();
  auto is_prot = [&](std::size_t j) {
    return part.group_of[cands.items[j].first] != ItemGroup::Head;
  };
  auto advance = [&](std::size_t& cur, bool want_prot) {
    while (cur < m && is_prot(cur) != want_prot) cur++;
  };

  RecommendationList list;
  list.user = cands.user;
  std::vector<char> used(m, 0);
  int prot_count = 0;
  for (std::size_t pos = 1; pos <= cfg.n; ++pos) {
    advance(prot_at, true);
    while (prot_at < m && used[prot_at]) {
      prot_at++;
      advance(prot_at, true);
    }
    advance(unprot_at, false);
    while (unprot_at < m && used[unprot_at]) {
      unprot_at++;
      advance(unprot_at, false);
    }

    std::size_t take = m;
    if (prot_count < table[pos - 1]) {
      if (prot_at < m) {
        take = prot_at;
      } else {
        list.constraint_infeasible = true;  // fill with best available
        take = unprot_at;
      }
    } else {
      // better scored queue head wins; candidate order is score order
      if (prot_at < m && unprot_at < m)
        take = std::min(prot_at, unprot_at);
      else
        take = prot_at < m ? prot_at : unprot_at;
    }
    used[take] = 1;
    if (is_prot(take)) prot_count++;
    list.items.push_back(cands.items[take].first);
  }
  return list;
}

std::vector<std::int64_t> uniform_exposure_targets(std::size_t catalog_size,
                                                   std::size_t num_users,
                                                   std::size_t n) {
  const std::int64_t total =
      static_cast<std::int64_t>(num_users) * static_cast<std::int64_t>(n);
  std::vector<std::int64_t> t(catalog_size,
                              total / static_cast<std::int64_t>(catalog_size));
  const std::int64_t rem = total % static_cast<std::int64_t>(catalog_size);
  for (std::int64_t i = 0; i < rem; ++i) t[static_cast<std::size_t>(i)]++;
  return t;
}

std::vector<std::int64_t> top_n_exposure_targets(
    const std::vector<ScoredCandidates>& all_cands, std::size_t catalog_size,
    std::size_t n) {
  std::vector<std::int64_t> t(catalog_size, 0);
  for (const ScoredCandidates& c : all_cands)
    for (std::size_t j = 0; j < n && j < c.items.size(); ++j)
      t[c.items[j].first]++;
  return t;
}

DmResult rerank_dm(const std::vector<ScoredCandidates>& all_cands,
                   std::span<const std::int64_t> targets,
                   const RerankConfig& cfg) {
  const std::size_t num_users = all_cands.size();
  const std::size_t num_items = targets.size();
  std::int64_t target_sum = 0;
  for (std::int64_t t : targets) {
    if (t < 0) throw UsageError("negative exposure target");
    target_sum += t;
  }
  const std::int64_t want =
      static_cast<std::int64_t>(num_users) * static_cast<std::int64_t>(cfg.n);
  if (target_sum != want)
    throw UsageError("exposure targets must sum to |U| * n");
  for (const ScoredCandidates& c : all_cands) require_enough(c, cfg.n);

  DmResult out;
  if (cfg.lambda == 0.0) {
    // pure relevance: the per-user optimum is unique (ranks are distinct),
    // so the flow solution collapses to plain top-n
    out.lists.reserve(num_users);
    for (const ScoredCandidates& c : all_cands)
      out.lists.push_back(top_n_of(c, cfg.n));
    std::vector<std::int64_t> expo(num_items, 0);
    for (const RecommendationList& l : out.lists)
      for (std::uint32_t i : l.items) expo[i]++;
    for (std::size_t i = 0; i < num_items; ++i)
      out.discrepancy += std::llabs(expo[i] - targets[i]);
    out.targets_missed = out.discrepancy > 0;
    return out;
  }

  // integer cost model shared with the test oracle:
  //   edge (u -> item at rank k):  round(1000*(1-lambda)) * (k+1)
  //   each exposure unit beyond target: round(1000*lambda) * (m+1)
  std::size_t m_max = 0;
  for (const ScoredCandidates& c : all_cands)
    m_max = std::max(m_max, c.items.size());
  const std::int64_t rel_unit =
      static_cast<std::int64_t>(std::llround(1000.0 * (1.0 - cfg.lambda)));
  const std::int64_t over_unit =
      static_cast<std::int64_t>(std::llround(1000.0 * cfg.lambda)) *
      static_cast<std::int64_t>(m_max + 1);

  const int source = 0;
  const int user0 = 1;
  const int item0 = user0 + static_cast<int>(num_users);
  const int sink = item0 + static_cast<int>(num_items);
  MinCostFlow flow(sink + 1);

  for (std::size_t u = 0; u < num_users; ++u)
    flow.add_arc(source, user0 + static_cast<int>(u),
                 static_cast<std::int64_t>(cfg.n), 0);

  std::vector<std::vector<int>> edge_ids(num_users);
  for (std::size_t u = 0; u < num_users; ++u) {
    const auto& items = all_cands[u].items;
    edge_ids[u].reserve(items.size());
    for (std::size_t k = 0; k < items.size(); ++k)
      edge_ids[u].push_back(flow.add_arc(
          user0 + static_cast<int>(u), item0 + static_cast<int>(items[k].first),
          1, rel_unit * static_cast<std::int64_t>(k + 1)));
  }
  for (std::size_t i = 0; i < num_items; ++i) {
    if (targets[i] > 0)
      flow.add_arc(item0 + static_cast<int>(i), sink, targets[i], 0);
    flow.add_arc(item0 + static_cast<int>(i), sink, want, over_unit);
  }

  MinCostFlow::Result r = flow.solve(source, sink, want);
  if (r.flow != want)
    throw NumericError("discrepancy flow did not route all recommendations");

  std::vector<std::int64_t> expo(num_items, 0);
  out.lists.resize(num_users);
  for (std::size_t u = 0; u < num_users; ++u) {
    RecommendationList& list = out.lists[u];
    list.user = all_cands[u].user;
    for (std::size_t k = 0; k < edge_ids[u].size(); ++k) {
      if (flow.flow_on(edge_ids[u][k]) > 0) {
        list.items.push_back(all_cands[u].items[k].first);
        expo[all_cands[u].items[k].first]++;
      }
    }
    if (list.items.size() != cfg.n)
      throw NumericError("flow produced a malformed recommendation list");
  }
  for (std::size_t i = 0; i < num_items; ++i)
    out.discrepancy += std::llabs(expo[i] - targets[i]);
  out.targets_missed = out.discrepancy > 0;
  return out;
}

}  // namespace popcal
