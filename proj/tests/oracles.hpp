// Brute-force reference implementations used as independent oracles.
// Everything here is written from the metric/algorithm definitions with
// plain loops, no shared code with the library paths under test.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "popcal/popularity.hpp"
#include "popcal/rerank.hpp"

namespace oracle {

// ---- metrics ---------------------------------------------------------

// ARP = (1/|lists|) sum_u ( sum_{i in L_u} phi(i) / |L_u| ), phi optionally
// divided by num_users.
inline double arp(const std::vector<std::vector<std::uint32_t>>& lists,
                  const std::vector<std::int64_t>& phi, bool normalize,
                  std::size_t num_users) {
  double outer = 0;
  for (const auto& list : lists) {
    double inner = 0;
    for (std::uint32_t i : list) {
      double p = static_cast<double>(phi[i]);
      if (normalize) p /= static_cast<double>(num_users);
      inner += p;
    }
    outer += inner / static_cast<double>(list.size());
  }
  return outer / static_cast<double>(lists.size());
}

inline double agg_div(const std::vector<std::vector<std::uint32_t>>& lists,
                      std::size_t catalog) {
  std::set<std::uint32_t> uniq;
  for (const auto& list : lists)
    for (std::uint32_t i : list) uniq.insert(i);
  return static_cast<double>(uniq.size()) / static_cast<double>(catalog);
}

// Gini via the mean-absolute-difference definition:
//   G = sum_{i,j} |x_i - x_j| / (2 * N * (N-1) * mean(x))
inline double gini(const std::vector<std::vector<std::uint32_t>>& lists,
                   std::size_t catalog) {
  std::vector<double> x(catalog, 0.0);
  double total = 0;
  for (const auto& list : lists)
    for (std::uint32_t i : list) {
      x[i] += 1.0;
      total += 1.0;
    }
  double mad = 0;
  for (std::size_t i = 0; i < catalog; ++i)
    for (std::size_t j = 0; j < catalog; ++j) mad += std::fabs(x[i] - x[j]);
  double mean = total / static_cast<double>(catalog);
  return mad / (2.0 * static_cast<double>(catalog) *
                static_cast<double>(catalog - 1) * mean);
}

inline long double jsd(const std::array<double, 3>& p,
                       const std::array<double, 3>& q) {
  long double out = 0;
  for (int c = 0; c < 3; ++c) {
    long double m = (static_cast<long double>(p[c]) + q[c]) / 2.0L;
    if (p[c] > 0) out += 0.5L * p[c] * std::log2(static_cast<long double>(p[c]) / m);
    if (q[c] > 0) out += 0.5L * q[c] * std::log2(static_cast<long double>(q[c]) / m);
  }
  return out;
}

// UPD per the definition: group-wise mean of JSD(P_u, Q_u), then the mean
// of the three group values.
inline double upd(const std::vector<std::vector<std::uint32_t>>& lists,
                  const std::vector<std::uint32_t>& list_user,
                  const std::vector<std::array<double, 3>>& profile,
                  const std::vector<int>& group_of,
                  const std::vector<popcal::ItemGroup>& item_group,
                  std::array<double, 3>* per_group = nullptr) {
  std::array<double, 3> sum{0, 0, 0};
  std::array<int, 3> cnt{0, 0, 0};
  for (std::size_t k = 0; k < lists.size(); ++k) {
    std::array<double, 3> q{0, 0, 0};
    for (std::uint32_t i : lists[k])
      q[static_cast<int>(item_group[i])] += 1.0;
    for (double& v : q) v /= static_cast<double>(lists[k].size());
    int g = group_of[list_user[k]];
    sum[g] += static_cast<double>(jsd(profile[list_user[k]], q));
    cnt[g]++;
  }
  double overall = 0;
  for (int g = 0; g < 3; ++g) {
    double v = sum[g] / cnt[g];
    if (per_group) (*per_group)[g] = v;
    overall += v;
  }
  return overall / 3.0;
}

// ---- partition -------------------------------------------------------

// Exhaustive scan over all prefix/suffix cut points.
struct BrutePartition {
  std::size_t head_size;
  std::size_t tail_size;
};

inline BrutePartition partition(const std::vector<std::int64_t>& phi,
                                double head_share, double tail_share) {
  std::vector<std::uint32_t> order(phi.size());
  for (std::uint32_t i = 0; i < phi.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (phi[a] != phi[b]) return phi[a] > phi[b];
    return a < b;
  });
  long double total = 0;
  for (auto v : phi) total += v;

  BrutePartition out{phi.size(), 0};
  for (std::size_t cut = 1; cut <= phi.size(); ++cut) {
    long double mass = 0;
    for (std::size_t r = 0; r < cut; ++r) mass += phi[order[r]];
    if (mass / total >= head_share - 1e-12) {
      out.head_size = cut;
      break;
    }
  }
  for (std::size_t cut = phi.size(); cut-- > out.head_size;) {
    long double mass = 0;
    for (std::size_t r = cut; r < phi.size(); ++r) mass += phi[order[r]];
    if (mass / total <= tail_share + 1e-12) {
      out.tail_size = phi.size() - cut;
      break;
    }
  }
  return out;
}

// ---- similarity ------------------------------------------------------

inline double cosine(const std::vector<double>& a,
                     const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  if (na == 0 || nb == 0) return 0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// ---- re-ranking ------------------------------------------------------

// Exhaustive maximizer of the calibration trade-off over all n-subsets.
struct CpBest {
  double objective;
  std::vector<std::uint32_t> items;
};

inline CpBest cp_exhaustive(const popcal::ScoredCandidates& cands,
                            const popcal::PopularityDistribution& profile,
                            const popcal::PopularityPartition& part,
                            double lambda, std::size_t n) {
  std::vector<double> norm = popcal::normalized_scores(cands);
  const std::size_t m = cands.items.size();
  std::vector<std::size_t> pick(n);
  CpBest best{-1e100, {}};
  // enumerate combinations via odometer
  std::vector<std::size_t> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = i;
  while (true) {
    double rel = 0;
    std::array<double, 3> counts{0, 0, 0};
    for (std::size_t i : c) {
      rel += norm[i];
      counts[static_cast<int>(part.group_of[cands.items[i].first])] += 1.0;
    }
    std::array<double, 3> q;
    for (int g = 0; g < 3; ++g) q[g] = counts[g] / static_cast<double>(n);
    double obj = (1.0 - lambda) * rel -
                 lambda * static_cast<double>(jsd(profile.p, q));
    if (obj > best.objective) {
      best.objective = obj;
      best.items.clear();
      for (std::size_t i : c) best.items.push_back(cands.items[i].first);
    }
    // next combination
    std::size_t k = n;
    while (k > 0) {
      k--;
      if (c[k] != k + m - n) {
        c[k]++;
        for (std::size_t j = k + 1; j < n; ++j) c[j] = c[j - 1] + 1;
        break;
      }
      if (k == 0) return best;
    }
  }
}

// Step-by-step replay of the XQ greedy recurrence.
inline std::vector<std::uint32_t> xq_replay(
    const popcal::ScoredCandidates& cands, double head_ratio,
    const popcal::PopularityPartition& part, double lambda, std::size_t n,
    bool smooth) {
  std::vector<double> norm = popcal::normalized_scores(cands);
  std::vector<bool> used(cands.items.size(), false);
  std::vector<std::uint32_t> out;
  double picked_h = 0, picked_lt = 0;
  for (std::size_t step = 0; step < n; ++step) {
    double best_gain = -1e100;
    std::size_t best = cands.items.size();
    for (std::size_t j = 0; j < cands.items.size(); ++j) {
      if (used[j]) continue;
      bool is_head =
          part.group_of[cands.items[j].first] == popcal::ItemGroup::Head;
      double w = is_head ? head_ratio : 1.0 - head_ratio;
      double already = is_head ? picked_h : picked_lt;
      double cov = smooth ? std::max(0.0, 1.0 - already / static_cast<double>(n))
                          : (already == 0 ? 1.0 : 0.0);
      double gain = (1.0 - lambda) * norm[j] + lambda * w * cov;
      if (gain > best_gain) {
        best_gain = gain;
        best = j;
      }
    }
    used[best] = true;
    if (part.group_of[cands.items[best].first] == popcal::ItemGroup::Head)
      picked_h += 1.0;
    else
      picked_lt += 1.0;
    out.push_back(cands.items[best].first);
  }
  return out;
}

// Exact binomial minimum-protected-count table via long double summation.
inline std::vector<int> fair_table(std::size_t n, double p, double alpha) {
  std::vector<int> out(n, 0);
  for (std::size_t k = 1; k <= n; ++k) {
    long double cdf = 0;
    int z = 0;
    for (; z <= static_cast<int>(k); ++z) {
      // C(k, z) p^z (1-p)^(k-z)
      long double term = 1;
      for (int i = 0; i < z; ++i)
        term *= static_cast<long double>(k - i) / (i + 1);
      term *= std::pow(static_cast<long double>(p), z) *
              std::pow(1.0L - static_cast<long double>(p),
                       static_cast<long double>(k - z));
      cdf += term;
      if (cdf > alpha) break;
    }
    out[k - 1] = z;
  }
  return out;
}

// Exhaustive assignment search mirroring the DM integer cost model.
struct DmBest {
  std::int64_t cost;
  std::int64_t discrepancy;
};

inline DmBest dm_exhaustive(const std::vector<popcal::ScoredCandidates>& cands,
                            const std::vector<std::int64_t>& targets,
                            double lambda, std::size_t n) {
  std::size_t m_max = 0;
  for (const auto& c : cands) m_max = std::max(m_max, c.items.size());
  const std::int64_t rel_unit = std::llround(1000.0 * (1.0 - lambda));
  const std::int64_t over_unit =
      std::llround(1000.0 * lambda) * static_cast<std::int64_t>(m_max + 1);

  // enumerate, per user, all n-subsets of candidate positions
  std::vector<std::vector<std::vector<std::size_t>>> options(cands.size());
  for (std::size_t u = 0; u < cands.size(); ++u) {
    const std::size_t m = cands[u].items.size();
    std::vector<std::size_t> c(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = i;
    while (true) {
      options[u].push_back(c);
      std::size_t k = n;
      bool done = false;
      while (k > 0) {
        k--;
        if (c[k] != k + m - n) {
          c[k]++;
          for (std::size_t j = k + 1; j < n; ++j) c[j] = c[j - 1] + 1;
          break;
        }
        if (k == 0) done = true;
      }
      if (done) break;
    }
  }

  DmBest best{INT64_MAX, 0};
  std::vector<std::size_t> choice(cands.size(), 0);
  while (true) {
    std::int64_t cost = 0;
    std::vector<std::int64_t> expo(targets.size(), 0);
    for (std::size_t u = 0; u < cands.size(); ++u)
      for (std::size_t pos : options[u][choice[u]]) {
        cost += rel_unit * static_cast<std::int64_t>(pos + 1);
        expo[cands[u].items[pos].first]++;
      }
    std::int64_t disc = 0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      if (expo[i] > targets[i]) cost += over_unit * (expo[i] - targets[i]);
      disc += std::llabs(expo[i] - targets[i]);
    }
    if (cost < best.cost) best = {cost, disc};
    // odometer
    std::size_t u = 0;
    while (u < cands.size()) {
      if (++choice[u] < options[u].size()) break;
      choice[u] = 0;
      u++;
    }
    if (u == cands.size()) break;
  }
  return best;
}

// Spearman rank correlation (no tie correction; inputs are distinct).
inline double spearman(const std::vector<double>& x,
                       const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) r[idx[i]] = static_cast<double>(i);
    return r;
  };
  std::vector<double> rx = ranks(x), ry = ranks(y);
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double num = 0, dx = 0, dy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (rx[i] - mx) * (ry[i] - my);
    dx += (rx[i] - mx) * (rx[i] - mx);
    dy += (ry[i] - my) * (ry[i] - my);
  }
  return num / std::sqrt(dx * dy);
}

}  // namespace oracle
