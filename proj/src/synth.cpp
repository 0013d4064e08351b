#include "popcal/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <queue>
#include <vector>

#include "popcal/common.hpp"

namespace popcal {

namespace {

using std::size_t;
using Counts = std::vector<std::int64_t>;

std::int64_t sum_of(const Counts& v) {
  std::int64_t s = 0;
  for (auto x : v) s += x;
  return s;
}

// Rounds real weights to integers summing exactly to `total`
// (largest remainder, ties to lower index).
Counts round_to_sum(const std::vector<double>& w, std::int64_t total,
                    std::int64_t floor_min) {
  const size_t n = w.size();
  double wsum = 0;
  for (double x : w) wsum += x;
  Counts out(n);
  std::vector<std::pair<double, size_t>> frac(n);
  std::int64_t used = 0;
  for (size_t i = 0; i < n; ++i) {
    double exact = static_cast<double>(total) * w[i] / wsum;
    std::int64_t base = std::max<std::int64_t>(
        floor_min, static_cast<std::int64_t>(std::floor(exact)));
    out[i] = base;
    used += base;
    frac[i] = {exact - std::floor(exact), i};
  }
  std::sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::int64_t delta = total - used;
  size_t at = 0;
  size_t idle = 0;
  while (delta != 0) {
    size_t i = frac[at % n].second;
    if (delta > 0) {
      out[i]++;
      delta--;
      idle = 0;
    } else if (out[i] > floor_min) {
      out[i]--;
      delta++;
      idle = 0;
    } else if (++idle > n) {
      throw NumericError("rounding target unreachable under the floor");
    }
    at++;
  }
  return out;
}

// Popularity design: ranks [0, head) form the head pool whose mass crosses
// 20% exactly at rank `head`, with +-margin guard band; the rest follows a
// Zipf-Mandelbrot tail capped strictly below the boundary count.
Counts design_popularity(size_t items, std::int64_t total, size_t head,
                         double margin) {
  if (head < 2 || head + 2 >= items)
    throw UsageError("designed head rank out of range");
  const double share = 0.2;
  const std::int64_t lo_mass = static_cast<std::int64_t>(
      std::llround((share - margin) * static_cast<double>(total)));
  std::int64_t boundary = static_cast<std::int64_t>(
      std::llround(2.0 * margin * static_cast<double>(total)));
  // the boundary item must clear the tail counts or the crossing drifts
  const std::int64_t tail_mean =
      (total - lo_mass) / static_cast<std::int64_t>(items - head);
  boundary = std::max(boundary, (tail_mean * 8) / 5);
  const std::int64_t tail_mass = total - lo_mass - boundary;

  // head ranks 0..head-2: a base count clear of the boundary item, plus a
  // convex ramp distributing the leftover mass
  const std::int64_t base =
      boundary + std::max<std::int64_t>(8, boundary / 32);
  const std::int64_t ramp_mass =
      lo_mass - base * static_cast<std::int64_t>(head - 1);
  if (ramp_mass < 0)
    throw UsageError("head margin too wide for the designed head size");
  std::vector<double> head_w(head - 1);
  for (size_t r = 0; r < head - 1; ++r) {
    double x = static_cast<double>(head - 1 - r) / static_cast<double>(head - 1);
    head_w[r] = 0.02 + std::pow(x, 1.7);
  }
  Counts phi = round_to_sum(head_w, ramp_mass, 0);
  std::sort(phi.begin(), phi.end(), std::greater<std::int64_t>());
  for (auto& c : phi) c += base;
  phi.push_back(boundary);

  // Zipf-Mandelbrot tail: solve the exponent so the first tail item sits
  // just under the boundary count.
  const size_t tail_n = items - head;
  const double target_first =
      std::min<double>(static_cast<double>(boundary) - 2.0,
                       2.2 * static_cast<double>(tail_mass) /
                           static_cast<double>(tail_n));
  const double B = static_cast<double>(tail_n) / 40.0 + 1.0;
  double s_lo = 0.05, s_hi = 3.0;
  std::vector<double> tail_w(tail_n);
  for (int iter = 0; iter < 60; ++iter) {
    double s = 0.5 * (s_lo + s_hi);
    double wsum = 0;
    for (size_t r = 0; r < tail_n; ++r)
      wsum += std::pow(static_cast<double>(r + 1) + B, -s);
    double first = static_cast<double>(tail_mass) *
                   std::pow(1.0 + B, -s) / wsum;
    if (first > target_first)
      s_hi = s;
    else
      s_lo = s;
  }
  const double s = 0.5 * (s_lo + s_hi);
  for (size_t r = 0; r < tail_n; ++r)
    tail_w[r] = std::pow(static_cast<double>(r + 1) + B, -s);
  Counts tail = round_to_sum(tail_w, tail_mass, 1);
  std::sort(tail.begin(), tail.end(), std::greater<std::int64_t>());
  // strictly below the boundary item
  for (size_t r = 0; r < tail.size() && tail[r] >= boundary; ++r) {
    std::int64_t excess = tail[r] - (boundary - 1);
    tail[r] = boundary - 1;
    tail.back() += excess;  // dump into the least popular item... keep sum
  }
  std::sort(tail.begin(), tail.end(), std::greater<std::int64_t>());
  phi.insert(phi.end(), tail.begin(), tail.end());

  if (sum_of(phi) != total) throw NumericError("popularity design lost mass");
  return phi;
}

// Profile sizes: clamped lognormal, adjusted to an exact total.
Counts profile_sizes(size_t users, std::int64_t total, size_t min_p,
                     size_t max_p, Rng rng) {
  const double mean_target = static_cast<double>(total) /
                             static_cast<double>(users);
  const double sigma = 0.95;
  const double mu = std::log(mean_target) - 0.5 * sigma * sigma;
  Counts n(users);
  for (size_t u = 0; u < users; ++u) {
    double v = std::exp(mu + sigma * rng.normal());
    n[u] = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::llround(v)),
                                    static_cast<std::int64_t>(min_p),
                                    static_cast<std::int64_t>(max_p));
  }
  if (total < static_cast<std::int64_t>(users * min_p) ||
      total > static_cast<std::int64_t>(users * max_p))
    throw UsageError("interaction total incompatible with profile bounds");
  std::int64_t delta = total - sum_of(n);
  size_t at = 0;
  while (delta != 0) {
    size_t u = at % users;
    if (delta > 0 && n[u] < static_cast<std::int64_t>(max_p)) {
      n[u]++;
      delta--;
    } else if (delta < 0 && n[u] > static_cast<std::int64_t>(min_p)) {
      n[u]--;
      delta++;
    }
    at++;
  }
  return n;
}

// Scales raw per-user demands so they sum exactly to `target`, respecting
// per-user caps. Monotone bisection + largest-remainder cleanup.
Counts fit_demands(const std::vector<double>& raw, const Counts& cap,
                   std::int64_t target) {
  const size_t n = raw.size();
  auto realize = [&](double gamma) {
    Counts d(n);
    for (size_t u = 0; u < n; ++u)
      d[u] = std::clamp<std::int64_t>(
          static_cast<std::int64_t>(std::llround(gamma * raw[u])), 0, cap[u]);
    return d;
  };
  double lo = 0.0, hi = 4.0;
  while (sum_of(realize(hi)) < target && hi < 4096.0) hi *= 2.0;
  for (int iter = 0; iter < 80; ++iter) {
    double mid = 0.5 * (lo + hi);
    if (sum_of(realize(mid)) >= target)
      hi = mid;
    else
      lo = mid;
  }
  std::int64_t cap_sum = sum_of(cap);
  if (cap_sum < target)
    throw UsageError("per-user caps cannot absorb the demanded mass");
  Counts d = realize(hi);
  std::int64_t delta = target - sum_of(d);
  size_t at = 0;
  while (delta != 0) {
    size_t u = at % n;
    if (delta > 0 && d[u] < cap[u]) {
      d[u]++;
      delta--;
    } else if (delta < 0 && d[u] > 0) {
      d[u]--;
      delta++;
    }
    at++;
  }
  return d;
}

// Bipartite degree realization: each user u picks demand[u] distinct items
// from the pool, favoring the largest remaining capacity (Gale-Ryser style
// greedy). Equal capacities rotate via an insertion counter.
void realize_pool(const Counts& demand, const Counts& capacity,
                  const std::vector<std::uint32_t>& pool_items,
                  std::vector<std::vector<std::uint32_t>>* out) {
  struct Slot {
    std::int64_t residual;
    std::uint64_t order;
    std::uint32_t item;
    bool operator<(const Slot& o) const {
      if (residual != o.residual) return residual < o.residual;
      return order > o.order;  // older entries first among equals
    }
  };
  std::priority_queue<Slot> heap;
  std::uint64_t counter = 0;
  for (size_t j = 0; j < pool_items.size(); ++j)
    if (capacity[j] > 0) heap.push({capacity[j], counter++, pool_items[j]});

  std::vector<std::uint32_t> order(demand.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (demand[a] != demand[b]) return demand[a] > demand[b];
    return a < b;
  });

  std::vector<Slot> taken;
  for (std::uint32_t u : order) {
    std::int64_t need = demand[u];
    if (need == 0) continue;
    taken.clear();
    while (need > 0) {
      if (heap.empty())
        throw NumericError("degree sequence not realizable; tune generator");
      taken.push_back(heap.top());
      heap.pop();
      need--;
    }
    for (Slot s : taken) {
      (*out)[u].push_back(s.item);
      if (--s.residual > 0) {
        s.order = counter++;
        heap.push(s);
      }
    }
  }
}

struct Assignment {
  // items per user, by design rank; pools are [0,head), [head,tail_begin),
  // [tail_begin, items)
  std::vector<std::vector<std::uint32_t>> items_of_user;
  std::vector<double> affinity;       // realized head share target
  std::vector<double> tail_appetite;  // tail share of the non-head remainder
  Counts phi;                         // designed per-rank capacity
  size_t tail_begin = 0;
};

Assignment assign_interactions(size_t users, size_t items, std::int64_t total,
                               size_t head, double margin, size_t head_cap,
                               size_t min_p, size_t max_p, Rng& rng) {
  Assignment a;
  a.phi = design_popularity(items, total, head, margin);

  // design tail pool: maximal suffix within 20% of the mass
  std::int64_t tail_budget =
      static_cast<std::int64_t>(0.2 * static_cast<double>(total));
  std::int64_t acc = 0;
  size_t tail_begin = items;
  while (tail_begin > head + 1 && acc + a.phi[tail_begin - 1] <= tail_budget)
    acc += a.phi[--tail_begin];
  a.tail_begin = tail_begin;

  Counts n = profile_sizes(users, total, min_p, max_p, rng.fork(1));

  // head demands: affinity-driven, capped, fit to the head pool mass
  Rng ar = rng.fork(2);
  a.affinity.resize(users);
  std::vector<double> raw_h(users);
  Counts cap_h(users);
  for (size_t u = 0; u < users; ++u) {
    a.affinity[u] = 0.03 + 0.93 * std::pow(ar.uniform(), 1.35);
    raw_h[u] = a.affinity[u] * static_cast<double>(n[u]);
    cap_h[u] = std::min<std::int64_t>(
        {static_cast<std::int64_t>(head_cap), n[u] - 2,
         static_cast<std::int64_t>(head)});
  }
  std::int64_t mass_h = 0, mass_t = 0;
  for (size_t r = 0; r < head; ++r) mass_h += a.phi[r];
  for (size_t r = tail_begin; r < items; ++r) mass_t += a.phi[r];
  Counts h = fit_demands(raw_h, cap_h, mass_h);

  // tail demands: anti-correlated with affinity
  Rng tr = rng.fork(3);
  a.tail_appetite.resize(users);
  std::vector<double> raw_t(users);
  Counts cap_t(users);
  for (size_t u = 0; u < users; ++u) {
    a.tail_appetite[u] =
        std::clamp(0.75 * (1.0 - a.affinity[u]) + 0.25 * tr.uniform(), 0.02,
                   0.95);
    raw_t[u] = a.tail_appetite[u] * static_cast<double>(n[u] - h[u]);
    cap_t[u] = std::min<std::int64_t>(
        n[u] - h[u],
        static_cast<std::int64_t>(items - tail_begin));
  }
  Counts t = fit_demands(raw_t, cap_t, mass_t);

  Counts m(users);
  for (size_t u = 0; u < users; ++u) {
    m[u] = n[u] - h[u] - t[u];
    if (m[u] < 0) throw NumericError("negative mid demand; tune generator");
  }

  a.items_of_user.assign(users, {});
  auto pool = [&](size_t b, size_t e) {
    std::vector<std::uint32_t> p(e - b);
    std::iota(p.begin(), p.end(), static_cast<std::uint32_t>(b));
    return p;
  };
  auto cap_slice = [&](size_t b, size_t e) {
    return Counts(a.phi.begin() + b, a.phi.begin() + e);
  };
  realize_pool(h, cap_slice(0, head), pool(0, head), &a.items_of_user);
  realize_pool(m, cap_slice(head, tail_begin), pool(head, tail_begin),
               &a.items_of_user);
  realize_pool(t, cap_slice(tail_begin, items), pool(tail_begin, items),
               &a.items_of_user);
  return a;
}

std::vector<std::uint32_t> permutation(size_t n, Rng rng) {
  std::vector<std::uint32_t> p(n);
  std::iota(p.begin(), p.end(), 0u);
  for (size_t j = n; j > 1; --j)
    std::swap(p[j - 1], p[static_cast<size_t>(rng.below(j))]);
  return p;
}

}  // namespace

MovieLensSynthConfig MovieLensSynthConfig::scaled(double f) const {
  MovieLensSynthConfig c = *this;
  c.users = std::max<size_t>(60, static_cast<size_t>(users * f));
  c.items = std::max<size_t>(80, static_cast<size_t>(items * f));
  // keep the mean profile feasible against the shrunken catalog
  double mean = std::max(24.0, std::min(static_cast<double>(c.items) / 3.0,
                                        165.6 * std::sqrt(f)));
  c.interactions = static_cast<size_t>(static_cast<double>(c.users) * mean);
  c.head_items = std::max<size_t>(static_cast<size_t>(head_items * f),
                                  static_cast<size_t>(0.25 * mean) + 5);
  c.head_margin = 0.003;
  c.max_profile = std::min(max_profile, c.items / 2);
  c.min_profile = std::min<size_t>(min_profile, static_cast<size_t>(mean / 2));
  c.max_head_per_user = std::max<size_t>(
      4, std::min<size_t>(static_cast<size_t>(0.2 * mean * 1.9) + 1,
                          c.head_items - 3));
  return c;
}

void synth_movielens(const std::string& path,
                     const MovieLensSynthConfig& cfg) {
  Rng rng(splitmix64(cfg.seed ^ 0x4d4c31ULL));
  Assignment a = assign_interactions(
      cfg.users, cfg.items, static_cast<std::int64_t>(cfg.interactions),
      cfg.head_items, cfg.head_margin, cfg.max_head_per_user, cfg.min_profile,
      cfg.max_profile, rng);

  // external ids decouple file order from popularity rank
  std::vector<std::uint32_t> item_label = permutation(cfg.items, rng.fork(10));
  std::vector<std::uint32_t> user_label = permutation(cfg.users, rng.fork(11));

  std::vector<double> quality(cfg.items);
  Rng qr = rng.fork(12);
  for (size_t i = 0; i < cfg.items; ++i) quality[i] = 0.35 * qr.normal();

  std::vector<std::uint32_t> user_by_label(cfg.users);
  for (size_t u = 0; u < cfg.users; ++u) user_by_label[user_label[u]] = u;

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write corpus: " + path);
  char line[96];
  for (size_t label = 0; label < cfg.users; ++label) {
    const std::uint32_t u = user_by_label[label];
    Rng ur = rng.fork(0x500000ULL + u);
    const double harsh = 0.3 * ur.normal();
    const auto& picked = a.items_of_user[u];
    for (size_t k = 0; k < picked.size(); ++k) {
      const std::uint32_t rank = picked[k];
      double taste = 0.0;
      if (rank < cfg.head_items)
        taste = 0.8 * (a.affinity[u] - 0.35);
      else if (rank >= a.tail_begin)
        taste = 0.8 * (a.tail_appetite[u] - 0.35);
      double raw = 3.55 + quality[rank] + harsh + taste + 0.7 * ur.normal();
      int rating = static_cast<int>(
          std::clamp(std::llround(raw), 1ll, 5ll));
      long long ts = 956700000ll + static_cast<long long>(label) * 211 +
                     static_cast<long long>(k) * 9973;
      std::snprintf(line, sizeof(line), "%u::%u::%d::%lld\n",
                    static_cast<unsigned>(label + 1),
                    static_cast<unsigned>(item_label[rank] + 1), rating, ts);
      out << line;
    }
  }
}

PlayCountSynthConfig PlayCountSynthConfig::scaled(double f) const {
  PlayCountSynthConfig c = *this;
  c.users = std::max<size_t>(60, static_cast<size_t>(users * f));
  c.items = std::max<size_t>(120, static_cast<size_t>(items * f));
  double mean = std::max(24.0, std::min(static_cast<double>(c.items) / 3.0,
                                        101.9 * std::sqrt(f)));
  c.pairs = static_cast<size_t>(static_cast<double>(c.users) * mean);
  c.chaff_users = std::max<size_t>(5, static_cast<size_t>(chaff_users * f));
  c.head_items = std::max<size_t>(static_cast<size_t>(head_items * f),
                                  static_cast<size_t>(0.25 * mean) + 5);
  c.head_margin = 0.003;
  c.max_profile = std::min(max_profile, c.items / 2);
  c.min_profile = std::min<size_t>(min_profile, static_cast<size_t>(mean / 2));
  c.max_head_per_user = std::max<size_t>(
      4, std::min<size_t>(static_cast<size_t>(0.2 * mean * 1.9) + 1,
                          c.head_items - 3));
  return c;
}

void synth_playcounts(const std::string& path,
                      const PlayCountSynthConfig& cfg) {
  Rng rng(splitmix64(cfg.seed ^ 0x4c464dULL));
  Assignment a = assign_interactions(
      cfg.users, cfg.items, static_cast<std::int64_t>(cfg.pairs),
      cfg.head_items, cfg.head_margin, cfg.max_head_per_user, cfg.min_profile,
      cfg.max_profile, rng);

  std::vector<std::uint32_t> item_label = permutation(cfg.items, rng.fork(10));
  std::vector<std::uint32_t> user_label =
      permutation(cfg.users + cfg.chaff_users, rng.fork(11));

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write corpus: " + path);
  char line[128];
  std::uint64_t pair_no = 0;
  auto emit = [&](std::uint32_t user_lbl, std::uint32_t item_rank,
                  long long count) {
    pair_no++;
    // occasionally split a count across two rows to exercise aggregation
    if (count >= 2 && pair_no % 97 == 0) {
      long long first = count / 2;
      std::snprintf(line, sizeof(line), "u%05u\ta%05u\t%lld\n", user_lbl + 1,
                    item_label[item_rank] + 1, first);
      out << line;
      count -= first;
    }
    std::snprintf(line, sizeof(line), "u%05u\ta%05u\t%lld\n", user_lbl + 1,
                  item_label[item_rank] + 1, count);
    out << line;
  };

  for (size_t u = 0; u < cfg.users; ++u) {
    Rng ur = rng.fork(0x600000ULL + u);
    const double mu = std::log(8.0) + 0.6 * ur.normal();
    for (std::uint32_t rank : a.items_of_user[u]) {
      double raw = std::exp(mu + 1.05 * ur.normal());
      long long count =
          std::clamp(static_cast<long long>(std::llround(raw)), 1ll, 3000ll);
      emit(user_label[u], rank, count);
    }
  }
  // chaff: short profiles over the most popular items only, so the min-20
  // filter removes them without orphaning any album
  for (size_t c = 0; c < cfg.chaff_users; ++c) {
    Rng cr = rng.fork(0x700000ULL + c);
    size_t len = 5 + static_cast<size_t>(cr.below(15));  // 5..19 < 20
    std::vector<std::uint32_t> picks;
    for (size_t k = 0; picks.size() < len; ++k) {
      std::uint32_t rank = static_cast<std::uint32_t>(cr.below(30));
      if (std::find(picks.begin(), picks.end(), rank) == picks.end())
        picks.push_back(rank);
      if (k > 400) break;
    }
    for (std::uint32_t rank : picks) {
      long long count = 1 + static_cast<long long>(cr.below(40));
      emit(user_label[cfg.users + c], rank, count);
    }
  }
}

}  // namespace popcal
