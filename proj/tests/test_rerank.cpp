#include <doctest.h>

#include <set>

#include "helpers.hpp"
#include "oracles.hpp"
#include "popcal/mincostflow.hpp"
#include "popcal/rerank.hpp"

using namespace popcal;

namespace {

// a partition over a synthetic catalog: item index % 3 -> H/M/T
PopularityPartition toy_partition(std::size_t items) {
  PopularityPartition part;
  part.group_of.resize(items);
  for (std::size_t i = 0; i < items; ++i)
    part.group_of[i] = static_cast<ItemGroup>(i % 3);
  return part;
}

ScoredCandidates make_cands(std::vector<std::pair<std::uint32_t, double>> v,
                            std::uint32_t user = 0) {
  ScoredCandidates c;
  c.user = user;
  c.items = std::move(v);
  return c;
}

PopularityDistribution dist(double h, double m, double t) {
  PopularityDistribution d;
  d.p = {h, m, t};
  return d;
}

}  // namespace

TEST_CASE("js_divergence: identity, disjoint support, frozen oracle value") {
  CHECK(js_divergence(dist(0.3, 0.2, 0.5), dist(0.3, 0.2, 0.5)) ==
        doctest::Approx(0.0));
  CHECK(js_divergence(dist(1, 0, 0), dist(0, 1, 0)) == doctest::Approx(1.0));
  // independently computed from the definition via the mixture M=(P+Q)/2
  const double frozen = 0.31661690177098653;
  CHECK(js_divergence(dist(0.3, 0.2, 0.5), dist(0.7, 0.3, 0.0)) ==
        doctest::Approx(frozen).epsilon(1e-12));
}

TEST_CASE("js_divergence: symmetry and bounds over random distributions") {
  Rng rng(77);
  for (int trial = 0; trial < 500; ++trial) {
    auto draw = [&rng] {
      std::array<double, 3> v;
      double s = 0;
      for (double& x : v) {
        x = rng.uniform();
        s += x;
      }
      // occasionally zero a component
      if (rng.below(4) == 0) {
        s -= v[rng.below(3)];
        v[rng.below(3)] = 0;
        s = v[0] + v[1] + v[2];
      }
      PopularityDistribution d;
      for (int c = 0; c < 3; ++c) d.p[c] = v[c] / s;
      return d;
    };
    PopularityDistribution p = draw(), q = draw();
    double ab = js_divergence(p, q), ba = js_divergence(q, p);
    CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    CHECK(ab == doctest::Approx(static_cast<double>(oracle::jsd(p.p, q.p)))
                    .epsilon(1e-10));
  }
}

TEST_CASE("list_distribution: composition ratios") {
  PopularityPartition part = toy_partition(30);
  std::vector<std::uint32_t> all_h = {0, 3, 6, 9, 12, 15, 18, 21, 24, 27};
  auto d = list_distribution(all_h, part);
  CHECK(d[ItemGroup::Head] == doctest::Approx(1.0));

  // 7 H, 3 M, 0 T -> (0.7, 0.3, 0.0)
  std::vector<std::uint32_t> mixed = {0, 3, 6, 9, 12, 15, 18, 1, 4, 7};
  auto q = list_distribution(mixed, part);
  CHECK(q[ItemGroup::Head] == doctest::Approx(0.7));
  CHECK(q[ItemGroup::Mid] == doctest::Approx(0.3));
  CHECK(q[ItemGroup::Tail] == doctest::Approx(0.0));
  CHECK(q.p[0] + q.p[1] + q.p[2] == doctest::Approx(1.0));
}

TEST_CASE("rerank_cp: lambda = 0 returns top-n exactly") {
  PopularityPartition part = toy_partition(12);
  auto cands = make_cands(
      {{5, 9.0}, {2, 8.0}, {7, 7.0}, {1, 6.0}, {0, 5.0}, {4, 4.0}});
  RerankConfig cfg;
  cfg.lambda = 0.0;
  cfg.n = 3;
  auto list = rerank_cp(cands, dist(0.2, 0.5, 0.3), part, cfg);
  CHECK(list.items == std::vector<std::uint32_t>{5, 2, 7});
}

TEST_CASE("rerank_cp: lambda = 1 with all-tail profile picks tail items") {
  PopularityPartition part = toy_partition(12);
  // tail items are 2, 5, 8, 11
  auto cands = make_cands(
      {{0, 9.0}, {3, 8.0}, {2, 7.0}, {5, 6.0}, {8, 5.0}, {11, 4.0}});
  RerankConfig cfg;
  cfg.lambda = 1.0;
  cfg.n = 3;
  auto list = rerank_cp(cands, dist(0, 0, 1), part, cfg);
  for (std::uint32_t item : list.items)
    CHECK(part.group_of[item] == ItemGroup::Tail);
}

TEST_CASE("rerank_cp: n=3 m=6 fixture vs exhaustive search") {
  PopularityPartition part = toy_partition(12);
  auto cands = make_cands(
      {{0, 0.95}, {1, 0.90}, {3, 0.80}, {2, 0.71}, {6, 0.60}, {5, 0.44}});
  PopularityDistribution profile = dist(0.3, 0.2, 0.5);
  RerankConfig cfg;
  cfg.lambda = 0.6;
  cfg.n = 3;
  auto greedy = rerank_cp(cands, profile, part, cfg);
  auto best = oracle::cp_exhaustive(cands, profile, part, cfg.lambda, cfg.n);

  std::vector<double> norm = normalized_scores(cands);
  std::vector<std::uint32_t> citems;
  for (auto& [i, s] : cands.items) citems.push_back(i);
  double greedy_obj =
      cp_objective(greedy.items, norm, citems, profile, part, cfg.lambda);
  INFO("greedy=", greedy_obj, " exhaustive=", best.objective);
  CHECK(greedy_obj >= 0.95 * best.objective - 1e-12);
  CHECK(greedy_obj <= best.objective + 1e-12);
}

TEST_CASE("rerank_cp: incremental gains equal recomputation from scratch") {
  PopularityPartition part = toy_partition(15);
  Rng rng(123);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<std::pair<std::uint32_t, double>> v;
    std::set<std::uint32_t> chosen;
    while (chosen.size() < 8) chosen.insert(rng.below(15));
    double s = 5.0;
    for (std::uint32_t i : chosen) v.push_back({i, s -= rng.uniform()});
    std::sort(v.begin(), v.end(),
              [](auto& a, auto& b) { return a.second > b.second; });
    auto cands = make_cands(std::move(v));
    double hm = rng.uniform(), mm = rng.uniform(), tm = rng.uniform();
    double tot = hm + mm + tm;
    PopularityDistribution profile = dist(hm / tot, mm / tot, tm / tot);
    RerankConfig cfg;
    cfg.lambda = rng.uniform();
    cfg.n = 4;
    auto list = rerank_cp(cands, profile, part, cfg);

    // replay: at every prefix the greedy choice must maximize the full
    // objective recomputed from scratch over remaining candidates
    std::vector<double> norm = normalized_scores(cands);
    std::vector<std::uint32_t> citems;
    for (auto& [i, sc] : cands.items) citems.push_back(i);
    std::vector<std::uint32_t> prefix;
    for (std::uint32_t picked : list.items) {
      double best = -1e100;
      for (auto& [i, sc] : cands.items) {
        if (std::find(prefix.begin(), prefix.end(), i) != prefix.end())
          continue;
        std::vector<std::uint32_t> trial_list = prefix;
        trial_list.push_back(i);
        best = std::max(best, cp_objective(trial_list, norm, citems, profile,
                                           part, cfg.lambda));
      }
      std::vector<std::uint32_t> with = prefix;
      with.push_back(picked);
      double got =
          cp_objective(with, norm, citems, profile, part, cfg.lambda);
      CHECK(got == doctest::Approx(best).epsilon(1e-12));
      prefix.push_back(picked);
    }
  }
}

TEST_CASE("rerank_xq: lambda limits and step replay") {
  PopularityPartition part = toy_partition(12);
  auto cands = make_cands(
      {{0, 1.0}, {3, 0.9}, {6, 0.8}, {1, 0.7}, {4, 0.6}, {2, 0.5}});
  RerankConfig cfg;
  cfg.n = 3;

  cfg.lambda = 0.0;
  auto top = rerank_xq(cands, 0.5, part, cfg);
  CHECK(top.items == std::vector<std::uint32_t>{0, 3, 6});

  // pure long-tail profile at lambda = 1: first pick must be long-tail
  cfg.lambda = 1.0;
  auto lt = rerank_xq(cands, 0.0, part, cfg);
  CHECK(part.group_of[lt.items[0]] != ItemGroup::Head);

  // replay oracle across random settings, both variants
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    cfg.lambda = rng.uniform();
    cfg.xq_smooth = trial % 2 == 0;
    double ratio = rng.uniform();
    auto got = rerank_xq(cands, ratio, part, cfg);
    auto want = oracle::xq_replay(cands, ratio, part, cfg.lambda, cfg.n,
                                  cfg.xq_smooth);
    CHECK(got.items == want);
  }
}

TEST_CASE("fair_min_protected_table: binomial oracle") {
  auto got = fair_min_protected_table(10, 0.5, 0.1);
  std::vector<int> frozen = {0, 0, 0, 1, 1, 1, 2, 2, 3, 3};
  CHECK(got == frozen);
  CHECK(got == oracle::fair_table(10, 0.5, 0.1));

  auto strict = fair_min_protected_table(10, 0.8, 0.1);
  CHECK(strict == oracle::fair_table(10, 0.8, 0.1));
  CHECK(strict == std::vector<int>{0, 1, 1, 2, 3, 4, 4, 5, 6, 6});

  Rng rng(31);
  for (int trial = 0; trial < 60; ++trial) {
    double p = 0.05 + 0.9 * rng.uniform();
    double alpha = 0.02 + 0.3 * rng.uniform();
    std::size_t n = 1 + rng.below(12);
    CHECK(fair_min_protected_table(n, p, alpha) ==
          oracle::fair_table(n, p, alpha));
  }
}

TEST_CASE("rerank_fair: vacuous constraint and all-protected degenerate") {
  PopularityPartition part = toy_partition(12);
  auto cands = make_cands(
      {{0, 1.0}, {3, 0.9}, {6, 0.8}, {1, 0.7}, {4, 0.6}, {2, 0.5}});
  RerankConfig cfg;
  cfg.n = 3;
  cfg.lambda = 0.0;  // effective protected share 0 -> no constraint
  auto top = rerank_fair(cands, part, cfg);
  CHECK(top.items == std::vector<std::uint32_t>{0, 3, 6});
  CHECK(!top.constraint_infeasible);

  // all candidates protected (M or T): constraint vacuous, plain top-n
  auto prot = make_cands({{1, 1.0}, {4, 0.9}, {2, 0.8}, {5, 0.7}, {7, 0.6}});
  cfg.lambda = 0.9;
  auto got = rerank_fair(prot, part, cfg);
  CHECK(got.items == std::vector<std::uint32_t>{1, 4, 2});
  CHECK(!got.constraint_infeasible);
}

TEST_CASE("rerank_fair: prefix counts follow the binomial table") {
  PopularityPartition part = toy_partition(40);
  // 10 head items (scores descending), 10 protected below them
  std::vector<std::pair<std::uint32_t, double>> v;
  double s = 10.0;
  for (int k = 0; k < 10; ++k) v.push_back({static_cast<std::uint32_t>(3 * k), s -= 0.1});
  for (int k = 0; k < 10; ++k)
    v.push_back({static_cast<std::uint32_t>(3 * k + 1), s -= 0.1});
  auto cands = make_cands(std::move(v));
  RerankConfig cfg;
  cfg.n = 10;
  cfg.lambda = 0.625;  // effective p = 0.5 with the 0.8 target share
  cfg.fs_alpha = 0.1;
  auto got = rerank_fair(cands, part, cfg);
  REQUIRE(got.items.size() == 10);
  auto table = oracle::fair_table(10, 0.5, 0.1);
  int prot = 0;
  for (std::size_t pos = 0; pos < 10; ++pos) {
    if (part.group_of[got.items[pos]] != ItemGroup::Head) prot++;
    CHECK(prot >= table[pos]);
  }
  // score order must hold within the non-forced picks: head prefix first
  CHECK(part.group_of[got.items[0]] == ItemGroup::Head);

  // infeasible: not enough protected candidates for a strict constraint
  auto scarce = make_cands(
      {{0, 1.0}, {3, 0.9}, {6, 0.8}, {9, 0.7}, {12, 0.6}, {1, 0.5}});
  cfg.lambda = 1.0;
  cfg.fs_target_share = 0.9;
  auto flagged = rerank_fair(scarce, part, cfg);
  CHECK(flagged.constraint_infeasible);
  CHECK(flagged.items.size() == 6);
}

TEST_CASE("MinCostFlow: tiny transportation instance") {
  // 2 sources, 2 sinks; optimal routes the cheap diagonal
  MinCostFlow flow(6);
  int s = 4, t = 5;
  flow.add_arc(s, 0, 2, 0);
  flow.add_arc(s, 1, 2, 0);
  int a00 = flow.add_arc(0, 2, 2, 1);
  int a01 = flow.add_arc(0, 3, 2, 10);
  int a10 = flow.add_arc(1, 2, 2, 10);
  int a11 = flow.add_arc(1, 3, 2, 1);
  flow.add_arc(2, t, 2, 0);
  flow.add_arc(3, t, 2, 0);
  auto r = flow.solve(s, t, 4);
  CHECK(r.flow == 4);
  CHECK(r.cost == 4);
  CHECK(flow.flow_on(a00) == 2);
  CHECK(flow.flow_on(a11) == 2);
  CHECK(flow.flow_on(a01) == 0);
  CHECK(flow.flow_on(a10) == 0);
}

TEST_CASE("rerank_dm: top-n targets reproduce plain top-n (fixed point)") {
  Rng rng(55);
  std::vector<ScoredCandidates> cands;
  for (std::uint32_t u = 0; u < 5; ++u) {
    std::vector<std::pair<std::uint32_t, double>> v;
    std::set<std::uint32_t> chosen;
    while (chosen.size() < 4) chosen.insert(rng.below(6));
    double s = 3.0;
    for (std::uint32_t i : chosen) v.push_back({i, s -= rng.uniform()});
    std::sort(v.begin(), v.end(),
              [](auto& a, auto& b) { return a.second > b.second; });
    ScoredCandidates c;
    c.user = u;
    c.items = std::move(v);
    cands.push_back(std::move(c));
  }
  RerankConfig cfg;
  cfg.n = 2;
  cfg.lambda = 0.7;
  auto targets = top_n_exposure_targets(cands, 6, cfg.n);
  DmResult dm = rerank_dm(cands, targets, cfg);
  CHECK(dm.discrepancy == 0);
  for (std::size_t u = 0; u < cands.size(); ++u) {
    auto top = top_n_of(cands[u], cfg.n);
    std::set<std::uint32_t> got(dm.lists[u].items.begin(),
                                dm.lists[u].items.end());
    std::set<std::uint32_t> want(top.items.begin(), top.items.end());
    CHECK(got == want);
  }
}

TEST_CASE("rerank_dm: matches exhaustive assignment search on 2x3") {
  std::vector<ScoredCandidates> cands;
  cands.push_back(make_cands({{0, 1.0}, {1, 0.9}, {2, 0.8}}, 0));
  cands.push_back(make_cands({{0, 1.0}, {1, 0.9}, {3, 0.8}}, 1));
  RerankConfig cfg;
  cfg.n = 2;
  cfg.lambda = 0.5;
  std::vector<std::int64_t> targets = {1, 1, 1, 1};  // uniform over catalog 4
  DmResult dm = rerank_dm(cands, targets, cfg);
  auto best = oracle::dm_exhaustive(cands, targets, cfg.lambda, cfg.n);
  CHECK(dm.discrepancy == best.discrepancy);
}

TEST_CASE("rerank_dm: solver equals exhaustive search on random instances") {
  Rng rng(321);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t users = 2 + rng.below(2);
    std::size_t catalog = 4 + rng.below(2);
    std::size_t m = 3 + rng.below(2);
    std::size_t n = 2;
    std::vector<ScoredCandidates> cands;
    for (std::uint32_t u = 0; u < users; ++u) {
      std::set<std::uint32_t> chosen;
      while (chosen.size() < m) chosen.insert(rng.below(catalog));
      std::vector<std::pair<std::uint32_t, double>> v;
      double s = 5;
      for (std::uint32_t i : chosen) v.push_back({i, s -= rng.uniform()});
      std::sort(v.begin(), v.end(),
                [](auto& a, auto& b) { return a.second > b.second; });
      ScoredCandidates c;
      c.user = u;
      c.items = std::move(v);
      cands.push_back(std::move(c));
    }
    std::vector<std::int64_t> targets =
        uniform_exposure_targets(catalog, users, n);
    RerankConfig cfg;
    cfg.n = n;
    cfg.lambda = 0.1 + 0.9 * rng.uniform();
    DmResult dm = rerank_dm(cands, targets, cfg);
    auto best = oracle::dm_exhaustive(cands, targets, cfg.lambda, cfg.n);

    // recompute the solver's cost under the same integer model
    std::size_t m_max = 0;
    for (auto& c : cands) m_max = std::max(m_max, c.items.size());
    std::int64_t rel_unit = std::llround(1000.0 * (1.0 - cfg.lambda));
    std::int64_t over_unit = std::llround(1000.0 * cfg.lambda) *
                             static_cast<std::int64_t>(m_max + 1);
    std::int64_t cost = 0;
    std::vector<std::int64_t> expo(catalog, 0);
    for (std::size_t u = 0; u < users; ++u)
      for (std::uint32_t item : dm.lists[u].items) {
        for (std::size_t k = 0; k < cands[u].items.size(); ++k)
          if (cands[u].items[k].first == item) {
            cost += rel_unit * static_cast<std::int64_t>(k + 1);
            break;
          }
        expo[item]++;
      }
    for (std::size_t i = 0; i < catalog; ++i)
      if (expo[i] > targets[i]) cost += over_unit * (expo[i] - targets[i]);
    CHECK(cost == best.cost);
  }
}

TEST_CASE("rerank_dm: lambda 0 equals top-n list-for-list") {
  std::vector<ScoredCandidates> cands;
  cands.push_back(make_cands({{2, 1.0}, {1, 0.9}, {0, 0.8}}, 0));
  cands.push_back(make_cands({{3, 1.0}, {0, 0.9}, {1, 0.8}}, 1));
  RerankConfig cfg;
  cfg.n = 2;
  cfg.lambda = 0.0;
  auto targets = uniform_exposure_targets(4, 2, 2);
  DmResult dm = rerank_dm(cands, targets, cfg);
  CHECK(dm.lists[0].items == std::vector<std::uint32_t>{2, 1});
  CHECK(dm.lists[1].items == std::vector<std::uint32_t>{3, 0});
}

TEST_CASE("uniform_exposure_targets: largest remainder sums exactly") {
  auto t = uniform_exposure_targets(7, 10, 3);  // 30 over 7 items
  std::int64_t sum = 0;
  for (auto v : t) sum += v;
  CHECK(sum == 30);
  CHECK(t[0] == 5);  // 30/7 = 4 rem 2 -> first two items get 5
  CHECK(t[1] == 5);
  CHECK(t[2] == 4);
}

TEST_CASE("re-rankers: output is always an n-subset of candidates") {
  PopularityPartition part = toy_partition(30);
  Rng rng(1001);
  for (int trial = 0; trial < 60; ++trial) {
    std::size_t m = 6 + rng.below(10);
    std::set<std::uint32_t> chosen;
    while (chosen.size() < m) chosen.insert(rng.below(30));
    std::vector<std::pair<std::uint32_t, double>> v;
    double s = 20;
    for (std::uint32_t i : chosen) v.push_back({i, s -= rng.uniform()});
    std::sort(v.begin(), v.end(),
              [](auto& a, auto& b) { return a.second > b.second; });
    auto cands = make_cands(std::move(v));
    RerankConfig cfg;
    cfg.n = 5;
    cfg.lambda = rng.uniform();
    double h = rng.uniform();
    PopularityDistribution prof = dist(h, (1 - h) / 2, (1 - h) / 2);

    for (int method = 0; method < 3; ++method) {
      RecommendationList list =
          method == 0   ? rerank_cp(cands, prof, part, cfg)
          : method == 1 ? rerank_xq(cands, h, part, cfg)
                        : rerank_fair(cands, part, cfg);
      CHECK(list.items.size() == cfg.n);
      std::set<std::uint32_t> uniq(list.items.begin(), list.items.end());
      CHECK(uniq.size() == cfg.n);
      for (std::uint32_t i : list.items) CHECK(chosen.count(i) == 1);
    }
  }
}

TEST_CASE("re-rankers: error when n exceeds the candidate list") {
  PopularityPartition part = toy_partition(6);
  auto cands = make_cands({{0, 1.0}, {1, 0.9}});
  RerankConfig cfg;
  cfg.n = 3;
  CHECK_THROWS_AS(rerank_cp(cands, dist(1, 0, 0), part, cfg), DataError);
  CHECK_THROWS_AS(rerank_xq(cands, 0.5, part, cfg), DataError);
  CHECK_THROWS_AS(rerank_fair(cands, part, cfg), DataError);
}
