#include "popcal/runner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>

#include "popcal/csvio.hpp"
#include "popcal/ingest.hpp"
#include "popcal/synth.hpp"

namespace popcal {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw UsageError("bad boolean value: " + v);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : v) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

RatingScale scale_of(const ExperimentConfig& cfg) {
  return {cfg.rating_min, cfg.rating_max};
}

RatingDataset load_train(const ExperimentConfig& cfg) {
  return read_dataset_csv(artifact_path(cfg, artifact::kTrain), scale_of(cfg));
}

struct Context {
  RatingDataset train;
  ItemPopularity pop;
  PopularityPartition part;
  UserGroupAssignment groups;
  std::vector<PopularityDistribution> profiles;  // rating-weighted P_u
};

Context make_context(const ExperimentConfig& cfg, RatingDataset train,
                     const std::string& partition_override = "") {
  Context ctx{std::move(train), {}, {}, {}, {}};
  ctx.pop = compute_popularity(ctx.train);
  fs::path ppath = partition_override.empty()
                       ? fs::path(artifact_path(cfg, artifact::kPartition))
                       : fs::path(partition_override);
  if (fs::exists(ppath)) {
    PartitionFile pf = read_partition_csv(ppath.string(), ctx.train);
    ctx.pop = std::move(pf.pop);
    ctx.part = std::move(pf.part);
  } else {
    ctx.part = partition_items(ctx.pop, cfg.head_share, cfg.tail_share);
  }
  ctx.groups = group_users(ctx.train, ctx.part, cfg.weighted_affinity);
  ctx.profiles.reserve(ctx.train.num_users());
  for (std::uint32_t u = 0; u < ctx.train.num_users(); ++u)
    ctx.profiles.push_back(profile_distribution(
        u, ctx.train, ctx.part, cfg.cp_weighted_profile));
  return ctx;
}

}  // namespace

std::string artifact_path(const ExperimentConfig& cfg, const char* name) {
  return (fs::path(cfg.out_dir) / name).string();
}

void apply_config_kv(ExperimentConfig* cfg, const std::string& key,
                     const std::string& value) {
  if (key == "data.path") cfg->data_path = value;
  else if (key == "data.format") cfg->data_format = value;
  else if (key == "data.header") cfg->data_header = parse_bool(value);
  else if (key == "data.min_profile") cfg->min_profile = std::stoul(value);
  else if (key == "data.rating_min") cfg->rating_min = std::stod(value);
  else if (key == "data.rating_max") cfg->rating_max = std::stod(value);
  else if (key == "split.ratio") cfg->train_ratio = std::stod(value);
  else if (key == "split.seed") cfg->split_seed = std::stoull(value);
  else if (key == "partition.head_share") cfg->head_share = std::stod(value);
  else if (key == "partition.tail_share") cfg->tail_share = std::stod(value);
  else if (key == "partition.weighted_affinity")
    cfg->weighted_affinity = parse_bool(value);
  else if (key == "train.algo") cfg->algo = value;
  else if (key == "train.factors") cfg->factors = std::stoi(value);
  else if (key == "train.reg") cfg->reg = std::stod(value);
  else if (key == "train.sweeps") cfg->sweeps = std::stoi(value);
  else if (key == "train.seed") cfg->train_seed = std::stoull(value);
  else if (key == "train.item_bias") cfg->item_bias = parse_bool(value);
  else if (key == "train.support_weights")
    cfg->support_weights = parse_bool(value);
  else if (key == "train.knn_k") cfg->knn_k = std::stoi(value);
  else if (key == "recommend.m") cfg->m = std::stoul(value);
  else if (key == "rerank.methods") cfg->methods = split_list(value);
  else if (key == "rerank.lambdas") {
    cfg->lambdas.clear();
    for (const std::string& s : split_list(value))
      cfg->lambdas.push_back(std::stod(s));
  } else if (key == "rerank.n") cfg->n = std::stoul(value);
  else if (key == "rerank.fs_p") cfg->fs_target_share = std::stod(value);
  else if (key == "rerank.fs_alpha") cfg->fs_alpha = std::stod(value);
  else if (key == "rerank.xq_smooth") cfg->xq_smooth = parse_bool(value);
  else if (key == "rerank.cp_weighted")
    cfg->cp_weighted_profile = parse_bool(value);
  else if (key == "rerank.dm_targets") cfg->dm_targets = value;
  else if (key == "evaluate.min_rating")
    cfg->precision_min_rating = std::stod(value);
  else if (key == "output.dir") cfg->out_dir = value;
  else throw UsageError("unknown config key: " + key);
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path);
  ExperimentConfig cfg;
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    lineno++;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw UsageError("bad config line " + std::to_string(lineno) + ": " + t);
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (section.empty())
      throw UsageError("config key outside a [section]: " + key);
    apply_config_kv(&cfg, section + "." + key, value);
  }
  return cfg;
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.out_dir.empty()) throw UsageError("output.dir is required");
  if (!(cfg.train_ratio > 0 && cfg.train_ratio < 1))
    throw UsageError("split.ratio must be in (0,1)");
  if (cfg.n < 1 || cfg.m < cfg.n)
    throw UsageError("need m >= n >= 1");
  double prev = -1;
  for (double l : cfg.lambdas) {
    if (!(l >= 0.0 && l <= 1.0))
      throw UsageError("lambda grid values must lie in [0,1]");
    if (l <= prev) throw UsageError("lambda grid must be strictly increasing");
    prev = l;
  }
  static const std::set<std::string> known_methods = {"base", "cp", "xq", "fs",
                                                      "dm"};
  for (const std::string& m : cfg.methods)
    if (!known_methods.count(m)) throw UsageError("unknown method: " + m);
  static const std::set<std::string> known_algos = {"rankals", "als",
                                                    "itemknn", "mostpop"};
  if (!known_algos.count(cfg.algo))
    throw UsageError("unknown base algorithm: " + cfg.algo);
  if (cfg.dm_targets != "uniform" && cfg.dm_targets != "topn")
    throw UsageError("rerank.dm_targets must be uniform or topn");
  if (cfg.data_format != "movielens" && cfg.data_format != "playcounts" &&
      cfg.data_format != "csv")
    throw UsageError("unknown data format: " + cfg.data_format);
}

void stage_ingest(const ExperimentConfig& cfg) {
  if (cfg.data_path.empty()) throw UsageError("data.path is required");
  fs::create_directories(cfg.out_dir);
  RatingDataset ds = [&] {
    if (cfg.data_format == "movielens")
      return parse_movielens(cfg.data_path, scale_of(cfg));
    if (cfg.data_format == "playcounts") {
      PlayCountTable t =
          parse_playcounts(cfg.data_path, cfg.data_header);
      return counts_to_ratings(t, scale_of(cfg));
    }
    return read_dataset_csv(cfg.data_path, scale_of(cfg));
  }();
  if (cfg.min_profile > 1) ds = filter_min_profile(ds, cfg.min_profile);
  write_dataset_csv(artifact_path(cfg, artifact::kDataset), ds);
}

void stage_split(const ExperimentConfig& cfg) {
  RatingDataset ds =
      read_dataset_csv(artifact_path(cfg, artifact::kDataset), scale_of(cfg));
  SplitDataset split = split_train_test(ds, cfg.train_ratio, cfg.split_seed);
  write_dataset_csv(artifact_path(cfg, artifact::kTrain), split.train);
  write_dataset_csv(artifact_path(cfg, artifact::kTest), split.test);
  write_split_manifest(artifact_path(cfg, artifact::kSplit), split);

  // partition + user groups are split artifacts: everything downstream of
  // the split reads them instead of recomputing
  ItemPopularity pop = compute_popularity(split.train);
  PopularityPartition part =
      partition_items(pop, cfg.head_share, cfg.tail_share);
  UserGroupAssignment groups =
      group_users(split.train, part, cfg.weighted_affinity);
  write_partition_csv(artifact_path(cfg, artifact::kPartition), split.train,
                      pop, part);
  write_usergroups_csv(artifact_path(cfg, artifact::kUserGroups), split.train,
                       groups);
}

void stage_train(const ExperimentConfig& cfg) {
  if (cfg.algo == "itemknn" || cfg.algo == "mostpop") return;  // stateless
  RatingDataset train = load_train(cfg);
  MfConfig mf;
  mf.objective = cfg.algo == "rankals" ? MfConfig::Objective::kPairwiseRank
                                       : MfConfig::Objective::kPointwise;
  mf.factors = cfg.factors;
  mf.reg = cfg.reg;
  mf.sweeps = cfg.sweeps;
  mf.seed = cfg.train_seed;
  mf.item_bias = cfg.algo == "als" && cfg.item_bias;
  mf.support_weights = cfg.algo == "rankals" && cfg.support_weights;
  FactorModel model = fit_ranking_mf(train, mf);
  save_model(artifact_path(cfg, artifact::kModel), model);
}

void stage_recommend(const ExperimentConfig& cfg) {
  RatingDataset train = load_train(cfg);
  std::vector<ScoredCandidates> cands;
  if (cfg.algo == "itemknn") {
    ItemKnnModel knn = fit_item_knn(train, cfg.knn_k);
    cands = generate_candidates(ItemKnnScorer(knn, train), train, cfg.m);
  } else if (cfg.algo == "mostpop") {
    ItemPopularity pop = compute_popularity(train);
    cands = generate_candidates(MostPopularScorer(pop, train.num_users()),
                                train, cfg.m);
  } else {
    FactorModel model = load_model(artifact_path(cfg, artifact::kModel));
    cands = generate_candidates(FactorScorer(model), train, cfg.m);
  }
  write_candidates_csv(artifact_path(cfg, artifact::kCandidates), train,
                       cands);
}

void stage_rerank(const ExperimentConfig& cfg) {
  RatingDataset train = load_train(cfg);
  Context ctx = make_context(cfg, std::move(train));
  std::vector<ScoredCandidates> cands = read_candidates_csv(
      artifact_path(cfg, artifact::kCandidates), ctx.train);

  const std::string lists_path = artifact_path(cfg, artifact::kLists);
  bool first = true;
  auto emit = [&](const std::string& method, double lambda,
                  std::vector<RecommendationList> lists) {
    append_lists_csv(lists_path, ctx.train, {method, lambda, std::move(lists)},
                     first);
    first = false;
  };

  for (const std::string& method : cfg.methods) {
    if (method == "base") {
      std::vector<RecommendationList> lists;
      lists.reserve(cands.size());
      for (const ScoredCandidates& c : cands)
        lists.push_back(top_n_of(c, cfg.n));
      emit("base", std::numeric_limits<double>::quiet_NaN(), std::move(lists));
      continue;
    }
    for (double lambda : cfg.lambdas) {
      RerankConfig rc;
      rc.lambda = lambda;
      rc.n = cfg.n;
      rc.fs_target_share = cfg.fs_target_share;
      rc.fs_alpha = cfg.fs_alpha;
      rc.xq_smooth = cfg.xq_smooth;

      std::vector<RecommendationList> lists(cands.size());
      if (method == "cp") {
        parallel_for(cands.size(), [&](std::size_t lo, std::size_t hi) {
          for (std::size_t u = lo; u < hi; ++u)
            lists[u] = rerank_cp(cands[u], ctx.profiles[cands[u].user],
                                 ctx.part, rc);
        });
      } else if (method == "xq") {
        parallel_for(cands.size(), [&](std::size_t lo, std::size_t hi) {
          for (std::size_t u = lo; u < hi; ++u)
            lists[u] = rerank_xq(cands[u], ctx.groups.affinity[cands[u].user],
                                 ctx.part, rc);
        });
      } else if (method == "fs") {
        parallel_for(cands.size(), [&](std::size_t lo, std::size_t hi) {
          for (std::size_t u = lo; u < hi; ++u)
            lists[u] = rerank_fair(cands[u], ctx.part, rc);
        });
      } else if (method == "dm") {
        std::vector<std::int64_t> targets =
            cfg.dm_targets == "topn"
                ? top_n_exposure_targets(cands, ctx.train.num_items(), cfg.n)
                : uniform_exposure_targets(ctx.train.num_items(),
                                           cands.size(), cfg.n);
        DmResult dm = rerank_dm(cands, targets, rc);
        lists = std::move(dm.lists);
      }
      emit(method, lambda, std::move(lists));
    }
  }
}

std::vector<MetricReport> stage_evaluate(const ExperimentConfig& cfg,
                                         const EvaluatePaths& paths) {
  const std::string train_path =
      paths.train.empty() ? artifact_path(cfg, artifact::kTrain) : paths.train;
  const std::string test_path =
      paths.test.empty() ? artifact_path(cfg, artifact::kTest) : paths.test;
  const std::string lists_path =
      paths.lists.empty() ? artifact_path(cfg, artifact::kLists) : paths.lists;
  RatingDataset train = read_dataset_csv(train_path, scale_of(cfg));
  Context ctx = make_context(cfg, std::move(train), paths.partition);
  RatingDataset test = read_dataset_csv(test_path, scale_of(cfg));
  // test shares train's user table; map its users
  std::vector<ListsRow> rows = read_lists_csv(lists_path, ctx.train);

  // align test user indexing with train
  // (read_dataset_csv interns ids fresh; re-map interactions)
  std::vector<Interaction> remapped;
  remapped.reserve(test.num_interactions());
  for (const Interaction& it : test.interactions()) {
    auto u = ctx.train.user_index(test.user_id(it.user));
    auto i = ctx.train.item_index(test.item_id(it.item));
    if (!u || !i) continue;  // unseen in train: cannot be recommended
    remapped.push_back({*u, *i, it.rating, it.timestamp});
  }
  RatingDataset test_aligned(ctx.train.user_ids(), ctx.train.item_ids(),
                             std::move(remapped), test.scale());

  std::vector<MetricReport> report;
  std::ofstream peruser(artifact_path(cfg, artifact::kPerUser));
  peruser << "method,lambda,user_id,group,jsd,precision\n";
  std::ofstream histogram(artifact_path(cfg, artifact::kHistogram));
  histogram << "method,lambda,rank,count\n";
  std::ofstream composition(artifact_path(cfg, artifact::kComposition));
  composition << "method,lambda,scope,group,h,m,t\n";

  GroupComposition prof = profile_composition(ctx.train, ctx.part, ctx.groups);
  for (int g = 0; g < 3; ++g)
    composition << "data,na,profile," << to_string(static_cast<UserGroup>(g))
                << ',' << format_double(prof[g][0]) << ','
                << format_double(prof[g][1]) << ','
                << format_double(prof[g][2]) << '\n';

  for (const ListsRow& row : rows) {
    MetricReport r;
    r.method = row.method;
    r.lambda = row.lambda;
    r.precision = precision_at_n(row.lists, test_aligned,
                                 cfg.precision_min_rating);
    r.agg_div = aggregate_diversity(row.lists, ctx.train.num_items());
    r.gini = gini_index(row.lists, ctx.train.num_items());
    r.arp = average_rec_popularity(row.lists, ctx.pop, true,
                                   ctx.train.num_users());
    r.arp_raw = average_rec_popularity(row.lists, ctx.pop, false,
                                       ctx.train.num_users());
    UpdResult upd = user_popularity_deviation(row.lists, ctx.profiles,
                                              ctx.groups, ctx.part);
    r.upd = upd.overall;
    r.upd_group = upd.per_group;
    report.push_back(r);

    const std::string label = lambda_label(row.lambda);
    for (const RecommendationList& list : row.lists) {
      double jsd = js_divergence(ctx.profiles[list.user],
                                 list_distribution(list.items, ctx.part));
      auto held_out = test_aligned.user_profile(list.user);
      std::size_t relevant = 0, hits = 0;
      for (const Interaction& it : held_out)
        if (it.rating >= cfg.precision_min_rating) {
          relevant++;
          for (std::uint32_t item : list.items)
            if (item == it.item) {
              hits++;
              break;
            }
        }
      peruser << row.method << ',' << label << ','
              << csv_escape(ctx.train.user_id(list.user)) << ','
              << to_string(ctx.groups.group_of[list.user]) << ','
              << format_double(jsd) << ',';
      if (relevant > 0)
        peruser << format_double(static_cast<double>(hits) /
                                 static_cast<double>(list.items.size()));
      peruser << '\n';
    }

    ExposureHistogram const h =
        exposure_histogram(row.lists, ctx.train.num_items());
    for (std::size_t k = 0; k < h.sorted_desc.size(); ++k)
      histogram << row.method << ',' << label << ',' << (k + 1) << ','
                << h.sorted_desc[k] << '\n';

    GroupComposition comp = group_composition(row.lists, ctx.part, ctx.groups);
    for (int g = 0; g < 3; ++g)
      composition << row.method << ',' << label << ",recs,"
                  << to_string(static_cast<UserGroup>(g)) << ','
                  << format_double(comp[g][0]) << ','
                  << format_double(comp[g][1]) << ','
                  << format_double(comp[g][2]) << '\n';
  }
  write_report_csv(artifact_path(cfg, artifact::kReport), report);
  return report;
}

void write_manifest(const ExperimentConfig& cfg) {
  json m;
  m["toolkit"] = "popcal 0.1.0";
  json c;
  c["data.path"] = cfg.data_path;
  c["data.format"] = cfg.data_format;
  c["data.header"] = cfg.data_header;
  c["data.min_profile"] = cfg.min_profile;
  c["data.rating_min"] = cfg.rating_min;
  c["data.rating_max"] = cfg.rating_max;
  c["split.ratio"] = cfg.train_ratio;
  c["split.seed"] = cfg.split_seed;
  c["partition.head_share"] = cfg.head_share;
  c["partition.tail_share"] = cfg.tail_share;
  c["partition.weighted_affinity"] = cfg.weighted_affinity;
  c["train.algo"] = cfg.algo;
  c["train.factors"] = cfg.factors;
  c["train.reg"] = cfg.reg;
  c["train.sweeps"] = cfg.sweeps;
  c["train.seed"] = cfg.train_seed;
  c["train.item_bias"] = cfg.item_bias;
  c["train.support_weights"] = cfg.support_weights;
  c["train.knn_k"] = cfg.knn_k;
  c["recommend.m"] = cfg.m;
  c["rerank.methods"] = cfg.methods;
  c["rerank.lambdas"] = cfg.lambdas;
  c["rerank.n"] = cfg.n;
  c["rerank.fs_p"] = cfg.fs_target_share;
  c["rerank.fs_alpha"] = cfg.fs_alpha;
  c["rerank.xq_smooth"] = cfg.xq_smooth;
  c["rerank.cp_weighted"] = cfg.cp_weighted_profile;
  c["rerank.dm_targets"] = cfg.dm_targets;
  c["output.dir"] = cfg.out_dir;
  m["config"] = c;

  json decisions;
  decisions["dedup"] = "last occurrence wins (timestamp, then file order)";
  decisions["count_to_rating"] = "per-user quantile bins (mid-rank)";
  decisions["split"] = "per-user stratified, ceil(ratio*|profile|) to train";
  decisions["partition_boundary"] =
      "boundary item joins H; suffix stays within tail share";
  decisions["user_affinity"] =
      cfg.weighted_affinity ? "rating-weighted H ratio" : "plain H count ratio";
  decisions["cp_profile"] = cfg.cp_weighted_profile
                                ? "rating-weighted p(c|u)"
                                : "unweighted profile ratios";
  decisions["score_normalization"] = "min-max within each candidate list";
  decisions["jsd_log_base"] = 2;
  decisions["arp_normalization"] = "phi / |U| (raw value also reported)";
  decisions["xq_gain"] = cfg.xq_smooth ? "smooth (linear depletion)"
                                       : "binary coverage";
  decisions["fs_effective_share"] = "lambda * fs_p";
  decisions["dm_targets"] = cfg.dm_targets;
  m["decisions"] = decisions;

  if (!cfg.data_path.empty() && fs::exists(cfg.data_path)) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a_file(cfg.data_path)));
    m["data_checksum_fnv1a"] = buf;
  }

  std::ofstream out(artifact_path(cfg, artifact::kManifest));
  if (!out) throw DataError("cannot write manifest");
  out << m.dump(2) << '\n';
}

std::vector<MetricReport> run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const char* stage = "ingest";
  try {
    fs::create_directories(cfg.out_dir);
    stage_ingest(cfg);
    stage = "split";
    stage_split(cfg);
    stage = "train";
    stage_train(cfg);
    stage = "recommend";
    stage_recommend(cfg);
    stage = "rerank";
    stage_rerank(cfg);
    stage = "evaluate";
    std::vector<MetricReport> report = stage_evaluate(cfg);
    stage = "manifest";
    write_manifest(cfg);
    return report;
  } catch (...) {
    // leave no partial artifacts behind a failed stage
    std::error_code ec;
    fs::remove_all(cfg.out_dir, ec);
    std::fprintf(stderr, "run failed during stage: %s\n", stage);
    throw;
  }
}

std::vector<MetricReport> pick_report_rows(
    const std::vector<MetricReport>& all,
    const std::vector<std::pair<std::string, double>>& picks) {
  std::vector<MetricReport> out;
  for (const MetricReport& r : all)
    if (r.method == "base" && std::isnan(r.lambda)) out.push_back(r);
  for (const auto& [method, lambda] : picks) {
    bool found = false;
    for (const MetricReport& r : all) {
      if (r.method == method && !std::isnan(r.lambda) &&
          std::fabs(r.lambda - lambda) < 1e-12) {
        out.push_back(r);
        found = true;
        break;
      }
    }
    if (!found)
      throw UsageError("no report row for " + method + " at requested lambda");
  }
  return out;
}

}  // namespace popcal
