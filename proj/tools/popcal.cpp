// popcal: offline evaluation toolkit for popularity-bias mitigation.
// Subcommands run one pipeline stage each over persisted CSV artifacts;
// `sweep` runs the whole chain from a config file.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "popcal/csvio.hpp"
#include "popcal/runner.hpp"

namespace {

using popcal::ExperimentConfig;

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> sets;  // key=value overrides
};

void add_common(CLI::App* cmd, CommonArgs* args) {
  cmd->add_option("--config", args->config_path,
                  "config file (ini-style sections)");
  cmd->add_option("--set", args->sets,
                  "override a config key, e.g. --set split.seed=7");
}

ExperimentConfig build_config(const CommonArgs& args) {
  ExperimentConfig cfg;
  if (!args.config_path.empty())
    cfg = popcal::load_config_file(args.config_path);
  for (const std::string& kv : args.sets) {
    auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw popcal::UsageError("--set expects key=value, got: " + kv);
    popcal::apply_config_kv(&cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

void print_report(const std::vector<popcal::MetricReport>& rows) {
  std::cout << popcal::report_header() << '\n';
  for (const auto& r : rows) std::cout << popcal::report_row(r) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"popularity-bias evaluation toolkit"};
  app.require_subcommand(1);

  CommonArgs ingest_args, split_args, train_args, rec_args, rerank_args,
      eval_args, sweep_args, report_args;

  auto* c_ingest = app.add_subcommand(
      "ingest", "parse raw data into the canonical dataset CSV");
  add_common(c_ingest, &ingest_args);
  std::string ingest_data, ingest_format, ingest_out;
  std::size_t ingest_minprof = SIZE_MAX;
  bool ingest_header = false;
  c_ingest->add_option("--data", ingest_data, "raw input file");
  c_ingest->add_option("--format", ingest_format,
                       "movielens | playcounts | csv");
  c_ingest->add_option("--out", ingest_out, "output directory");
  c_ingest->add_option("--min-profile", ingest_minprof,
                       "drop users with fewer interactions");
  c_ingest->add_flag("--header", ingest_header,
                     "playcounts file has a header line");

  auto* c_split = app.add_subcommand("split", "deterministic train/test split");
  add_common(c_split, &split_args);
  double split_ratio = -1;
  std::int64_t split_seed = -1;
  std::string split_out;
  c_split->add_option("--ratio", split_ratio, "train fraction (0,1)");
  c_split->add_option("--seed", split_seed, "split seed");
  c_split->add_option("--out", split_out, "output directory");

  auto* c_train = app.add_subcommand("train", "fit the base recommender");
  add_common(c_train, &train_args);
  std::string train_algo, train_out;
  c_train->add_option("--algo", train_algo, "rankals | als | itemknn | mostpop");
  c_train->add_option("--out", train_out, "output directory");

  auto* c_rec = app.add_subcommand("recommend",
                                   "emit size-m candidate lists per user");
  add_common(c_rec, &rec_args);
  std::size_t rec_m = 0;
  std::string rec_out;
  c_rec->add_option("--m", rec_m, "candidate list size");
  c_rec->add_option("--out", rec_out, "output directory");

  auto* c_rerank = app.add_subcommand(
      "rerank", "apply mitigation re-rankers over the candidates");
  add_common(c_rerank, &rerank_args);
  std::string rerank_methods, rerank_lambdas, rerank_out;
  std::size_t rerank_n = 0;
  c_rerank->add_option("--methods", rerank_methods,
                       "comma list from base,cp,xq,fs,dm");
  c_rerank->add_option("--lambdas", rerank_lambdas, "comma list in [0,1]");
  c_rerank->add_option("--n", rerank_n, "final list length");
  c_rerank->add_option("--out", rerank_out, "output directory");

  auto* c_eval = app.add_subcommand("evaluate", "compute the metric report");
  add_common(c_eval, &eval_args);
  popcal::EvaluatePaths eval_paths;
  std::string eval_out;
  c_eval->add_option("--lists", eval_paths.lists, "re-ranked lists CSV");
  c_eval->add_option("--train", eval_paths.train, "training dataset CSV");
  c_eval->add_option("--test", eval_paths.test, "test dataset CSV");
  c_eval->add_option("--partition", eval_paths.partition,
                     "item partition CSV (recomputed when omitted)");
  c_eval->add_option("--out", eval_out, "output directory");

  auto* c_sweep =
      app.add_subcommand("sweep", "run the full pipeline from a config");
  add_common(c_sweep, &sweep_args);

  auto* c_report = app.add_subcommand(
      "report", "merge a sweep report at chosen per-method lambdas");
  add_common(c_report, &report_args);
  std::string report_runs, report_out;
  std::vector<std::string> report_picks;
  c_report->add_option("--runs", report_runs, "sweep output directory");
  c_report->add_option("--pick", report_picks,
                       "method=lambda (repeatable), e.g. cp=0.9");
  c_report->add_option("--out", report_out, "merged table CSV path");

  try {
    app.parse(argc, argv);

    if (c_ingest->parsed()) {
      ExperimentConfig cfg = build_config(ingest_args);
      if (!ingest_data.empty()) cfg.data_path = ingest_data;
      if (!ingest_format.empty()) cfg.data_format = ingest_format;
      if (!ingest_out.empty()) cfg.out_dir = ingest_out;
      if (ingest_minprof != SIZE_MAX) cfg.min_profile = ingest_minprof;
      if (ingest_header) cfg.data_header = true;
      popcal::validate_config(cfg);
      popcal::stage_ingest(cfg);
    } else if (c_split->parsed()) {
      ExperimentConfig cfg = build_config(split_args);
      if (split_ratio > 0) cfg.train_ratio = split_ratio;
      if (split_seed >= 0)
        cfg.split_seed = static_cast<std::uint64_t>(split_seed);
      if (!split_out.empty()) cfg.out_dir = split_out;
      popcal::validate_config(cfg);
      popcal::stage_split(cfg);
    } else if (c_train->parsed()) {
      ExperimentConfig cfg = build_config(train_args);
      if (!train_algo.empty()) cfg.algo = train_algo;
      if (!train_out.empty()) cfg.out_dir = train_out;
      popcal::validate_config(cfg);
      popcal::stage_train(cfg);
    } else if (c_rec->parsed()) {
      ExperimentConfig cfg = build_config(rec_args);
      if (rec_m > 0) cfg.m = rec_m;
      if (!rec_out.empty()) cfg.out_dir = rec_out;
      popcal::validate_config(cfg);
      popcal::stage_recommend(cfg);
    } else if (c_rerank->parsed()) {
      ExperimentConfig cfg = build_config(rerank_args);
      if (!rerank_methods.empty())
        popcal::apply_config_kv(&cfg, "rerank.methods", rerank_methods);
      if (!rerank_lambdas.empty())
        popcal::apply_config_kv(&cfg, "rerank.lambdas", rerank_lambdas);
      if (rerank_n > 0) cfg.n = rerank_n;
      if (!rerank_out.empty()) cfg.out_dir = rerank_out;
      popcal::validate_config(cfg);
      popcal::stage_rerank(cfg);
    } else if (c_eval->parsed()) {
      ExperimentConfig cfg = build_config(eval_args);
      if (!eval_out.empty()) cfg.out_dir = eval_out;
      popcal::validate_config(cfg);
      print_report(popcal::stage_evaluate(cfg, eval_paths));
    } else if (c_sweep->parsed()) {
      ExperimentConfig cfg = build_config(sweep_args);
      print_report(popcal::run_experiment(cfg));
    } else if (c_report->parsed()) {
      if (report_runs.empty())
        throw popcal::UsageError("report requires --runs");
      std::vector<popcal::MetricReport> all = popcal::read_report_csv(
          report_runs + "/" + popcal::artifact::kReport);
      std::vector<std::pair<std::string, double>> picks;
      for (const std::string& p : report_picks) {
        auto eq = p.find('=');
        if (eq == std::string::npos)
          throw popcal::UsageError("--pick expects method=lambda: " + p);
        picks.push_back({p.substr(0, eq), std::stod(p.substr(eq + 1))});
      }
      std::vector<popcal::MetricReport> rows =
          popcal::pick_report_rows(all, picks);
      if (!report_out.empty()) {
        popcal::write_report_csv(report_out, rows);
      }
      print_report(rows);
    }
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return 0;  // --help
    std::cerr << e.what() << "\n";
    std::cerr << app.help() << "\n";
    return 1;
  } catch (const popcal::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const popcal::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const popcal::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
