#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "popcal/metrics.hpp"

namespace popcal {

/// Everything a sweep needs; keys mirror `section.name` entries of the
/// config file and the CLI flags.
struct ExperimentConfig {
  // data
  std::string data_path;
  std::string data_format = "movielens";  // movielens | playcounts | csv
  bool data_header = false;               // playcounts: skip first line
  std::size_t min_profile = 0;            // 0 = keep everyone
  double rating_min = 1.0;
  double rating_max = 5.0;

  // split
  double train_ratio = 0.8;
  std::uint64_t split_seed = 42;

  // partition
  double head_share = 0.2;
  double tail_share = 0.2;
  bool weighted_affinity = false;  // user grouping by rating-weighted ratio

  // train
  std::string algo = "rankals";  // rankals | als | itemknn | mostpop
  int factors = 50;
  double reg = 0.01;
  int sweeps = 20;
  std::uint64_t train_seed = 13;
  bool item_bias = true;        // als only
  bool support_weights = false; // rankals only
  int knn_k = 50;

  // recommend
  std::size_t m = 100;

  // rerank
  std::vector<std::string> methods = {"base", "cp", "xq", "fs", "dm"};
  std::vector<double> lambdas = {0.0, 0.1, 0.2, 0.3, 0.4,
                                 0.5, 0.6, 0.7, 0.8, 0.9};
  std::size_t n = 10;
  double fs_target_share = 0.8;
  double fs_alpha = 0.1;
  bool xq_smooth = true;
  bool cp_weighted_profile = true;
  std::string dm_targets = "uniform";  // uniform | topn

  // evaluate
  double precision_min_rating = -std::numeric_limits<double>::infinity();

  // output
  std::string out_dir;
};

ExperimentConfig load_config_file(const std::string& path);
void apply_config_kv(ExperimentConfig* cfg, const std::string& key,
                     const std::string& value);
void validate_config(const ExperimentConfig& cfg);

/// Pipeline stages; each reads/writes the canonical artifacts in
/// cfg.out_dir so any stage can be re-run in isolation.
void stage_ingest(const ExperimentConfig& cfg);
void stage_split(const ExperimentConfig& cfg);
void stage_train(const ExperimentConfig& cfg);
void stage_recommend(const ExperimentConfig& cfg);
void stage_rerank(const ExperimentConfig& cfg);

/// Explicit inputs for `evaluate`; empty fields fall back to the out_dir
/// artifacts, so metrics can be recomputed without retraining.
struct EvaluatePaths {
  std::string lists;
  std::string train;
  std::string test;
  std::string partition;
};
std::vector<MetricReport> stage_evaluate(const ExperimentConfig& cfg,
                                         const EvaluatePaths& paths = {});
void write_manifest(const ExperimentConfig& cfg);

/// ingest -> split -> train -> recommend -> rerank -> evaluate -> manifest.
std::vector<MetricReport> run_experiment(const ExperimentConfig& cfg);

/// Merges a sweep's report into a per-method table at chosen lambdas.
/// picks: method -> lambda (must exist in the report).
std::vector<MetricReport> pick_report_rows(
    const std::vector<MetricReport>& all,
    const std::vector<std::pair<std::string, double>>& picks);

// artifact names inside out_dir
namespace artifact {
inline constexpr const char* kDataset = "dataset.csv";
inline constexpr const char* kTrain = "train.csv";
inline constexpr const char* kTest = "test.csv";
inline constexpr const char* kSplit = "split.csv";
inline constexpr const char* kPartition = "partition.csv";
inline constexpr const char* kUserGroups = "usergroups.csv";
inline constexpr const char* kModel = "model.txt";
inline constexpr const char* kCandidates = "candidates.csv";
inline constexpr const char* kLists = "lists.csv";
inline constexpr const char* kReport = "report.csv";
inline constexpr const char* kPerUser = "peruser.csv";
inline constexpr const char* kHistogram = "histogram.csv";
inline constexpr const char* kComposition = "composition.csv";
inline constexpr const char* kManifest = "manifest.json";
}  // namespace artifact

std::string artifact_path(const ExperimentConfig& cfg, const char* name);

}  // namespace popcal
