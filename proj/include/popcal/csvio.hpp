#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "popcal/dataset.hpp"
#include "popcal/metrics.hpp"
#include "popcal/popularity.hpp"
#include "popcal/recommender.hpp"
#include "popcal/rerank.hpp"

namespace popcal {

// Minimal RFC-style CSV: fields containing comma/quote/newline are quoted,
// quotes doubled. All writers emit deterministic bytes.
std::string csv_escape(const std::string& field);
std::vector<std::string> csv_split(const std::string& line);

std::string format_double(double v);  // canonical %.10g
std::string format_exact(double v);   // %.17g, for checkpoints

// dataset.csv: user_id,item_id,rating,timestamp ("" when absent)
void write_dataset_csv(const std::string& path, const RatingDataset& ds);
RatingDataset read_dataset_csv(const std::string& path, RatingScale scale);

// split.csv: user_id,item_id,fold (train|test)
void write_split_manifest(const std::string& path, const SplitDataset& split);

// partition.csv: item_id,phi,group
void write_partition_csv(const std::string& path, const RatingDataset& train,
                         const ItemPopularity& pop,
                         const PopularityPartition& part);
struct PartitionFile {
  ItemPopularity pop;
  PopularityPartition part;
};
PartitionFile read_partition_csv(const std::string& path,
                                 const RatingDataset& train);

// usergroups.csv: user_id,affinity,group
void write_usergroups_csv(const std::string& path, const RatingDataset& train,
                          const UserGroupAssignment& groups);

// candidates.csv: user_id,item_id,rank,score
void write_candidates_csv(const std::string& path, const RatingDataset& train,
                          const std::vector<ScoredCandidates>& cands);
std::vector<ScoredCandidates> read_candidates_csv(const std::string& path,
                                                  const RatingDataset& train);

// lists.csv: user_id,item_id,rank,method,lambda ("na" for base)
struct ListsRow {
  std::string method;
  double lambda;  // NaN for base
  std::vector<RecommendationList> lists;
};
void append_lists_csv(const std::string& path, const RatingDataset& train,
                      const ListsRow& rows, bool write_header);
std::vector<ListsRow> read_lists_csv(const std::string& path,
                                     const RatingDataset& train);

// report.csv: one MetricReport row per (method,lambda)
void write_report_csv(const std::string& path,
                      const std::vector<MetricReport>& rows);
std::vector<MetricReport> read_report_csv(const std::string& path);
std::string report_header();
std::string report_row(const MetricReport& row);

// peruser.csv: method,lambda,user_id,group,jsd,precision
// histogram.csv: method,lambda,rank,count
// composition.csv: method,lambda,scope,group,h,m,t

// model checkpoint (text, exact doubles)
void save_model(const std::string& path, const FactorModel& model);
FactorModel load_model(const std::string& path);

std::string lambda_label(double lambda);  // "na" for NaN

}  // namespace popcal
