#include "popcal/csvio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

namespace popcal {

namespace {

std::ofstream open_out(const std::string& path, bool append = false) {
  std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
  if (!out) throw DataError("cannot write file: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  return in;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("bad numeric field '" + s + "' in " + what);
  }
}

std::int64_t parse_int(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("bad integer field '" + s + "' in " + what);
  }
}

ItemGroup parse_group(const std::string& s) {
  if (s == "H") return ItemGroup::Head;
  if (s == "M") return ItemGroup::Mid;
  if (s == "T") return ItemGroup::Tail;
  throw DataError("bad item group: " + s);
}

}  // namespace

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          i++;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c == '\r') {
      // ignore
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string format_exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string lambda_label(double lambda) {
  if (std::isnan(lambda)) return "na";
  return format_double(lambda);
}

void write_dataset_csv(const std::string& path, const RatingDataset& ds) {
  std::ofstream out = open_out(path);
  out << "user_id,item_id,rating,timestamp\n";
  for (const Interaction& it : ds.interactions()) {
    out << csv_escape(ds.user_id(it.user)) << ','
        << csv_escape(ds.item_id(it.item)) << ',' << format_double(it.rating)
        << ',';
    if (it.timestamp != Interaction::kNoTimestamp) out << it.timestamp;
    out << '\n';
  }
}

RatingDataset read_dataset_csv(const std::string& path, RatingScale scale) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line))
    throw DataError("no interactions in " + path);
  DatasetBuilder builder(scale);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = csv_split(line);
    if (f.size() != 4) throw DataError("bad dataset row in " + path);
    std::uint32_t u = builder.intern_user(f[0]);
    std::uint32_t i = builder.intern_item(f[1]);
    std::int64_t ts = f[3].empty() ? Interaction::kNoTimestamp
                                   : parse_int(f[3], path);
    builder.add(u, i, parse_double(f[2], path), ts);
  }
  return builder.build_last_wins();
}

void write_split_manifest(const std::string& path, const SplitDataset& split) {
  std::ofstream out = open_out(path);
  out << "user_id,item_id,fold\n";
  for (const Interaction& it : split.train.interactions())
    out << csv_escape(split.train.user_id(it.user)) << ','
        << csv_escape(split.train.item_id(it.item)) << ",train\n";
  for (const Interaction& it : split.test.interactions())
    out << csv_escape(split.test.user_id(it.user)) << ','
        << csv_escape(split.test.item_id(it.item)) << ",test\n";
}

void write_partition_csv(const std::string& path, const RatingDataset& train,
                         const ItemPopularity& pop,
                         const PopularityPartition& part) {
  std::ofstream out = open_out(path);
  out << "item_id,phi,group\n";
  for (std::uint32_t i = 0; i < train.num_items(); ++i)
    out << csv_escape(train.item_id(i)) << ',' << pop.phi[i] << ','
        << to_string(part.group_of[i]) << '\n';
}

PartitionFile read_partition_csv(const std::string& path,
                                 const RatingDataset& train) {
  std::ifstream in = open_in(path);
  std::string line;
  std::getline(in, line);
  PartitionFile out;
  out.pop.phi.assign(train.num_items(), 0);
  out.part.group_of.assign(train.num_items(), ItemGroup::Mid);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = csv_split(line);
    if (f.size() != 3) throw DataError("bad partition row in " + path);
    auto idx = train.item_index(f[0]);
    if (!idx) throw DataError("partition item not in training set: " + f[0]);
    out.pop.phi[*idx] = parse_int(f[1], path);
    out.part.group_of[*idx] = parse_group(f[2]);
    rows++;
  }
  if (rows != train.num_items())
    throw DataError("partition file does not cover the training catalog");
  out.pop.total = 0;
  for (std::int64_t v : out.pop.phi) out.pop.total += v;

  auto& part = out.part;
  part.by_rank.resize(train.num_items());
  for (std::uint32_t i = 0; i < train.num_items(); ++i) part.by_rank[i] = i;
  std::sort(part.by_rank.begin(), part.by_rank.end(),
            [&out](std::uint32_t a, std::uint32_t b) {
              if (out.pop.phi[a] != out.pop.phi[b])
                return out.pop.phi[a] > out.pop.phi[b];
              return a < b;
            });
  std::int64_t mass_h = 0, mass_t = 0;
  for (std::uint32_t i = 0; i < train.num_items(); ++i) {
    if (part.group_of[i] == ItemGroup::Head) {
      part.head_size++;
      mass_h += out.pop.phi[i];
    } else if (part.group_of[i] == ItemGroup::Tail) {
      part.tail_size++;
      mass_t += out.pop.phi[i];
    }
  }
  part.share_h = static_cast<double>(mass_h) / static_cast<double>(out.pop.total);
  part.share_t = static_cast<double>(mass_t) / static_cast<double>(out.pop.total);
  part.share_m = 1.0 - part.share_h - part.share_t;
  return out;
}

void write_usergroups_csv(const std::string& path, const RatingDataset& train,
                          const UserGroupAssignment& groups) {
  std::ofstream out = open_out(path);
  out << "user_id,affinity,group\n";
  for (std::uint32_t u = 0; u < train.num_users(); ++u)
    out << csv_escape(train.user_id(u)) << ','
        << format_double(groups.affinity[u]) << ','
        << to_string(groups.group_of[u]) << '\n';
}

void write_candidates_csv(const std::string& path, const RatingDataset& train,
                          const std::vector<ScoredCandidates>& cands) {
  std::ofstream out = open_out(path);
  out << "user_id,item_id,rank,score\n";
  for (const ScoredCandidates& c : cands) {
    std::size_t rank = 1;
    for (const auto& [item, score] : c.items)
      out << csv_escape(train.user_id(c.user)) << ','
          << csv_escape(train.item_id(item)) << ',' << rank++ << ','
          << format_exact(score) << '\n';
  }
}

std::vector<ScoredCandidates> read_candidates_csv(const std::string& path,
                                                  const RatingDataset& train) {
  std::ifstream in = open_in(path);
  std::string line;
  std::getline(in, line);
  std::vector<ScoredCandidates> out(train.num_users());
  for (std::uint32_t u = 0; u < train.num_users(); ++u) out[u].user = u;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = csv_split(line);
    if (f.size() != 4) throw DataError("bad candidates row in " + path);
    auto u = train.user_index(f[0]);
    auto i = train.item_index(f[1]);
    if (!u || !i)
      throw DataError("candidate references unknown user/item: " + line);
    out[*u].items.push_back({*i, parse_double(f[3], path)});
  }
  return out;
}

void append_lists_csv(const std::string& path, const RatingDataset& train,
                      const ListsRow& row, bool write_header) {
  std::ofstream out = open_out(path, !write_header);
  if (write_header) out << "user_id,item_id,rank,method,lambda\n";
  const std::string label = lambda_label(row.lambda);
  for (const RecommendationList& list : row.lists) {
    std::size_t rank = 1;
    for (std::uint32_t item : list.items)
      out << csv_escape(train.user_id(list.user)) << ','
          << csv_escape(train.item_id(item)) << ',' << rank++ << ','
          << row.method << ',' << label << '\n';
  }
}

std::vector<ListsRow> read_lists_csv(const std::string& path,
                                     const RatingDataset& train) {
  std::ifstream in = open_in(path);
  std::string line;
  std::getline(in, line);
  // key: (method, lambda label), per user lists in first-appearance order
  std::vector<ListsRow> rows;
  std::map<std::pair<std::string, std::string>, std::size_t> row_at;
  std::vector<std::map<std::uint32_t, std::size_t>> list_at;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = csv_split(line);
    if (f.size() != 5) throw DataError("bad lists row in " + path);
    auto u = train.user_index(f[0]);
    auto i = train.item_index(f[1]);
    if (!u || !i) throw DataError("list references unknown user/item: " + line);
    auto key = std::make_pair(f[3], f[4]);
    auto it = row_at.find(key);
    if (it == row_at.end()) {
      it = row_at.emplace(key, rows.size()).first;
      rows.push_back(
          {f[3],
           f[4] == "na" ? std::numeric_limits<double>::quiet_NaN()
                        : parse_double(f[4], path),
           {}});
      list_at.emplace_back();
    }
    ListsRow& row = rows[it->second];
    auto& lists_idx = list_at[it->second];
    auto lit = lists_idx.find(*u);
    if (lit == lists_idx.end()) {
      lit = lists_idx.emplace(*u, row.lists.size()).first;
      row.lists.push_back({*u, {}, false});
    }
    row.lists[lit->second].items.push_back(*i);
  }
  return rows;
}

std::string report_header() {
  return "method,lambda,precision,agg_div,gini,arp,arp_raw,upd,upd_g1,upd_g2,"
         "upd_g3";
}

std::string report_row(const MetricReport& r) {
  std::string out = r.method;
  out += ',';
  out += lambda_label(r.lambda);
  for (double v : {r.precision, r.agg_div, r.gini, r.arp, r.arp_raw, r.upd,
                   r.upd_group[0], r.upd_group[1], r.upd_group[2]}) {
    out += ',';
    out += format_double(v);
  }
  return out;
}

void write_report_csv(const std::string& path,
                      const std::vector<MetricReport>& rows) {
  std::ofstream out = open_out(path);
  out << report_header() << '\n';
  for (const MetricReport& r : rows) out << report_row(r) << '\n';
}

std::vector<MetricReport> read_report_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  std::getline(in, line);
  std::vector<MetricReport> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = csv_split(line);
    if (f.size() != 11) throw DataError("bad report row in " + path);
    MetricReport r;
    r.method = f[0];
    r.lambda = f[1] == "na" ? std::numeric_limits<double>::quiet_NaN()
                            : parse_double(f[1], path);
    r.precision = parse_double(f[2], path);
    r.agg_div = parse_double(f[3], path);
    r.gini = parse_double(f[4], path);
    r.arp = parse_double(f[5], path);
    r.arp_raw = parse_double(f[6], path);
    r.upd = parse_double(f[7], path);
    for (int g = 0; g < 3; ++g) r.upd_group[g] = parse_double(f[8 + g], path);
    rows.push_back(r);
  }
  return rows;
}

void save_model(const std::string& path, const FactorModel& model) {
  std::ofstream out = open_out(path);
  out << "popcal-mf 1\n";
  out << "objective "
      << (model.config.objective == MfConfig::Objective::kPairwiseRank
              ? "rankals"
              : "als")
      << '\n';
  out << "factors " << model.config.factors << '\n';
  out << "users " << model.user_factors.rows() << '\n';
  out << "items " << model.item_factors.rows() << '\n';
  out << "seed " << model.config.seed << '\n';
  out << "item_bias " << (model.item_bias.size() > 0 ? 1 : 0) << '\n';
  out << "global_mean " << format_exact(model.global_mean) << '\n';
  auto dump = [&out](const Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        if (c) out << ' ';
        out << format_exact(m(r, c));
      }
      out << '\n';
    }
  };
  dump(model.user_factors);
  dump(model.item_factors);
  if (model.item_bias.size() > 0) {
    for (Eigen::Index i = 0; i < model.item_bias.size(); ++i) {
      if (i) out << ' ';
      out << format_exact(model.item_bias[i]);
    }
    out << '\n';
  }
}

FactorModel load_model(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string word;
  int version;
  in >> word >> version;
  if (word != "popcal-mf" || version != 1)
    throw DataError("not a model checkpoint: " + path);
  FactorModel model;
  std::string objective;
  long users = 0, items = 0;
  int has_bias = 0;
  in >> word >> objective;
  in >> word >> model.config.factors;
  in >> word >> users;
  in >> word >> items;
  in >> word >> model.config.seed;
  in >> word >> has_bias;
  in >> word >> model.global_mean;
  model.config.objective = objective == "rankals"
                               ? MfConfig::Objective::kPairwiseRank
                               : MfConfig::Objective::kPointwise;
  model.config.item_bias = has_bias != 0;
  if (!in || users <= 0 || items <= 0 || model.config.factors <= 0)
    throw DataError("corrupt model checkpoint: " + path);
  model.user_factors.resize(users, model.config.factors);
  model.item_factors.resize(items, model.config.factors);
  for (Eigen::Index r = 0; r < model.user_factors.rows(); ++r)
    for (Eigen::Index c = 0; c < model.user_factors.cols(); ++c)
      in >> model.user_factors(r, c);
  for (Eigen::Index r = 0; r < model.item_factors.rows(); ++r)
    for (Eigen::Index c = 0; c < model.item_factors.cols(); ++c)
      in >> model.item_factors(r, c);
  if (has_bias) {
    model.item_bias.resize(items);
    for (Eigen::Index i = 0; i < items; ++i) in >> model.item_bias[i];
  }
  if (!in) throw DataError("truncated model checkpoint: " + path);
  return model;
}

}  // namespace popcal
