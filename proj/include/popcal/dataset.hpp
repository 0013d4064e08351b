#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "popcal/common.hpp"

namespace popcal {

/// A single (user, item, rating) event. Indices are dense, 0-based.
struct Interaction {
  std::uint32_t user;
  std::uint32_t item;
  double rating;
  std::int64_t timestamp;  // kNoTimestamp when the source had none

  static constexpr std::int64_t kNoTimestamp = -1;
};

struct RatingScale {
  double min = 1.0;
  double max = 5.0;
};

/// Deduplicated interactions with dense user/item index spaces.
/// Interactions are stored sorted by (user, item); per-user slices are
/// available through a CSR offset table. Immutable after construction.
class RatingDataset {
 public:
  RatingDataset() = default;

  // Takes external-id tables plus interactions already expressed in dense
  // indices. Sorts, checks invariants, builds the CSR index.
  RatingDataset(std::vector<std::string> user_ids,
                std::vector<std::string> item_ids,
                std::vector<Interaction> interactions, RatingScale scale);

  std::size_t num_users() const { return user_ids_.size(); }
  std::size_t num_items() const { return item_ids_.size(); }
  std::size_t num_interactions() const { return interactions_.size(); }

  const std::vector<Interaction>& interactions() const {
    return interactions_;
  }
  std::span<const Interaction> user_profile(std::uint32_t user) const {
    return {interactions_.data() + user_begin_[user],
            user_begin_[user + 1] - user_begin_[user]};
  }

  const std::string& user_id(std::uint32_t idx) const {
    return user_ids_[idx];
  }
  const std::string& item_id(std::uint32_t idx) const {
    return item_ids_[idx];
  }
  const std::vector<std::string>& user_ids() const { return user_ids_; }
  const std::vector<std::string>& item_ids() const { return item_ids_; }

  std::optional<std::uint32_t> user_index(const std::string& id) const;
  std::optional<std::uint32_t> item_index(const std::string& id) const;

  RatingScale scale() const { return scale_; }

 private:
  std::vector<std::string> user_ids_;
  std::vector<std::string> item_ids_;
  std::unordered_map<std::string, std::uint32_t> user_lookup_;
  std::unordered_map<std::string, std::uint32_t> item_lookup_;
  std::vector<Interaction> interactions_;
  std::vector<std::size_t> user_begin_;  // size num_users()+1
  RatingScale scale_;
};

/// Train/test halves of one dataset. Both sides share the training
/// index space (id tables are identical); items seen only in test are
/// dropped since they can never be recommended from the training catalog.
struct SplitDataset {
  RatingDataset train;
  RatingDataset test;
  std::uint64_t seed = 0;
  double train_ratio = 0.8;
  std::size_t dropped_test_rows = 0;  // rows whose item vanished from train
};

/// Incremental builder: interns external ids in first-appearance order.
class DatasetBuilder {
 public:
  explicit DatasetBuilder(RatingScale scale) : scale_(scale) {}

  std::uint32_t intern_user(const std::string& id);
  std::uint32_t intern_item(const std::string& id);
  void add(std::uint32_t user, std::uint32_t item, double rating,
           std::int64_t timestamp);

  std::size_t size() const { return rows_.size(); }

  // Resolves duplicate (user, item) rows keeping the occurrence with the
  // greatest (timestamp, insertion order) key, then finalizes.
  RatingDataset build_last_wins();

 private:
  struct Row {
    Interaction inter;
    std::size_t order;
  };
  RatingScale scale_;
  std::vector<std::string> user_ids_, item_ids_;
  std::unordered_map<std::string, std::uint32_t> user_lookup_, item_lookup_;
  std::vector<Row> rows_;
};

}  // namespace popcal
