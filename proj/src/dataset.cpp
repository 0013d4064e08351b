#include "popcal/dataset.hpp"

#include <algorithm>
#include <cmath>

namespace popcal {

RatingDataset::RatingDataset(std::vector<std::string> user_ids,
                             std::vector<std::string> item_ids,
                             std::vector<Interaction> interactions,
                             RatingScale scale)
    : user_ids_(std::move(user_ids)),
      item_ids_(std::move(item_ids)),
      interactions_(std::move(interactions)),
      scale_(scale) {
  if (scale_.max <= scale_.min)
    throw UsageError("rating scale max must exceed min");
  for (std::uint32_t i = 0; i < user_ids_.size(); ++i)
    user_lookup_.emplace(user_ids_[i], i);
  for (std::uint32_t i = 0; i < item_ids_.size(); ++i)
    item_lookup_.emplace(item_ids_[i], i);
  if (user_lookup_.size() != user_ids_.size() ||
      item_lookup_.size() != item_ids_.size())
    throw DataError("duplicate external ids in index tables");

  std::sort(interactions_.begin(), interactions_.end(),
            [](const Interaction& a, const Interaction& b) {
              if (a.user != b.user) return a.user < b.user;
              return a.item < b.item;
            });
  for (std::size_t i = 0; i + 1 < interactions_.size(); ++i) {
    if (interactions_[i].user == interactions_[i + 1].user &&
        interactions_[i].item == interactions_[i + 1].item)
      throw DataError("duplicate (user,item) interaction after dedup");
  }
  for (const Interaction& it : interactions_) {
    if (it.user >= user_ids_.size() || it.item >= item_ids_.size())
      throw DataError("interaction index out of range");
    if (!(it.rating >= scale_.min && it.rating <= scale_.max) ||
        !std::isfinite(it.rating))
      throw DataError("rating outside declared scale bounds");
  }

  user_begin_.assign(user_ids_.size() + 1, 0);
  for (const Interaction& it : interactions_) user_begin_[it.user + 1]++;
  for (std::size_t u = 0; u < user_ids_.size(); ++u)
    user_begin_[u + 1] += user_begin_[u];
}

std::optional<std::uint32_t> RatingDataset::user_index(
    const std::string& id) const {
  auto it = user_lookup_.find(id);
  if (it == user_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::uint32_t> RatingDataset::item_index(
    const std::string& id) const {
  auto it = item_lookup_.find(id);
  if (it == item_lookup_.end()) return std::nullopt;
  return it->second;
}

std::uint32_t DatasetBuilder::intern_user(const std::string& id) {
  auto it = user_lookup_.find(id);
  if (it != user_lookup_.end()) return it->second;
  std::uint32_t idx = static_cast<std::uint32_t>(user_ids_.size());
  user_ids_.push_back(id);
  user_lookup_.emplace(id, idx);
  return idx;
}

std::uint32_t DatasetBuilder::intern_item(const std::string& id) {
  auto it = item_lookup_.find(id);
  if (it != item_lookup_.end()) return it->second;
  std::uint32_t idx = static_cast<std::uint32_t>(item_ids_.size());
  item_ids_.push_back(id);
  item_lookup_.emplace(id, idx);
  return idx;
}

void DatasetBuilder::add(std::uint32_t user, std::uint32_t item, double rating,
                         std::int64_t timestamp) {
  rows_.push_back({{user, item, rating, timestamp}, rows_.size()});
}

RatingDataset DatasetBuilder::build_last_wins() {
  if (rows_.empty()) throw DataError("no interactions");
  // Keep, per (user,item), the row with the greatest (timestamp, order).
  std::sort(rows_.begin(), rows_.end(), [](const Row& a, const Row& b) {
    if (a.inter.user != b.inter.user) return a.inter.user < b.inter.user;
    if (a.inter.item != b.inter.item) return a.inter.item < b.inter.item;
    if (a.inter.timestamp != b.inter.timestamp)
      return a.inter.timestamp < b.inter.timestamp;
    return a.order < b.order;
  });
  std::vector<Interaction> kept;
  kept.reserve(rows_.size());
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    bool last_of_pair =
        i + 1 == rows_.size() ||
        rows_[i].inter.user != rows_[i + 1].inter.user ||
        rows_[i].inter.item != rows_[i + 1].inter.item;
    if (last_of_pair) kept.push_back(rows_[i].inter);
  }
  return RatingDataset(std::move(user_ids_), std::move(item_ids_),
                       std::move(kept), scale_);
}

}  // namespace popcal
