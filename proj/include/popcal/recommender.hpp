#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "popcal/dataset.hpp"
#include "popcal/popularity.hpp"

namespace popcal {

struct MfConfig {
  enum class Objective {
    kPairwiseRank,  // ranking ALS: pairwise squared loss, unrated anchored at 0
    kPointwise      // regularized ALS on observed ratings (optional item bias)
  };
  Objective objective = Objective::kPairwiseRank;
  int factors = 50;
  double reg = 0.01;
  int sweeps = 20;
  std::uint64_t seed = 13;
  bool item_bias = false;       // pointwise only
  bool support_weights = false; // pairwise only: weight comparison items by phi
};

struct FactorModel {
  Eigen::MatrixXd user_factors;  // |U| x d
  Eigen::MatrixXd item_factors;  // |I| x d
  Eigen::VectorXd item_bias;     // size 0 when unused
  double global_mean = 0.0;
  MfConfig config;
  std::vector<double> objective_trace;  // regularized objective per sweep

  double predict(std::uint32_t user, std::uint32_t item) const {
    double s = user_factors.row(user).dot(item_factors.row(item));
    if (item_bias.size() > 0) s += global_mean + item_bias[item];
    return s;
  }
};

/// Alternating least squares; the default pairwise objective compares each
/// rated item against the whole catalog. The trace must never increase.
FactorModel fit_ranking_mf(const RatingDataset& train, const MfConfig& config);

/// Exact (regularized) objective of `model` on `train`; used to audit the
/// per-sweep trace.
double mf_objective(const FactorModel& model, const RatingDataset& train);

struct ItemKnnModel {
  int k = 50;
  // per item: (neighbor, cosine similarity), sorted by (sim desc, idx asc)
  std::vector<std::vector<std::pair<std::uint32_t, float>>> neighbors;
};

ItemKnnModel fit_item_knn(const RatingDataset& train, int k);

/// Uniform scoring interface for candidate generation.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::size_t num_users() const = 0;
  virtual std::size_t num_items() const = 0;
  // Fills out[i] with the predicted score of item i for `user`.
  virtual void score_user(std::uint32_t user, std::span<double> out) const = 0;
};

class FactorScorer : public Scorer {
 public:
  explicit FactorScorer(const FactorModel& model) : model_(&model) {}
  std::size_t num_users() const override {
    return static_cast<std::size_t>(model_->user_factors.rows());
  }
  std::size_t num_items() const override {
    return static_cast<std::size_t>(model_->item_factors.rows());
  }
  void score_user(std::uint32_t user, std::span<double> out) const override;

 private:
  const FactorModel* model_;
};

class ItemKnnScorer : public Scorer {
 public:
  ItemKnnScorer(const ItemKnnModel& model, const RatingDataset& train)
      : model_(&model), train_(&train) {}
  std::size_t num_users() const override { return train_->num_users(); }
  std::size_t num_items() const override { return train_->num_items(); }
  void score_user(std::uint32_t user, std::span<double> out) const override;

 private:
  const ItemKnnModel* model_;
  const RatingDataset* train_;
};

/// score(i) = phi(i) for every user.
class MostPopularScorer : public Scorer {
 public:
  MostPopularScorer(const ItemPopularity& pop, std::size_t num_users)
      : pop_(&pop), num_users_(num_users) {}
  std::size_t num_users() const override { return num_users_; }
  std::size_t num_items() const override { return pop_->phi.size(); }
  void score_user(std::uint32_t user, std::span<double> out) const override;

 private:
  const ItemPopularity* pop_;
  std::size_t num_users_;
};

struct ScoredCandidates {
  std::uint32_t user = 0;
  // (item, score), sorted by (score desc, item asc); never intersects the
  // user's training profile
  std::vector<std::pair<std::uint32_t, double>> items;
  bool truncated = false;  // fewer than m unseen items existed
};

ScoredCandidates top_m_candidates(const Scorer& scorer, std::uint32_t user,
                                  std::size_t m,
                                  std::span<const Interaction> profile);

/// Candidates for every training user, in user order.
std::vector<ScoredCandidates> generate_candidates(const Scorer& scorer,
                                                  const RatingDataset& train,
                                                  std::size_t m);

}  // namespace popcal
