#include "popcal/recommender.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "popcal/common.hpp"

namespace popcal {

namespace {

struct Csr {
  std::vector<std::size_t> begin;  // size rows+1
  std::vector<std::uint32_t> idx;
  std::vector<double> val;
};

Csr by_user(const RatingDataset& ds) {
  Csr csr;
  csr.begin.assign(ds.num_users() + 1, 0);
  csr.idx.resize(ds.num_interactions());
  csr.val.resize(ds.num_interactions());
  std::size_t row = 0;
  for (std::uint32_t u = 0; u < ds.num_users(); ++u) {
    csr.begin[u] = row;
    for (const Interaction& it : ds.user_profile(u)) {
      csr.idx[row] = it.item;
      csr.val[row] = it.rating;
      row++;
    }
  }
  csr.begin[ds.num_users()] = row;
  return csr;
}

Csr by_item(const RatingDataset& ds) {
  Csr csr;
  csr.begin.assign(ds.num_items() + 1, 0);
  csr.idx.resize(ds.num_interactions());
  csr.val.resize(ds.num_interactions());
  for (const Interaction& it : ds.interactions()) csr.begin[it.item + 1]++;
  for (std::size_t i = 0; i < ds.num_items(); ++i)
    csr.begin[i + 1] += csr.begin[i];
  std::vector<std::size_t> cursor(csr.begin.begin(), csr.begin.end() - 1);
  for (const Interaction& it : ds.interactions()) {
    std::size_t at = cursor[it.item]++;
    csr.idx[at] = it.user;
    csr.val[at] = it.rating;
  }
  return csr;
}

void check_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite())
    throw NumericError(std::string("non-finite factors during training: ") +
                       what);
}

void validate(const MfConfig& c) {
  if (c.factors < 1) throw UsageError("factor dimension must be >= 1");
  if (c.sweeps < 1) throw UsageError("sweep count must be >= 1");
  if (c.reg < 0.0) throw UsageError("regularization must be >= 0");
}

Eigen::MatrixXd random_init(std::size_t rows, int d, Rng rng) {
  Eigen::MatrixXd m(rows, d);
  const double sd = 0.1 / std::sqrt(static_cast<double>(d));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = sd * rng.normal();
  return m;
}

// ---- pairwise objective: for each rated item i of u and every catalog
// item j (weight s_j, unrated anchored at rating 0):
//   sum s_j * ((p.q_i - p.q_j) - (r_ui - r_uj))^2    (+ L2 regularization)
double pairwise_objective(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q,
                          const Csr& users, const Eigen::VectorXd& s,
                          double reg) {
  const double S = s.sum();
  const Eigen::VectorXd qbar = Q.transpose() * s;
  const Eigen::MatrixXd A =
      Q.transpose() * s.asDiagonal() * Q;  // d x d
  KahanSum f;
  for (std::size_t u = 0; u + 1 < users.begin.size(); ++u) {
    const auto b = users.begin[u], e = users.begin[u + 1];
    const double n_u = static_cast<double>(e - b);
    if (e == b) continue;
    Eigen::VectorXd p = P.row(static_cast<Eigen::Index>(u));
    double a1 = 0, a2 = 0, rbar = 0, sr2 = 0;
    Eigen::VectorXd bbar = Eigen::VectorXd::Zero(P.cols());
    for (std::size_t at = b; at < e; ++at) {
      const std::uint32_t i = users.idx[at];
      const double r = users.val[at];
      const double a = p.dot(Q.row(i)) - r;
      a1 += a;
      a2 += a * a;
      rbar += s[i] * r;
      sr2 += s[i] * r * r;
      bbar += s[i] * r * Q.row(i).transpose();
    }
    const double sb1 = p.dot(qbar) - rbar;
    const double sb2 = p.dot(A * p) - 2.0 * p.dot(bbar) + sr2;
    f.add(S * a2 - 2.0 * a1 * sb1 + n_u * sb2);
  }
  f.add(reg * (P.squaredNorm() + Q.squaredNorm()));
  return f.value();
}

void pairwise_sweep(Eigen::MatrixXd& P, Eigen::MatrixXd& Q, const Csr& users,
                    const Csr& items, const Eigen::VectorXd& s, double reg) {
  const Eigen::Index d = P.cols();
  const std::size_t num_users = users.begin.size() - 1;
  const std::size_t num_items = items.begin.size() - 1;
  const double S = s.sum();

  // per-user constants
  std::vector<double> R(num_users, 0), rbar(num_users, 0);
  for (std::size_t u = 0; u < num_users; ++u)
    for (std::size_t at = users.begin[u]; at < users.begin[u + 1]; ++at) {
      R[u] += users.val[at];
      rbar[u] += s[users.idx[at]] * users.val[at];
    }

  // -- user halfstep (items fixed): independent solves
  {
    const Eigen::VectorXd qbar = Q.transpose() * s;
    const Eigen::MatrixXd A = Q.transpose() * s.asDiagonal() * Q;
    parallel_for(num_users, [&](std::size_t lo, std::size_t hi) {
      Eigen::MatrixXd M(d, d);
      Eigen::VectorXd y(d), g1(d), g1r(d), bbar(d);
      Eigen::MatrixXd G1(d, d);
      for (std::size_t u = lo; u < hi; ++u) {
        const auto b = users.begin[u], e = users.begin[u + 1];
        if (e == b) continue;
        const double n_u = static_cast<double>(e - b);
        G1.setZero();
        g1.setZero();
        g1r.setZero();
        bbar.setZero();
        for (std::size_t at = b; at < e; ++at) {
          const auto i = users.idx[at];
          const double r = users.val[at];
          Eigen::VectorXd qi = Q.row(i);
          G1.noalias() += qi * qi.transpose();
          g1 += qi;
          g1r += r * qi;
          bbar += s[i] * r * qi;
        }
        M.noalias() = S * G1 + n_u * A;
        M.noalias() -= g1 * qbar.transpose();
        M.noalias() -= qbar * g1.transpose();
        M.diagonal().array() += reg;
        y = S * g1r - R[u] * qbar - rbar[u] * g1 + n_u * bbar;
        P.row(u) = M.ldlt().solve(y);
      }
    });
  }

  // -- item halfstep: sequential, keeps qbar / t_u / v exact while items move
  {
    Eigen::MatrixXd Abar = Eigen::MatrixXd::Zero(d, d);  // sum n_u p p^T
    Eigen::VectorXd w = Eigen::VectorXd::Zero(d);        // sum p R_u
    std::vector<double> t(num_users, 0);                 // p . sum q_i
    for (std::size_t u = 0; u < num_users; ++u) {
      const auto b = users.begin[u], e = users.begin[u + 1];
      const double n_u = static_cast<double>(e - b);
      Eigen::VectorXd p = P.row(u);
      Abar.noalias() += n_u * p * p.transpose();
      w += R[u] * p;
      Eigen::VectorXd sumq = Eigen::VectorXd::Zero(d);
      for (std::size_t at = b; at < e; ++at) sumq += Q.row(users.idx[at]);
      t[u] = p.dot(sumq);
    }
    Eigen::VectorXd v = Eigen::VectorXd::Zero(d);  // sum p t_u
    for (std::size_t u = 0; u < num_users; ++u)
      v += t[u] * P.row(u).transpose();
    Eigen::VectorXd qbar = Q.transpose() * s;

    Eigen::MatrixXd Bk(d, d), M(d, d);
    Eigen::VectorXd z2(d), z3(d), z4(d), y(d), qnew(d), delta(d);
    for (std::size_t k = 0; k < num_items; ++k) {
      const auto b = items.begin[k], e = items.begin[k + 1];
      if (e == b) continue;
      const double sk = s[k];
      Bk.setZero();
      z2.setZero();
      z3.setZero();
      z4.setZero();
      for (std::size_t at = b; at < e; ++at) {
        const auto u = items.idx[at];
        const double r = items.val[at];
        const double n_u =
            static_cast<double>(users.begin[u + 1] - users.begin[u]);
        Eigen::VectorXd p = P.row(u);
        Bk.noalias() += p * p.transpose();
        z2 += r * p;
        z3 += rbar[u] * p;
        z4 += n_u * r * p;
      }
      Eigen::VectorXd qcur = Q.row(k);
      // exact block minimizer; the -2 s_k B_k terms remove the degenerate
      // i=k / j=k self-comparisons
      M.noalias() = S * Bk + sk * Abar - 2.0 * sk * Bk;
      M.diagonal().array() += reg;
      y = Bk * qbar + S * z2 - z3 + sk * (v - w + z4) -
          2.0 * sk * (Bk * qcur);
      qnew = M.ldlt().solve(y);
      delta = qnew - qcur;
      if (delta.squaredNorm() > 0) {
        qbar += sk * delta;
        v.noalias() += Bk * delta;
        for (std::size_t at = b; at < e; ++at) {
          const auto u = items.idx[at];
          t[u] += P.row(u).dot(delta);
        }
        Q.row(k) = qnew;
      }
    }
  }
}

// ---- pointwise objective: squared error on observed ratings
double pointwise_objective(const FactorModel& model, const Csr& users) {
  KahanSum f;
  for (std::size_t u = 0; u + 1 < users.begin.size(); ++u)
    for (std::size_t at = users.begin[u]; at < users.begin[u + 1]; ++at) {
      const double err =
          model.predict(static_cast<std::uint32_t>(u), users.idx[at]) -
          users.val[at];
      f.add(err * err);
    }
  f.add(model.config.reg *
        (model.user_factors.squaredNorm() + model.item_factors.squaredNorm() +
         model.item_bias.squaredNorm()));
  return f.value();
}

void pointwise_sweep(FactorModel& model, const Csr& users, const Csr& items) {
  const Eigen::Index d = model.user_factors.cols();
  const double reg = model.config.reg;
  const bool bias = model.config.item_bias;
  const double mu = model.global_mean;
  Eigen::MatrixXd& P = model.user_factors;
  Eigen::MatrixXd& Q = model.item_factors;

  const std::size_t num_users = users.begin.size() - 1;
  parallel_for(num_users, [&](std::size_t lo, std::size_t hi) {
    Eigen::MatrixXd M(d, d);
    Eigen::VectorXd y(d);
    for (std::size_t u = lo; u < hi; ++u) {
      const auto b = users.begin[u], e = users.begin[u + 1];
      if (e == b) continue;
      M.setZero();
      y.setZero();
      for (std::size_t at = b; at < e; ++at) {
        const auto i = users.idx[at];
        Eigen::VectorXd qi = Q.row(i);
        M.noalias() += qi * qi.transpose();
        double target = users.val[at] - mu - (bias ? model.item_bias[i] : 0.0);
        y += target * qi;
      }
      M.diagonal().array() += reg;
      P.row(u) = M.ldlt().solve(y);
    }
  });

  const std::size_t num_items = items.begin.size() - 1;
  const Eigen::Index dd = bias ? d + 1 : d;
  parallel_for(num_items, [&](std::size_t lo, std::size_t hi) {
    Eigen::MatrixXd M(dd, dd);
    Eigen::VectorXd y(dd), x(dd);
    for (std::size_t i = lo; i < hi; ++i) {
      const auto b = items.begin[i], e = items.begin[i + 1];
      if (e == b) continue;
      M.setZero();
      y.setZero();
      for (std::size_t at = b; at < e; ++at) {
        const auto u = items.idx[at];
        x.head(d) = P.row(u);
        if (bias) x[d] = 1.0;
        M.noalias() += x * x.transpose();
        y += (items.val[at] - mu) * x;
      }
      M.diagonal().array() += reg;
      Eigen::VectorXd sol = M.ldlt().solve(y);
      Q.row(i) = sol.head(d);
      if (bias) model.item_bias[i] = sol[d];
    }
  });
}

}  // namespace

double mf_objective(const FactorModel& model, const RatingDataset& train) {
  Csr users = by_user(train);
  if (model.config.objective == MfConfig::Objective::kPointwise)
    return pointwise_objective(model, users);
  Eigen::VectorXd s = Eigen::VectorXd::Ones(train.num_items());
  if (model.config.support_weights) {
    ItemPopularity pop = compute_popularity(train);
    for (std::size_t i = 0; i < pop.phi.size(); ++i)
      s[i] = static_cast<double>(pop.phi[i]);
  }
  return pairwise_objective(model.user_factors, model.item_factors, users, s,
                            model.config.reg);
}

FactorModel fit_ranking_mf(const RatingDataset& train,
                           const MfConfig& config) {
  validate(config);
  if (train.num_interactions() == 0)
    throw DataError("cannot train on empty dataset");

  Csr users = by_user(train);
  Csr items = by_item(train);

  FactorModel model;
  model.config = config;
  Rng rng(splitmix64(config.seed));
  model.user_factors = random_init(train.num_users(), config.factors,
                                   rng.fork(1));
  model.item_factors = random_init(train.num_items(), config.factors,
                                   rng.fork(2));

  if (config.objective == MfConfig::Objective::kPointwise) {
    if (config.item_bias) {
      model.item_bias = Eigen::VectorXd::Zero(train.num_items());
      double sum = 0;
      for (const Interaction& it : train.interactions()) sum += it.rating;
      model.global_mean = sum / static_cast<double>(train.num_interactions());
    }
    model.objective_trace.push_back(pointwise_objective(model, users));
    for (int sweep = 0; sweep < config.sweeps; ++sweep) {
      pointwise_sweep(model, users, items);
      check_finite(model.user_factors, "user factors");
      check_finite(model.item_factors, "item factors");
      model.objective_trace.push_back(pointwise_objective(model, users));
    }
    return model;
  }

  Eigen::VectorXd s = Eigen::VectorXd::Ones(train.num_items());
  if (config.support_weights) {
    for (std::size_t i = 0; i < train.num_items(); ++i)
      s[i] = static_cast<double>(items.begin[i + 1] - items.begin[i]);
  }
  model.objective_trace.push_back(pairwise_objective(
      model.user_factors, model.item_factors, users, s, config.reg));
  for (int sweep = 0; sweep < config.sweeps; ++sweep) {
    pairwise_sweep(model.user_factors, model.item_factors, users, items, s,
                   config.reg);
    check_finite(model.user_factors, "user factors");
    check_finite(model.item_factors, "item factors");
    model.objective_trace.push_back(pairwise_objective(
        model.user_factors, model.item_factors, users, s, config.reg));
  }
  return model;
}

ItemKnnModel fit_item_knn(const RatingDataset& train, int k) {
  if (k < 1) throw UsageError("neighborhood size must be >= 1");
  const std::size_t num_items = train.num_items();
  ItemKnnModel model;
  model.k = k;
  model.neighbors.resize(num_items);

  std::vector<double> norm(num_items, 0.0);
  for (const Interaction& it : train.interactions())
    norm[it.item] += it.rating * it.rating;
  for (double& v : norm) v = std::sqrt(v);

  Csr items = by_item(train);
  std::vector<double> acc(num_items, 0.0);
  std::vector<std::uint32_t> touched;
  touched.reserve(num_items);

  for (std::uint32_t i = 0; i < num_items; ++i) {
    if (norm[i] == 0.0) continue;  // defensive: empty neighbor list
    touched.clear();
    for (std::size_t at = items.begin[i]; at < items.begin[i + 1]; ++at) {
      const std::uint32_t u = items.idx[at];
      const double r_ui = items.val[at];
      for (const Interaction& other : train.user_profile(u)) {
        if (other.item == i) continue;
        if (acc[other.item] == 0.0) touched.push_back(other.item);
        acc[other.item] += r_ui * other.rating;
      }
    }
    auto& out = model.neighbors[i];
    out.reserve(touched.size());
    for (std::uint32_t j : touched) {
      if (norm[j] > 0.0)
        out.push_back({j, static_cast<float>(acc[j] / (norm[i] * norm[j]))});
      acc[j] = 0.0;
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) {
                if (a.second != b.second) return a.second > b.second;
                return a.first < b.first;
              });
    if (out.size() > static_cast<std::size_t>(k)) out.resize(k);
    out.shrink_to_fit();
  }
  return model;
}

void FactorScorer::score_user(std::uint32_t user,
                              std::span<double> out) const {
  if (user >= num_users()) throw DataError("user unknown to model");
  Eigen::Map<Eigen::VectorXd> mapped(out.data(),
                                     static_cast<Eigen::Index>(out.size()));
  mapped = model_->item_factors * model_->user_factors.row(user).transpose();
  if (model_->item_bias.size() > 0)
    mapped += model_->item_bias.array().matrix() +
              Eigen::VectorXd::Constant(mapped.size(), model_->global_mean);
}

void ItemKnnScorer::score_user(std::uint32_t user,
                               std::span<double> out) const {
  if (user >= num_users()) throw DataError("user unknown to model");
  std::fill(out.begin(), out.end(), 0.0);
  for (const Interaction& it : train_->user_profile(user))
    for (const auto& [j, sim] : model_->neighbors[it.item])
      out[j] += static_cast<double>(sim) * it.rating;
}

void MostPopularScorer::score_user(std::uint32_t user,
                                   std::span<double> out) const {
  if (user >= num_users()) throw DataError("user unknown to model");
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<double>(pop_->phi[i]);
}

ScoredCandidates top_m_candidates(const Scorer& scorer, std::uint32_t user,
                                  std::size_t m,
                                  std::span<const Interaction> profile) {
  if (m < 1) throw UsageError("candidate list size must be >= 1");
  if (user >= scorer.num_users()) throw DataError("user unknown to model");
  const std::size_t num_items = scorer.num_items();

  std::vector<double> scores(num_items);
  scorer.score_user(user, scores);

  std::vector<char> seen(num_items, 0);
  for (const Interaction& it : profile) seen[it.item] = 1;

  std::vector<std::uint32_t> avail;
  avail.reserve(num_items);
  for (std::uint32_t i = 0; i < num_items; ++i)
    if (!seen[i]) avail.push_back(i);

  auto better = [&scores](std::uint32_t a, std::uint32_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  ScoredCandidates out;
  out.user = user;
  if (avail.size() > m) {
    std::nth_element(avail.begin(), avail.begin() + m, avail.end(), better);
    avail.resize(m);
  } else {
    out.truncated = avail.size() < m;
  }
  std::sort(avail.begin(), avail.end(), better);
  out.items.reserve(avail.size());
  for (std::uint32_t i : avail) out.items.push_back({i, scores[i]});
  return out;
}

std::vector<ScoredCandidates> generate_candidates(const Scorer& scorer,
                                                  const RatingDataset& train,
                                                  std::size_t m) {
  std::vector<ScoredCandidates> out(train.num_users());
  parallel_for(train.num_users(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t u = lo; u < hi; ++u)
      out[u] = top_m_candidates(scorer, static_cast<std::uint32_t>(u), m,
                                train.user_profile(
                                    static_cast<std::uint32_t>(u)));
  });
  return out;
}

}  // namespace popcal
