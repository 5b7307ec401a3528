#include "calibench/regress.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <Eigen/Dense>

#include "calibench/errors.hpp"
#include "calibench/stats.hpp"

namespace calibench::regress {

std::string to_string(SeType t) {
  switch (t) {
    case SeType::Classical: return "classical";
    case SeType::HC0: return "hc0";
    case SeType::ClusterOneWay: return "cluster1";
    case SeType::ClusterTwoWay: return "cluster2";
  }
  return "classical";
}

namespace {

/// Sum of per-cluster score outer products: sum_g s_g s_g' with
/// s_g = sum_{i in g} x_i u_i.
Eigen::MatrixXd cluster_meat(const Eigen::MatrixXd& X, const Eigen::VectorXd& u,
                             const std::vector<std::int64_t>& ids, std::size_t* n_clusters) {
  const auto k = X.cols();
  std::map<std::int64_t, Eigen::VectorXd> scores;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    auto [it, fresh] = scores.try_emplace(ids[static_cast<std::size_t>(i)],
                                          Eigen::VectorXd::Zero(k));
    it->second += X.row(i).transpose() * u(i);
  }
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(k, k);
  for (const auto& [id, s] : scores) meat += s * s.transpose();
  if (n_clusters) *n_clusters = scores.size();
  return meat;
}

Eigen::MatrixXd hc0_meat(const Eigen::MatrixXd& X, const Eigen::VectorXd& u) {
  const auto k = X.cols();
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    meat += X.row(i).transpose() * X.row(i) * (u(i) * u(i));
  }
  return meat;
}

}  // namespace

FitResult ols(const std::vector<std::vector<double>>& X_rows, const std::vector<double>& y,
              const SeSpec& spec) {
  const std::size_t n = X_rows.size();
  if (n == 0) throw UsageError("ols: empty design matrix");
  if (y.size() != n) throw UsageError("ols: X and y row counts differ");
  const std::size_t k = X_rows[0].size();
  if (k == 0) throw UsageError("ols: design matrix has no columns");
  for (const auto& row : X_rows) {
    if (row.size() != k) throw UsageError("ols: ragged design matrix");
  }
  if (n < k) throw DataError("ols: fewer observations than parameters");

  const bool weighted = !spec.weights.empty();
  if (weighted) {
    if (spec.weights.size() != n) throw UsageError("ols: weight count differs from rows");
    if (spec.type != SeType::Classical) {
      throw UsageError("ols: frequency weights require classical standard errors");
    }
    for (double w : spec.weights) {
      if (!(w > 0.0)) throw UsageError("ols: weights must be positive");
    }
  }
  const bool clustered = spec.type == SeType::ClusterOneWay || spec.type == SeType::ClusterTwoWay;
  if (clustered && spec.cluster1.size() != n) {
    throw UsageError("ols: cluster1 ids must cover every observation");
  }
  if (spec.type == SeType::ClusterTwoWay && spec.cluster2.size() != n) {
    throw UsageError("ols: cluster2 ids must cover every observation");
  }

  Eigen::MatrixXd X(n, k);
  Eigen::VectorXd Y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = X_rows[i][j];
    Y(static_cast<Eigen::Index>(i)) = y[i];
  }

  // Solve the (optionally weight-scaled) least-squares problem by QR.
  Eigen::MatrixXd Xs = X;
  Eigen::VectorXd Ys = Y;
  double weight_total = static_cast<double>(n);
  if (weighted) {
    weight_total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = std::sqrt(spec.weights[i]);
      Xs.row(static_cast<Eigen::Index>(i)) *= s;
      Ys(static_cast<Eigen::Index>(i)) *= s;
      weight_total += spec.weights[i];
    }
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xs);
  if (static_cast<std::size_t>(qr.rank()) < k) {
    throw DataError("ols: design matrix is rank deficient");
  }
  Eigen::VectorXd beta = qr.solve(Ys);
  Eigen::VectorXd u = Y - X * beta;

  Eigen::MatrixXd xtx = Xs.transpose() * Xs;
  Eigen::MatrixXd bread = xtx.ldlt().solve(Eigen::MatrixXd::Identity(k, k));

  FitResult res;
  res.n = n;
  res.k = k;
  res.se_type = to_string(spec.type);
  res.coef.assign(beta.data(), beta.data() + k);

  // R^2 and residual sum of squares (weighted when weights are given).
  double ss_res = 0.0, ss_tot = 0.0, y_mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double w = weighted ? spec.weights[i] : 1.0;
    y_mean += w * y[i];
  }
  y_mean /= weight_total;
  for (std::size_t i = 0; i < n; ++i) {
    double w = weighted ? spec.weights[i] : 1.0;
    ss_res += w * u(static_cast<Eigen::Index>(i)) * u(static_cast<Eigen::Index>(i));
    ss_tot += w * (y[i] - y_mean) * (y[i] - y_mean);
  }
  res.residual_ss = ss_res;
  res.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;

  Eigen::MatrixXd V;
  double df = static_cast<double>(n - k);
  switch (spec.type) {
    case SeType::Classical: {
      double dof = weight_total - static_cast<double>(k);
      if (dof <= 0.0) throw DataError("ols: no residual degrees of freedom");
      V = bread * (ss_res / dof);
      df = dof;
      break;
    }
    case SeType::HC0: {
      V = bread * hc0_meat(X, u) * bread;
      break;
    }
    case SeType::ClusterOneWay: {
      std::size_t g1 = 0;
      V = bread * cluster_meat(X, u, spec.cluster1, &g1) * bread;
      res.clusters1 = g1;
      if (g1 < 2) res.notes.push_back("cluster1-single-cluster");
      df = static_cast<double>(g1 > 1 ? g1 - 1 : 1);
      break;
    }
    case SeType::ClusterTwoWay: {
      std::size_t g1 = 0, g2 = 0, g12 = 0;
      Eigen::MatrixXd m1 = cluster_meat(X, u, spec.cluster1, &g1);
      Eigen::MatrixXd m2 = cluster_meat(X, u, spec.cluster2, &g2);
      // Intersection clusters: pairs (id1, id2).
      std::vector<std::int64_t> inter(n);
      std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t> pair_ids;
      for (std::size_t i = 0; i < n; ++i) {
        auto key = std::make_pair(spec.cluster1[i], spec.cluster2[i]);
        auto [it, fresh] = pair_ids.try_emplace(key, static_cast<std::int64_t>(pair_ids.size()));
        inter[i] = it->second;
      }
      Eigen::MatrixXd m12 = cluster_meat(X, u, inter, &g12);
      V = bread * (m1 + m2 - m12) * bread;
      res.clusters1 = g1;
      res.clusters2 = g2;
      if (g2 == n) res.notes.push_back("cluster2-all-singletons");
      if (g2 == 1) res.notes.push_back("cluster2-single-cluster");
      if (g1 == n) res.notes.push_back("cluster1-all-singletons");
      if (g1 == 1) res.notes.push_back("cluster1-single-cluster");
      // The difference of sandwiches need not be positive semidefinite;
      // project by truncating negative eigenvalues at zero.
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (V + V.transpose()));
      if (es.eigenvalues().minCoeff() < 0.0) {
        Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
        V = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
        res.eigenvalue_truncated = true;
      }
      std::size_t g_min = std::min(g1, g2);
      df = static_cast<double>(g_min > 1 ? g_min - 1 : 1);
      break;
    }
  }

  res.vcov.assign(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      res.vcov[i][j] = V(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  res.se.resize(k);
  res.t_stat.resize(k);
  res.p_value.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    double v = V(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
    res.se[i] = v > 0.0 ? std::sqrt(v) : 0.0;
    if (res.se[i] > 0.0) {
      res.t_stat[i] = res.coef[i] / res.se[i];
      res.p_value[i] = stats::student_t_two_sided_p(res.t_stat[i], df);
    } else {
      res.t_stat[i] = 0.0;
      res.p_value[i] = 1.0;
    }
  }
  return res;
}

FitResult simple_ols(const std::vector<double>& x, const std::vector<double>& y,
                     const SeSpec& spec) {
  if (x.size() != y.size()) throw UsageError("simple_ols: x and y lengths differ");
  std::vector<std::vector<double>> X(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) X[i] = {1.0, x[i]};
  return ols(X, y, spec);
}

}  // namespace calibench::regress
