#pragma once

/// Least-squares fitting with the robust standard errors the analysis
/// modules need: classical, heteroskedasticity-robust (HC0), one-way
/// cluster-robust, and two-way cluster-robust variance built as
/// V = V(dim1) + V(dim2) - V(dim1 x dim2 intersection).
///
/// Conventions:
///  - The caller supplies the full design matrix, including the intercept
///    column; nothing is added implicitly.
///  - No small-sample degrees-of-freedom inflation is applied to the robust
///    sandwiches; tests pin the plain formulas.
///  - p-values use Student's t with n-k degrees of freedom for classical and
///    HC0 errors, and G-1 (smallest clustering dimension) for clustered ones.
///  - If the two-way variance has negative eigenvalues it is projected onto
///    the positive semidefinite cone (eigenvalues truncated at zero) and the
///    result is flagged.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace calibench::regress {

enum class SeType {
  Classical,
  HC0,
  ClusterOneWay,
  ClusterTwoWay,
};

std::string to_string(SeType t);

struct SeSpec {
  SeType type = SeType::HC0;
  /// Cluster ids, one per observation. cluster1 is required for one- and
  /// two-way clustering, cluster2 additionally for two-way.
  std::vector<std::int64_t> cluster1;
  std::vector<std::int64_t> cluster2;
  /// Optional frequency weights (grouped fits). Only valid with Classical
  /// standard errors; robust sandwiches operate on ungrouped records.
  std::vector<double> weights;
};

struct FitResult {
  std::vector<double> coef;
  std::vector<double> se;
  std::vector<double> t_stat;
  std::vector<double> p_value;
  std::vector<std::vector<double>> vcov;  ///< k x k variance of the coefficients
  std::size_t n = 0;                      ///< observations
  std::size_t k = 0;                      ///< parameters
  double r_squared = 0.0;
  double residual_ss = 0.0;
  std::size_t clusters1 = 0;  ///< populated for clustered fits
  std::size_t clusters2 = 0;
  bool eigenvalue_truncated = false;  ///< two-way variance was projected to PSD
  std::string se_type;
  /// Diagnostics, e.g. "cluster2-all-singletons" or "cluster2-single-cluster"
  /// when a two-way request degenerates to a simpler estimator.
  std::vector<std::string> notes;
};

/// Ordinary least squares on a row-major design matrix. Throws UsageError on
/// shape mismatches and DataError when the design matrix is rank deficient.
FitResult ols(const std::vector<std::vector<double>>& X, const std::vector<double>& y,
              const SeSpec& spec = {});

/// Convenience wrapper: regress y on a single regressor plus intercept.
/// Coefficient order is {intercept, slope}.
FitResult simple_ols(const std::vector<double>& x, const std::vector<double>& y,
                     const SeSpec& spec = {});

}  // namespace calibench::regress
