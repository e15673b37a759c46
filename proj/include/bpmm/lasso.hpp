#ifndef BPMM_LASSO_HPP
#define BPMM_LASSO_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace bpmm {

/// Weighted lasso problem min 0.5-free form: ||y - X b||^2 + lambda * sum_j
/// penalize[j] * |b_j|. The level coordinate of a fused-difference design is
/// the typical unpenalized column.
struct LassoProblem {
  Eigen::MatrixXd design;
  Eigen::VectorXd response;
  double penalty = 0.0;
  std::vector<std::uint8_t> penalize;  // size p; empty means penalize all
};

struct LassoResult {
  Eigen::VectorXd coef;
  int sweeps = 0;
  double kkt_residual = 0.0;
  bool converged = false;
};

/// Cyclic coordinate descent. Each sweep never increases the penalized
/// objective; stops when the largest coordinate change falls below 1e-10.
/// Stationarity is certified by a KKT residual <= 1e-8 on exit; a
/// non-converged result reports the residual it reached.
LassoResult solve_lasso(const LassoProblem& problem);

struct FusedFit {
  Eigen::VectorXd atoms;  // length T
  Eigen::VectorXd eta;    // difference parameterization, eta[0] = level
  double lambda = 0.0;
  double rss = 0.0;       // weighted residual sum of squares
  int active_diffs = 0;
  double bic = 0.0;
  bool converged = true;
};

/// Solves the weighted fused problem
///   min_g sum_t w_t (target_t - g_t)^2 + lambda * sum_t |g_t - g_{t-1}|
/// through the difference reparameterization. The chain design is never
/// materialized: suffix-sum bookkeeping makes a full coordinate sweep O(T).
/// Scans with w_t = 0 contribute nothing to the fit and extend the
/// neighboring segment. Throws if all weights are zero.
FusedFit solve_fused_weighted(const Eigen::VectorXd& weights, const Eigen::VectorXd& targets,
                              double lambda, const Eigen::VectorXd* warm_eta = nullptr);

/// Runs solve_fused_weighted over the grid and returns the fit minimizing
/// BIC = n ln(RSS/n) + k ln(n), with k = active differences + 1 and n = the
/// number of positive-weight scans. warm, when given, must have grid.size()
/// rows usable as per-lambda warm starts; it is updated in place.
FusedFit solve_fused_path(const Eigen::VectorXd& weights, const Eigen::VectorXd& targets,
                          const std::vector<double>& grid, Eigen::MatrixXd* warm = nullptr);

inline double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

}  // namespace bpmm

#endif
