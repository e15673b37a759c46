#include "bpmm/lasso.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "bpmm/logging.hpp"

namespace bpmm {

namespace {
constexpr int kMaxSweeps = 10000;
constexpr double kCoordTol = 1e-10;
constexpr double kKktTol = 1e-8;
}  // namespace

LassoResult solve_lasso(const LassoProblem& problem) {
  const auto& X = problem.design;
  const auto& y = problem.response;
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  if (n < 1 || p < 1) throw std::invalid_argument("empty lasso problem");
  if (y.size() != n) throw std::invalid_argument("response length mismatch");
  if (problem.penalty < 0) throw std::invalid_argument("penalty must be >= 0");
  if (!problem.penalize.empty() && static_cast<int>(problem.penalize.size()) != p)
    throw std::invalid_argument("penalize mask length mismatch");

  const auto penalized = [&](int j) {
    return problem.penalize.empty() ? true : problem.penalize[j] != 0;
  };

  Eigen::VectorXd norms(p);
  for (int j = 0; j < p; ++j) norms(j) = X.col(j).squaredNorm();

  LassoResult res;
  res.coef = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd r = y;

  const auto objective = [&] {
    double pen = 0;
    for (int j = 0; j < p; ++j)
      if (penalized(j)) pen += std::abs(res.coef(j));
    return r.squaredNorm() + problem.penalty * pen;
  };
  double prev_obj = objective();

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double max_change = 0;
    for (int j = 0; j < p; ++j) {
      if (norms(j) <= 0) {
        res.coef(j) = 0;  // all-zero column: coefficient reported exactly 0
        continue;
      }
      const double z = X.col(j).dot(r) + norms(j) * res.coef(j);
      const double next = penalized(j) ? soft_threshold(z, problem.penalty) / norms(j)
                                       : z / norms(j);
      const double delta = next - res.coef(j);
      if (delta != 0) {
        r -= delta * X.col(j);
        res.coef(j) = next;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    res.sweeps = sweep + 1;
    const double obj = objective();
    if (obj > prev_obj + 1e-9 * (1.0 + std::abs(prev_obj)))
      throw std::logic_error("coordinate sweep increased the lasso objective");
    prev_obj = obj;
    if (max_change < kCoordTol) break;
  }

  // KKT residual: gradient of the smooth part must sit inside the
  // subdifferential of the penalty.
  double kkt = 0;
  for (int j = 0; j < p; ++j) {
    if (norms(j) <= 0) continue;
    const double g = X.col(j).dot(r);
    if (!penalized(j)) {
      kkt = std::max(kkt, std::abs(g));
    } else if (res.coef(j) == 0) {
      kkt = std::max(kkt, std::max(0.0, std::abs(g) - problem.penalty));
    } else {
      kkt = std::max(kkt, std::abs(g - problem.penalty * (res.coef(j) > 0 ? 1.0 : -1.0)));
    }
  }
  res.kkt_residual = kkt;
  res.converged = kkt <= kKktTol;
  if (!res.converged)
    log_warn("lasso did not reach stationarity after " + std::to_string(res.sweeps) +
             " sweeps, KKT residual " + std::to_string(kkt));
  return res;
}

FusedFit solve_fused_weighted(const Eigen::VectorXd& weights, const Eigen::VectorXd& targets,
                              double lambda, const Eigen::VectorXd* warm_eta) {
  const int T = static_cast<int>(weights.size());
  if (T < 1 || targets.size() != T) throw std::invalid_argument("bad fused problem size");
  if (lambda < 0) throw std::invalid_argument("lambda must be >= 0");
  double wtot = 0;
  for (int t = 0; t < T; ++t) {
    if (weights(t) < 0) throw std::invalid_argument("weights must be >= 0");
    wtot += weights(t);
  }
  if (wtot <= 0) throw std::runtime_error("fused problem has no positive weight (empty component)");

  // Column k of the implicit design has sqrt(w_t) in rows t >= k; its squared
  // norm is the weight suffix sum.
  Eigen::VectorXd sqw(T), Wsuf(T + 1);
  for (int t = 0; t < T; ++t) sqw(t) = std::sqrt(weights(t));
  Wsuf(T) = 0;
  for (int t = T - 1; t >= 0; --t) Wsuf(t) = Wsuf(t + 1) + weights(t);

  FusedFit fit;
  fit.lambda = lambda;
  fit.eta = (warm_eta && warm_eta->size() == T) ? *warm_eta : Eigen::VectorXd::Zero(T);
  for (int k = 0; k < T; ++k)
    if (Wsuf(k) <= 0) fit.eta(k) = 0;

  Eigen::VectorXd gamma(T), r0(T);
  const auto rebuild = [&] {
    double acc = 0;
    for (int t = 0; t < T; ++t) {
      acc += fit.eta(t);
      gamma(t) = acc;
      r0(t) = sqw(t) * (targets(t) - gamma(t));
    }
  };

  bool converged = false;
  int sweep = 0;
  double prev_obj = std::numeric_limits<double>::infinity();
  for (; sweep < kMaxSweeps && !converged; ++sweep) {
    rebuild();
    const double obj = r0.squaredNorm() + lambda * fit.eta.tail(T - 1).lpNorm<1>();
    if (obj > prev_obj + 1e-9 * (1.0 + std::abs(prev_obj)))
      throw std::logic_error("coordinate sweep increased the fused objective");
    prev_obj = obj;
    // Descending pass: C0_k = suffix sum of sqrt(w)*r0 accumulates in O(1);
    // updates at m > k shift every later gradient by delta_m * Wsuf(m).
    double suffix = 0, correction = 0, max_change = 0;
    for (int k = T - 1; k >= 0; --k) {
      suffix += sqw(k) * r0(k);
      if (Wsuf(k) <= 0) continue;
      const double grad = suffix - correction;
      const double z = grad + Wsuf(k) * fit.eta(k);
      const double next = (k == 0) ? z / Wsuf(k) : soft_threshold(z, lambda) / Wsuf(k);
      const double delta = next - fit.eta(k);
      if (delta != 0) {
        correction += delta * Wsuf(k);
        fit.eta(k) = next;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    converged = max_change < kCoordTol;
  }
  fit.converged = converged;
  if (!converged) log_warn("fused solve hit the sweep cap at lambda " + std::to_string(lambda));

  rebuild();
  fit.atoms = gamma;
  fit.rss = r0.squaredNorm();
  fit.active_diffs = 0;
  for (int k = 1; k < T; ++k)
    if (fit.eta(k) != 0) ++fit.active_diffs;
  return fit;
}

FusedFit solve_fused_path(const Eigen::VectorXd& weights, const Eigen::VectorXd& targets,
                          const std::vector<double>& grid, Eigen::MatrixXd* warm) {
  if (grid.empty()) throw std::invalid_argument("lambda grid is empty");
  for (std::size_t g = 1; g < grid.size(); ++g)
    if (grid[g] <= grid[g - 1]) throw std::invalid_argument("lambda grid must be strictly increasing");
  const int T = static_cast<int>(weights.size());
  int n_pos = 0;
  for (int t = 0; t < T; ++t)
    if (weights(t) > 0) ++n_pos;
  if (n_pos == 0) throw std::runtime_error("fused path has no positive weight (empty component)");

  if (warm && (warm->rows() != static_cast<int>(grid.size()) || warm->cols() != T))
    warm->setZero(static_cast<int>(grid.size()), T);

  FusedFit best;
  bool have = false;
  // Largest lambda first so the cold path starts from the most-fused state.
  for (int g = static_cast<int>(grid.size()) - 1; g >= 0; --g) {
    Eigen::VectorXd warm_eta;
    if (warm) warm_eta = warm->row(g);
    FusedFit fit = solve_fused_weighted(weights, targets, grid[g],
                                        warm ? &warm_eta : nullptr);
    if (warm) warm->row(g) = fit.eta;
    const double n = static_cast<double>(n_pos);
    const double k = fit.active_diffs + 1;
    fit.bic = n * std::log(std::max(fit.rss, 1e-300) / n) + k * std::log(n);
    // ascending-lambda tie break: prefer the smaller lambda on equal BIC
    if (!have || fit.bic < best.bic || (fit.bic == best.bic && fit.lambda < best.lambda)) {
      best = fit;
      have = true;
    }
  }
  return best;
}

}  // namespace bpmm
