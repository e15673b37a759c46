#include "bpmm/mixture.hpp"

#include <cmath>
#include <stdexcept>

namespace bpmm {

double log_sum_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;  // all -inf
  double s = 0;
  for (int i = 0; i < v.size(); ++i) s += std::exp(v(i) - m);
  return m + std::log(s);
}

Eigen::VectorXd log_mixture_weights(const Eigen::VectorXd& x, const Eigen::MatrixXd& beta_t) {
  const int H = static_cast<int>(beta_t.rows()) + 1;
  Eigen::VectorXd logits(H);
  logits.head(H - 1) = beta_t * x;
  logits(H - 1) = 0.0;  // reference class
  const double lse = log_sum_exp(logits);
  return logits.array() - lse;
}

Eigen::VectorXd mixture_weights(const Eigen::VectorXd& x, const Eigen::MatrixXd& beta_t) {
  return log_mixture_weights(x, beta_t).array().exp();
}

Eigen::VectorXd e_step_responsibilities(const Eigen::VectorXd& log_weights,
                                        const Eigen::VectorXd& log_density) {
  Eigen::VectorXd lp = log_weights + log_density;
  const double lse = log_sum_exp(lp);
  if (!std::isfinite(lse)) {
    // every component at -inf: fall back to uniform
    return Eigen::VectorXd::Constant(lp.size(), 1.0 / static_cast<double>(lp.size()));
  }
  return (lp.array() - lse).exp();
}

double log_normal_density(double sq_resid, double sigma2, int dim) {
  return -0.5 * dim * std::log(2.0 * M_PI * sigma2) - 0.5 * sq_resid / sigma2;
}

double m_step_sigma2(double sum_psi, double sum_psi_sq_resid, double a_sigma, double b_sigma,
                     int dim, double prev, bool* held) {
  if (held) *held = false;
  const double num = b_sigma + 0.5 * sum_psi_sq_resid;
  double den;
  if (dim == 1) {
    den = a_sigma + 0.5 * sum_psi - 1.0;
    if (den <= 0) {
      if (held) *held = true;
      return prev;
    }
  } else {
    den = a_sigma + 1.0 + 0.5 * static_cast<double>(dim) * (dim + 1) * sum_psi;
  }
  return std::max(num / den, 1e-8);
}

Eigen::MatrixXd m_step_beta(const Eigen::MatrixXd& psi_sum, const Eigen::MatrixXd& X,
                            const Eigen::MatrixXd& beta_prev, double sigma_beta_diag,
                            int node_factor) {
  const int N = static_cast<int>(X.rows());
  const int q = static_cast<int>(X.cols());
  const int H = static_cast<int>(psi_sum.cols());
  if (psi_sum.rows() != N) throw std::invalid_argument("psi_sum rows must match subjects");
  if (beta_prev.rows() != H - 1 || beta_prev.cols() != q)
    throw std::invalid_argument("beta_prev must be (H-1) x q");
  if (sigma_beta_diag <= 0) throw std::invalid_argument("sigma_beta_diag must be > 0");

  Eigen::MatrixXd beta_new(H - 1, q);
  const double V = static_cast<double>(node_factor);

  // current class probabilities at beta_prev
  Eigen::MatrixXd probs(N, H);
  for (int i = 0; i < N; ++i)
    probs.row(i) = mixture_weights(X.row(i).transpose(), beta_prev).transpose();

  for (int h = 0; h < H - 1; ++h) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(q, q) / sigma_beta_diag;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(q);
    for (int i = 0; i < N; ++i) {
      const double p = probs(i, h);
      const double w = std::max(p * (1.0 - p), 1e-10);
      const double xb = X.row(i).dot(beta_prev.row(h));
      // aggregated working response: sum_v w z = V w x'b + (sum_v psi - V p)
      const double wz = V * w * xb + (psi_sum(i, h) - V * p);
      A.noalias() += (V * w) * (X.row(i).transpose() * X.row(i));
      rhs.noalias() += wz * X.row(i).transpose();
    }
    beta_new.row(h) = A.ldlt().solve(rhs).transpose();
  }
  return beta_new;
}

}  // namespace bpmm
