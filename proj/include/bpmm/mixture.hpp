#ifndef BPMM_MIXTURE_HPP
#define BPMM_MIXTURE_HPP

#include <Eigen/Dense>
#include <vector>

namespace bpmm {

/// Shared EM iterate for both connectivity models. Units are subjects for
/// the pairwise model and (subject, node) pairs for the precision model.
/// Component H is the multinomial-logit reference: its regression
/// coefficients are identically zero and never stored.
struct MixtureState {
  int H = 0;
  int atom_dim = 1;  // 1 = scalar atoms, V-1 = row-vector atoms

  Eigen::MatrixXd atoms;                   // H x T when atom_dim == 1
  std::vector<Eigen::MatrixXd> vatoms;     // [h] -> atom_dim x T otherwise
  Eigen::VectorXd sigma2;                  // H component variances
  std::vector<Eigen::MatrixXd> beta;       // [t] -> (H-1) x q
  std::vector<Eigen::MatrixXd> resp;       // [unit] -> H x T responsibilities

  int n_scans() const {
    return atom_dim == 1 ? static_cast<int>(atoms.cols())
                         : (vatoms.empty() ? 0 : static_cast<int>(vatoms[0].cols()));
  }
  int n_units() const { return static_cast<int>(resp.size()); }
};

/// Multinomial-logit mixture weights with reference class H:
/// xi_h = exp(x'b_h) / (1 + sum_r exp(x'b_r)) and xi_H = 1 / (1 + sum).
/// Computed with a max shift, so finite for logits up to ~700.
Eigen::VectorXd mixture_weights(const Eigen::VectorXd& x, const Eigen::MatrixXd& beta_t);

/// log of mixture_weights, same stabilization.
Eigen::VectorXd log_mixture_weights(const Eigen::VectorXd& x, const Eigen::MatrixXd& beta_t);

/// Posterior responsibilities from per-component log weights and log
/// densities; normalized in log space so rows always sum to 1.
Eigen::VectorXd e_step_responsibilities(const Eigen::VectorXd& log_weights,
                                        const Eigen::VectorXd& log_density);

/// Isotropic Gaussian log density of dimension dim (2*pi constant included).
double log_normal_density(double sq_resid, double sigma2, int dim);

/// Inverse-gamma-regularized variance update. dim == 1 uses
///   (b + 0.5 * sum psi * r^2) / (a + 0.5 * sum psi - 1)
/// and dim > 1 (row dimension V-1) uses
///   (b + 0.5 * sum psi * ||r||^2) / (a + 1 + 0.5 * dim * (dim+1) * sum psi).
/// A nonpositive denominator (possible in the scalar form for tiny counts)
/// keeps prev and flags held=true. Result is clamped below at 1e-8.
double m_step_sigma2(double sum_psi, double sum_psi_sq_resid, double a_sigma, double b_sigma,
                     int dim, double prev, bool* held = nullptr);

/// One ridge-regularized quadratic-approximation update of the logit
/// coefficients at a single scan. psi_sum holds per-subject responsibilities
/// summed over that subject's node_factor units (node_factor = 1 for the
/// pairwise model). Working weights are floored at 1e-10.
Eigen::MatrixXd m_step_beta(const Eigen::MatrixXd& psi_sum, const Eigen::MatrixXd& X,
                            const Eigen::MatrixXd& beta_prev, double sigma_beta_diag,
                            int node_factor = 1);

double log_sum_exp(const Eigen::VectorXd& v);

}  // namespace bpmm

#endif
