#ifndef BPMM_IDPMAC_HPP
#define BPMM_IDPMAC_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "bpmm/mixture.hpp"
#include "bpmm/rng.hpp"
#include "bpmm/types.hpp"

namespace bpmm {

struct GibbsDiagnostics {
  int jitter_count = 0;  // Cholesky rescues with 1e-8 * I
};

/// One conditional draw of a precision-matrix column given the rest of the
/// matrix. B is the inverse of the complement block, s_v / s_vv the matching
/// pieces of the cross-product matrix, psi_v the node's responsibilities.
/// Off-diagonals come from N(A^{-1}(m - s_v), A^{-1}) with
/// A = (s_vv + alpha) B + (sum_h psi_h / sigma2_h) I and
/// m = sum_h psi_h atom_h / sigma2_h; the diagonal is kappa + w' B w with
/// kappa ~ Gamma(3/2, rate (s_vv + alpha)/2), which keeps the full matrix
/// positive definite by construction.
struct ColumnDraw {
  Eigen::VectorXd offdiag;
  double kappa = 0;
};
ColumnDraw draw_precision_column(const Eigen::MatrixXd& B, const Eigen::VectorXd& s_v,
                                 double s_vv, const Eigen::VectorXd& psi_v,
                                 const Eigen::MatrixXd& atoms_t, const Eigen::VectorXd& sigma2,
                                 double alpha, Rng& rng, GibbsDiagnostics* diag = nullptr);

/// Cycles all columns for burnin + n_samples full sweeps and returns the
/// average of the post-burn-in states. omega must enter positive definite;
/// every intermediate state stays positive definite.
Eigen::MatrixXd gibbs_sample_precision(const Eigen::MatrixXd& S, Eigen::MatrixXd omega,
                                       const Eigen::MatrixXd& psi_nodes,  // H x V
                                       const Eigen::MatrixXd& atoms_t,    // (V-1) x H
                                       const Eigen::VectorXd& sigma2, double alpha,
                                       int n_samples, int burnin, Rng& rng,
                                       GibbsDiagnostics* diag = nullptr);

struct IterationDiagnostics {
  int iteration = 0;
  double log_posterior = 0;
  double audited_min_eigenvalue = 0;
  int jitter_count = 0;
};

struct PrecisionFit {
  std::vector<std::vector<Eigen::MatrixXd>> omega;  // [i][t] -> V x V posterior mean
  MixtureState state;                               // vector atoms, units are (subject, node)
  std::vector<double> log_posterior_trace;
  Eigen::VectorXd lambda;
  bool converged = false;
  int iterations = 0;
  int jitter_count = 0;
  std::vector<Eigen::MatrixXi> labels;  // [i] -> T x V argmax component labels
  std::vector<IterationDiagnostics> iteration_diagnostics;
  std::string warning;
};

/// Node-wise EM for dynamic precision matrices with a Monte Carlo E-step.
/// Deterministic given the seed (per-(subject, scan) derived Gibbs streams).
/// An explicit init overrides the k-means initialization of the mixture
/// state (used for warm starts and invariance checks).
PrecisionFit fit_idpmac(const PanelDataset& panel, const HyperParams& hp, std::uint64_t seed,
                        int threads = 0, const MixtureState* init = nullptr);

/// Partial correlation matrices -omega_kl / sqrt(omega_kk omega_ll), with
/// the diagonal mapped to 1.
Eigen::MatrixXd partial_correlation_matrix(const Eigen::MatrixXd& omega);
DynamicNetworkSet partial_correlations(const PrecisionFit& fit);

/// K-means initialization of the mixture state from per-scan precision rows
/// (exposed so callers can permute or perturb it before fitting).
MixtureState init_idpmac_state(const std::vector<std::vector<Eigen::MatrixXd>>& omega, int H,
                               int n_covariates, std::uint64_t seed);

}  // namespace bpmm

#endif
