#ifndef BPMM_IDPAC_HPP
#define BPMM_IDPAC_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "bpmm/mixture.hpp"
#include "bpmm/types.hpp"

namespace bpmm {

/// EM result for one edge: Fisher-z trajectories (N x T), the mixture
/// iterate, and the objective trace. The trace entries are the observed-data
/// log posterior (mixture marginalized, additive constants dropped), which
/// the EM iteration never decreases beyond 1e-6 once penalty levels are
/// compared on the same basis; monotone_violations counts the exceptions.
struct EdgeFit {
  Eigen::MatrixXd fisherz;
  MixtureState state;
  std::vector<double> log_posterior_trace;
  Eigen::VectorXd lambda;  // per-component fused penalty in effect at exit
  bool converged = false;
  int iterations = 0;
  int monotone_violations = 0;
  int sigma2_holds = 0;
  int beta_rejects = 0;
  std::string warning;
};

/// One safeguarded Newton ascent on a single Fisher-z value. Iterates
/// z <- z - a1/a2 until |step| < 1e-3; a step that lowers the per-observation
/// conditional log posterior is halved (up to 20 times); a nonnegative
/// curvature a2 falls back to a fixed 0.1 gradient step.
double newton_update_fisherz(double z, double yj, double yl, const Eigen::VectorXd& psi,
                             const Eigen::VectorXd& atoms_t, const Eigen::VectorXd& sigma2,
                             double sigma_y2);

/// Gradient / curvature of the per-observation conditional log posterior in
/// the Fisher-z parameter (exposed for finite-difference verification).
void fisherz_derivatives(double z, double yj, double yl, const Eigen::VectorXd& psi,
                         const Eigen::VectorXd& atoms_t, const Eigen::VectorXd& sigma2,
                         double sigma_y2, double& a1, double& a2);

double fisherz_conditional_logpost(double z, double yj, double yl, const Eigen::VectorXd& psi,
                                   const Eigen::VectorXd& atoms_t, const Eigen::VectorXd& sigma2,
                                   double sigma_y2);

/// EM for a single edge. y_j and y_l are the two node series as N x T
/// matrices; X is the (already standardized) covariate matrix. hp.sigma_y2
/// must be positive. Deterministic given the seed.
EdgeFit fit_edge(const Eigen::MatrixXd& y_j, const Eigen::MatrixXd& y_l,
                 const Eigen::MatrixXd& X, const HyperParams& hp, std::uint64_t seed);

/// Expected augmented log posterior for an edge with responsibilities
/// plugged in for the latent indicators (additive constants dropped).
double augmented_log_posterior_edge(const Eigen::MatrixXd& fisherz, const MixtureState& state,
                                    const Eigen::MatrixXd& y_j, const Eigen::MatrixXd& y_l,
                                    const Eigen::MatrixXd& X, const HyperParams& hp,
                                    const Eigen::VectorXd& lambda);

struct EdgeDiagnostics {
  int edge = 0, j = 0, l = 0;
  int iterations = 0;
  bool converged = false;
  double final_log_posterior = 0;
  std::string lambdas;  // per-component, ';'-joined
  std::string warning;
};

struct IdpacFit {
  DynamicNetworkSet networks;               // PairwiseFisherZ
  std::vector<MixtureState> states;         // one per edge
  std::vector<Eigen::MatrixXi> labels;      // [i] -> T x E argmax component labels
  std::vector<EdgeDiagnostics> diagnostics;
  double sigma_y2 = 1.0;
  bool all_converged = true;
};

/// Runs fit_edge over every edge of the panel (parallel map with per-edge
/// derived seeds; a failed edge is retried once with a fresh seed).
IdpacFit fit_idpac(const PanelDataset& panel, const HyperParams& hp, std::uint64_t seed,
                   int threads = 0);

/// Columns of the covariate matrix scaled to zero mean / unit variance;
/// constant columns are centered only.
Eigen::MatrixXd standardize_columns(const Eigen::MatrixXd& X);

/// Fisher-z trajectory from a centered sliding-window correlation
/// (window clamped at the boundaries), used as the EM initializer.
Eigen::MatrixXd sliding_window_fisherz(const Eigen::MatrixXd& y_j, const Eigen::MatrixXd& y_l,
                                       int window);

}  // namespace bpmm

#endif
