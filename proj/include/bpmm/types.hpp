#ifndef BPMM_TYPES_HPP
#define BPMM_TYPES_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "bpmm/transforms.hpp"

namespace bpmm {

/// Multi-subject time-series panel: N subjects, V nodes, T scans, plus an
/// N x q covariate matrix. Immutable after construction; shared read-only
/// across parallel workers.
struct PanelDataset {
  std::vector<Eigen::MatrixXd> data;  // one V x T matrix per subject
  Eigen::MatrixXd covariates;         // N x q
  std::vector<std::string> subject_ids;
  std::vector<std::string> node_names;  // optional, may be empty

  int n_subjects() const { return static_cast<int>(data.size()); }
  int n_nodes() const { return data.empty() ? 0 : static_cast<int>(data[0].rows()); }
  int n_scans() const { return data.empty() ? 0 : static_cast<int>(data[0].cols()); }
  int n_covariates() const { return static_cast<int>(covariates.cols()); }

  /// Throws std::runtime_error naming the offending subject/node on NaN,
  /// dimension mismatch, or zero-variance series.
  void validate() const;
};

enum class NetworkKind {
  PairwiseFisherZ,     // edge tensor of Fisher-z pairwise correlations
  Precision,           // per-scan V x V symmetric positive definite matrices
  PartialCorrelation,  // per-scan V x V symmetric matrices, unit diagonal
};

/// Per-subject, per-scan edge values. PairwiseFisherZ stores one T x E matrix
/// per subject (E = V(V-1)/2, edge order per edge_index). Matrix kinds store
/// a T-vector of V x V matrices per subject.
struct DynamicNetworkSet {
  NetworkKind kind = NetworkKind::PairwiseFisherZ;
  std::vector<Eigen::MatrixXd> edges;                     // [i] -> T x E
  std::vector<std::vector<Eigen::MatrixXd>> matrices;     // [i][t] -> V x V
  int n_nodes = 0;

  int n_subjects() const {
    return kind == NetworkKind::PairwiseFisherZ ? static_cast<int>(edges.size())
                                                : static_cast<int>(matrices.size());
  }
  int n_scans() const {
    if (kind == NetworkKind::PairwiseFisherZ)
      return edges.empty() ? 0 : static_cast<int>(edges[0].rows());
    return matrices.empty() ? 0 : static_cast<int>(matrices[0].size());
  }
};

struct HyperParams {
  int H = 2;
  std::vector<double> lambda_grid = {0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0};
  double a_sigma = 0.1;
  double b_sigma = 1.0;
  double sigma_y2 = -1.0;  // <= 0 means: use the mean per-series variance of the fitted panel
  double alpha = 1.0;
  double sigma_beta_diag = 1.0;
  int mc_samples = 20;
  int mc_burnin = 10;
  int max_em_iters = 100;
  double em_tol = 1e-4;
  bool standardize_covariates = true;
  bool standardize_nodes = true;   // per subject per node, unit variance (pairwise model)
  bool demean_nodes = true;
  bool covariate_naive = false;    // freeze beta at 0 (uniform mixture weights)
  bool freeze_lambda_after_first = false;

  void validate() const {
    if (H < 1) throw std::runtime_error("H must be >= 1");
    if (lambda_grid.empty()) throw std::runtime_error("lambda_grid must be non-empty");
    for (std::size_t k = 0; k < lambda_grid.size(); ++k) {
      if (lambda_grid[k] <= 0) throw std::runtime_error("lambda_grid entries must be > 0");
      if (k > 0 && lambda_grid[k] <= lambda_grid[k - 1])
        throw std::runtime_error("lambda_grid must be strictly increasing");
    }
    if (a_sigma <= 0 || b_sigma <= 0 || alpha <= 0 || sigma_beta_diag <= 0)
      throw std::runtime_error("scale hyperparameters must be > 0");
    if (mc_samples < 1 || mc_burnin < 0) throw std::runtime_error("bad Monte Carlo sample counts");
    if (max_em_iters < 1) throw std::runtime_error("max_em_iters must be >= 1");
    if (em_tol <= 0) throw std::runtime_error("em_tol must be > 0");
  }
};

/// Hard subject clustering. Labels are 0-based internally, in [0, K);
/// serialized artifacts use 1-based labels.
struct ClusterAssignment {
  std::vector<int> labels;
  int K = 0;

  void validate() const {
    if (K < 1 || K > static_cast<int>(labels.size()))
      throw std::runtime_error("cluster count out of range");
    for (int l : labels)
      if (l < 0 || l >= K) throw std::runtime_error("cluster label out of range");
  }
};

inline void PanelDataset::validate() const {
  const int N = n_subjects();
  if (N == 0) throw std::runtime_error("panel has no subjects");
  const int V = n_nodes();
  const int T = n_scans();
  if (V < 2 || T < 2) throw std::runtime_error("panel needs at least 2 nodes and 2 scans");
  if (static_cast<int>(covariates.rows()) != N)
    throw std::runtime_error("covariate matrix has " + std::to_string(covariates.rows()) +
                             " rows for " + std::to_string(N) + " subjects");
  if (static_cast<int>(subject_ids.size()) != N)
    throw std::runtime_error("subject id list length mismatch");
  if (!node_names.empty() && static_cast<int>(node_names.size()) != V)
    throw std::runtime_error("node name list length mismatch");
  for (int i = 0; i < N; ++i) {
    if (data[i].rows() != V || data[i].cols() != T)
      throw std::runtime_error("subject " + subject_ids[i] + " has dimensions " +
                               std::to_string(data[i].rows()) + "x" + std::to_string(data[i].cols()) +
                               ", expected " + std::to_string(V) + "x" + std::to_string(T));
    for (int v = 0; v < V; ++v) {
      double mean = 0, ss = 0;
      for (int t = 0; t < T; ++t) {
        const double x = data[i](v, t);
        if (!std::isfinite(x))
          throw std::runtime_error("non-finite value at subject " + subject_ids[i] + ", node " +
                                   std::to_string(v + 1) + ", scan " + std::to_string(t + 1));
        mean += x;
      }
      mean /= T;
      for (int t = 0; t < T; ++t) ss += (data[i](v, t) - mean) * (data[i](v, t) - mean);
      if (ss <= 0)
        throw std::runtime_error("constant series at subject " + subject_ids[i] + ", node " +
                                 std::to_string(v + 1));
    }
  }
  if (!covariates.allFinite()) throw std::runtime_error("non-finite covariate value");
}

}  // namespace bpmm

#endif
