#ifndef BPMM_SIMGEN_HPP
#define BPMM_SIMGEN_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "bpmm/types.hpp"

namespace bpmm {

enum class Topology { ErdosRenyi, SmallWorld, ScaleFree };
enum class ObsModel { GGM, VAR };

struct SimConfig {
  int n_subjects = 40;
  int n_nodes = 40;
  int n_scans = 300;
  std::vector<int> cluster_sizes = {10, 10, 10, 10};
  std::vector<int> cps_per_cluster = {3, 3, 4, 4};
  Topology topology = Topology::ErdosRenyi;
  double er_edge_prob = -1;  // <= 0 means mean degree 4: p = 4/(V-1)
  int ws_neighbors = 4;
  double ws_rewire = 0.1;
  int ba_edges_per_node = 1;
  ObsModel obs_model = ObsModel::GGM;
  double ar_coeff = 0.3;
  int n_spurious = 0;
  int cp_jitter = 2;      // subject locations = cluster anchor +- Uniform{-j..j}
  int min_segment = 20;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Ground truth emitted by the generator: phase-wise precision matrices are
/// stored once per (subject, phase); scans resolve through the change points.
struct SimTruth {
  std::vector<std::vector<int>> cps;  // per subject, sorted, in [1, T)
  std::vector<int> labels;            // cluster per subject, 0-based
  int K = 0;
  int n_scans = 0;
  std::vector<std::vector<Eigen::MatrixXd>> phase_precisions;  // [subject][phase]
  std::vector<std::vector<Eigen::MatrixXi>> phase_adjacency;   // [cluster][phase]
  Eigen::MatrixXd covariates;

  int phase_of(int subject, int scan) const;
  const Eigen::MatrixXd& omega_at(int subject, int scan) const;
  const Eigen::MatrixXi& adjacency_at(int subject, int scan) const;
  ClusterAssignment assignment() const;
  DynamicNetworkSet to_network_set() const;  // Precision kind, materialized per scan
};

struct SimResult {
  PanelDataset panel;
  SimTruth truth;
};

/// Covariate-keyed clustered panel with piecewise-constant sparse precision
/// matrices. Identical configs (seed included) give bit-identical output.
SimResult generate(const SimConfig& config);

// random graph supports (symmetric 0/1 adjacency, zero diagonal)
Eigen::MatrixXi erdos_renyi_graph(int V, double p, std::uint64_t seed);
Eigen::MatrixXi watts_strogatz_graph(int V, int k, double rewire_p, std::uint64_t seed);
Eigen::MatrixXi barabasi_albert_graph(int V, int m, std::uint64_t seed);

struct PrewhitenResult {
  PanelDataset panel;
  std::vector<int> orders;      // selected AR order per (subject * V + node)
  int differenced_series = 0;   // unit-root fallbacks
};

/// Autoregressive residualization per series. The order in 0..max_ar_order
/// minimizes T ln(sigma2_p) + p ln(T) from the Levinson-Durbin recursion;
/// a near-unit-root fit falls back to first differencing. The first p scans
/// of each residual series are back-filled with zeros, so T is unchanged.
PrewhitenResult prewhiten(const PanelDataset& panel, int max_ar_order);

/// Centered sliding-window Pearson correlations, Fisher-transformed. The
/// window keeps full width by clamping at the boundaries. Window must be odd
/// and within [3, T].
DynamicNetworkSet sliding_window_baseline(const PanelDataset& panel, int window);

}  // namespace bpmm

#endif
