#ifndef BPMM_METRICS_HPP
#define BPMM_METRICS_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bpmm/types.hpp"

namespace bpmm {

/// Subject-by-subject co-clustering similarity: entry (i, i') is the
/// fraction of (scan, unit) cells where the two subjects carry the same
/// component label, averaged over units (edges or nodes). Symmetric, values
/// in [0, 1], unit diagonal.
Eigen::MatrixXd build_similarity(const std::vector<Eigen::MatrixXi>& labels);

/// K-means over the similarity rows (50 restarts). K = 0 selects the cluster
/// count by the maximum-curvature elbow over K in 1..k_max. Identical rows
/// collapse to a single cluster with a warning.
ClusterAssignment kmeans_subgroups(const Eigen::MatrixXd& similarity, int K, std::uint64_t seed,
                                   int k_max = 0, bool* degenerate = nullptr);

/// 1 - (best label-permutation agreement)/N, the permutation computed by
/// exact assignment on the contingency table.
double clustering_error(const ClusterAssignment& est, const ClusterAssignment& truth);

/// H(est) + H(truth) - 2 I(est; truth), natural logarithm.
double variation_of_information(const ClusterAssignment& est, const ClusterAssignment& truth);

/// Edge-detection F1 after thresholding |partial correlation| > threshold
/// off-diagonal. Empty truth and empty estimate score 1; zero true positives
/// with anything to find score 0.
double f1_score(const Eigen::MatrixXd& est_partial, const Eigen::MatrixXi& true_adjacency,
                double threshold = 0.05);

/// Greedy in-order one-to-one matching within +-tolerance scans.
/// Returns {sensitivity, false positive count}.
std::pair<double, int> cp_match_score(const std::vector<int>& est_cps,
                                      const std::vector<int>& true_cps, int tolerance = 2);

/// Mean squared difference of pairwise correlations over (subject, scan,
/// edge). Fisher-z sets are mapped through tanh; precision sets are inverted
/// to covariance and normalized to correlations.
double mse_correlations(const DynamicNetworkSet& est, const DynamicNetworkSet& truth);

/// Pairwise-correlation tensor (subject -> T x E) from any network kind.
std::vector<Eigen::MatrixXd> to_correlations(const DynamicNetworkSet& nets);

/// Exact minimum-cost assignment on a square cost matrix (O(n^3)).
std::vector<int> hungarian(const Eigen::MatrixXd& cost);

struct MetricReport {
  double ce = 0;
  double vi = 0;
  double f1 = 0;
  double mse = 0;
  double cp_sensitivity = 0;
  double cp_false_positives = 0;

  std::string to_key_value() const;
  std::string to_json() const;
};

}  // namespace bpmm

#endif
