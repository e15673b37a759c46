#ifndef BPMM_KMEANS_HPP
#define BPMM_KMEANS_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace bpmm {

struct KMeansResult {
  std::vector<int> labels;
  Eigen::MatrixXd centers;  // K x dim
  double wcss = 0.0;
};

/// Lloyd's algorithm with k-means++ seeding, best of `restarts` runs by
/// within-cluster sum of squares. Deterministic given the seed.
KMeansResult kmeans(const Eigen::MatrixXd& points, int K, int restarts,
                    std::uint64_t seed, int max_iter = 100);

/// 1-D k-means with quantile initialization and Lloyd refinement. The result
/// depends only on the multiset of values, not their order, so callers that
/// need permutation equivariance over units can rely on it.
KMeansResult kmeans_1d_quantile(const Eigen::VectorXd& values, int K, int max_iter = 100);

}  // namespace bpmm

#endif
