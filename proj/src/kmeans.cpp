#include "bpmm/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "bpmm/rng.hpp"

namespace bpmm {

namespace {

double assign_labels(const Eigen::MatrixXd& pts, const Eigen::MatrixXd& centers,
                     std::vector<int>& labels) {
  const int n = static_cast<int>(pts.rows());
  const int K = static_cast<int>(centers.rows());
  double wcss = 0;
  for (int i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (int k = 0; k < K; ++k) {
      const double d = (pts.row(i) - centers.row(k)).squaredNorm();
      if (d < best) {
        best = d;
        arg = k;
      }
    }
    labels[i] = arg;
    wcss += best;
  }
  return wcss;
}

void update_centers(const Eigen::MatrixXd& pts, const std::vector<int>& labels,
                    Eigen::MatrixXd& centers) {
  const int K = static_cast<int>(centers.rows());
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(K);
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(K, pts.cols());
  for (int i = 0; i < pts.rows(); ++i) {
    sums.row(labels[i]) += pts.row(i);
    counts(labels[i]) += 1;
  }
  for (int k = 0; k < K; ++k)
    if (counts(k) > 0) centers.row(k) = sums.row(k) / counts(k);
  // empty clusters keep their previous center
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& points, int K, int restarts,
                    std::uint64_t seed, int max_iter) {
  const int n = static_cast<int>(points.rows());
  if (K < 1) throw std::invalid_argument("kmeans needs K >= 1");
  if (K > n) K = n;
  KMeansResult best;
  best.wcss = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, restarts); ++r) {
    Rng rng(derive_seed(seed, 0x6b6dULL, static_cast<std::uint64_t>(r)));
    // k-means++ seeding
    Eigen::MatrixXd centers(K, points.cols());
    centers.row(0) = points.row(rng.uniform_int(n));
    Eigen::VectorXd d2 = (points.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (int k = 1; k < K; ++k) {
      const double total = d2.sum();
      int pick = 0;
      if (total > 0) {
        double u = rng.uniform() * total, acc = 0;
        for (int i = 0; i < n; ++i) {
          acc += d2(i);
          if (acc >= u) {
            pick = i;
            break;
          }
        }
      } else {
        pick = static_cast<int>(rng.uniform_int(n));
      }
      centers.row(k) = points.row(pick);
      d2 = d2.cwiseMin((points.rowwise() - centers.row(k)).rowwise().squaredNorm());
    }
    std::vector<int> labels(n, 0);
    double wcss = assign_labels(points, centers, labels);
    for (int it = 0; it < max_iter; ++it) {
      update_centers(points, labels, centers);
      const double next = assign_labels(points, centers, labels);
      if (next >= wcss - 1e-12) {
        wcss = next;
        break;
      }
      wcss = next;
    }
    if (wcss < best.wcss) {
      best.wcss = wcss;
      best.labels = labels;
      best.centers = centers;
    }
  }
  return best;
}

KMeansResult kmeans_1d_quantile(const Eigen::VectorXd& values, int K, int max_iter) {
  const int n = static_cast<int>(values.size());
  if (K > n) K = std::max(1, n);
  std::vector<double> sorted(values.data(), values.data() + n);
  std::sort(sorted.begin(), sorted.end());
  Eigen::MatrixXd centers(K, 1);
  for (int k = 0; k < K; ++k) {
    const double q = (k + 0.5) / K;
    centers(k, 0) = sorted[std::min<std::size_t>(sorted.size() - 1,
                                                 static_cast<std::size_t>(q * n))];
  }
  Eigen::MatrixXd pts(n, 1);
  pts.col(0) = values;
  KMeansResult res;
  res.labels.assign(n, 0);
  res.wcss = assign_labels(pts, centers, res.labels);
  for (int it = 0; it < max_iter; ++it) {
    update_centers(pts, res.labels, centers);
    const double next = assign_labels(pts, centers, res.labels);
    if (next >= res.wcss - 1e-12) {
      res.wcss = next;
      break;
    }
    res.wcss = next;
  }
  res.centers = centers;
  return res;
}

}  // namespace bpmm
