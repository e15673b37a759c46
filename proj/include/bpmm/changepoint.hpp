#ifndef BPMM_CHANGEPOINT_HPP
#define BPMM_CHANGEPOINT_HPP

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "bpmm/types.hpp"

namespace bpmm {

// Change points are 0-based scan indices t in [1, T): the piecewise-constant
// approximation jumps between scans t-1 and t. Serialized artifacts use
// 1-based indices (so 2..T).

struct TvSegmentation {
  Eigen::MatrixXd piecewise;      // T x E
  std::vector<int> change_points;
  double objective = 0;
  double rss = 0;  // unscaled fidelity sum
};

/// Multivariate total-variation segmentation
///   min_u sum_t ||r_t - u_t||^2 + lambda_u sum_t (1/E) ||u_{t+1} - u_t||_2
/// solved by block coordinate descent on the jump parameterization (exact
/// group soft-thresholding per block). The fidelity term is unscaled; the
/// penalty carries the 1/E group scaling. A jump is a change point when its
/// scaled norm exceeds 1e-8.
TvSegmentation tv_segment(const Eigen::MatrixXd& series, double lambda_u);

struct LambdaSelection {
  double lambda_u = 0;
  std::vector<int> change_points;
  Eigen::MatrixXd piecewise;
  std::vector<int> cp_counts;      // per grid value, ascending grid order
  bool monotone = true;            // cp count non-increasing along the grid
};

/// Picks the grid value minimizing T ln(RSS/T) + #cp * ln(T) * E_eff with
/// E_eff = 1 for a single series and ln(E) + 1 for a network-level series.
LambdaSelection select_lambda_u(const Eigen::MatrixXd& series, const std::vector<double>& grid);

/// Default grid {0.5, 1, 2, 4, 8, 16} * sigma_hat * sqrt(T), where sigma_hat
/// is the median absolute successive difference over all coordinates / sqrt(2).
std::vector<double> default_lambda_u_grid(const Eigen::MatrixXd& series);

/// Pools member change points, chains points whose gaps are within `window`
/// scans into candidates (lower-median representative), and keeps candidates
/// supported by at least freq_threshold of the cluster members.
std::vector<int> cluster_changepoints_one(const std::vector<std::vector<int>>& member_cps,
                                          int cluster_size, double freq_threshold, int window);

std::map<int, std::vector<int>> cluster_changepoints(
    const std::vector<std::vector<int>>& per_subject_cps, const ClusterAssignment& assignment,
    double freq_threshold, int window);

struct ChangePointReport {
  std::vector<std::string> subject_ids;
  std::vector<std::vector<int>> per_subject;       // 0-based
  std::map<int, std::vector<int>> cluster_level;   // cluster -> 0-based cps
  double lambda_u_used = 0;  // mean of per-subject selections
  std::vector<double> lambda_u_per_subject;
};

/// Line-based text round trip ("bpmm-changepoints v1" header, 1-based scans).
std::string serialize_changepoint_report(const ChangePointReport& report);
ChangePointReport parse_changepoint_report(const std::string& text);

}  // namespace bpmm

#endif
