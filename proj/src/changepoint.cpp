#include "bpmm/changepoint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bpmm/logging.hpp"

namespace bpmm {

TvSegmentation tv_segment(const Eigen::MatrixXd& series, double lambda_u) {
  const int T = static_cast<int>(series.rows());
  const int E = static_cast<int>(series.cols());
  if (T < 1 || E < 1) throw std::invalid_argument("empty series");
  if (lambda_u < 0) throw std::invalid_argument("lambda_u must be >= 0");

  TvSegmentation out;
  if (lambda_u == 0 || T == 1) {
    out.piecewise = series;
    out.objective = 0;
    out.rss = 0;
    return out;
  }

  // Jump parameterization u_t = level + sum_{k<=t} jump_k. Group soft
  // thresholding per jump; suffix-sum bookkeeping keeps a sweep at O(TE).
  const double lam = lambda_u / E;  // scaled group norm folds into the weight
  Eigen::VectorXd level = Eigen::VectorXd::Zero(E);
  Eigen::MatrixXd jumps = Eigen::MatrixXd::Zero(T, E);  // row 0 unused

  Eigen::MatrixXd u(T, E), resid(T, E);
  const auto rebuild = [&] {
    Eigen::VectorXd acc = level;
    for (int t = 0; t < T; ++t) {
      if (t > 0) acc += jumps.row(t).transpose();
      u.row(t) = acc.transpose();
      resid.row(t) = series.row(t) - u.row(t);
    }
  };

  constexpr int kMaxSweeps = 10000;
  constexpr double kTol = 1e-10;
  double prev_obj = std::numeric_limits<double>::infinity();
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    rebuild();
    {
      double pen = 0;
      for (int t = 1; t < T; ++t) pen += jumps.row(t).norm();
      const double obj = resid.squaredNorm() + lam * pen;
      if (obj > prev_obj + 1e-9 * (1.0 + std::abs(prev_obj)))
        throw std::logic_error("block sweep increased the segmentation objective");
      prev_obj = obj;
    }
    double max_change = 0;
    // level term (unpenalized): optimal shift is the mean residual
    {
      const Eigen::VectorXd shift = resid.colwise().mean().transpose();
      level += shift;
      for (int t = 0; t < T; ++t) resid.row(t) -= shift.transpose();
      max_change = shift.cwiseAbs().maxCoeff();
    }
    // descending pass over jumps with suffix sums and one correction vector
    Eigen::VectorXd suffix = Eigen::VectorXd::Zero(E);
    Eigen::VectorXd correction = Eigen::VectorXd::Zero(E);
    for (int k = T - 1; k >= 1; --k) {
      suffix += resid.row(k).transpose();
      const double nk = static_cast<double>(T - k);  // rows t >= k
      const Eigen::VectorXd g = suffix - correction + nk * jumps.row(k).transpose();
      const double gn = g.norm();
      Eigen::VectorXd next = Eigen::VectorXd::Zero(E);
      if (gn > lam / 2) next = (1.0 - lam / (2.0 * gn)) * g / nk;
      const Eigen::VectorXd delta = next - jumps.row(k).transpose();
      const double dmax = delta.cwiseAbs().maxCoeff();
      if (dmax > 0) {
        correction += nk * delta;
        jumps.row(k) = next.transpose();
        max_change = std::max(max_change, dmax);
      }
    }
    if (max_change < kTol) break;
  }

  rebuild();
  out.piecewise = u;
  out.rss = resid.squaredNorm();
  double pen = 0;
  for (int t = 1; t < T; ++t) {
    const double jn = jumps.row(t).norm() / E;  // the scaled group norm
    pen += jn;
    if (jn > 1e-8) out.change_points.push_back(t);
  }
  out.objective = out.rss + lambda_u * pen;
  return out;
}

std::vector<double> default_lambda_u_grid(const Eigen::MatrixXd& series) {
  const int T = static_cast<int>(series.rows());
  const int E = static_cast<int>(series.cols());
  std::vector<double> diffs;
  diffs.reserve(static_cast<std::size_t>(std::max(0, T - 1)) * E);
  for (int t = 1; t < T; ++t)
    for (int e = 0; e < E; ++e) diffs.push_back(std::abs(series(t, e) - series(t - 1, e)));
  double sigma = 0.1;
  if (!diffs.empty()) {
    std::nth_element(diffs.begin(), diffs.begin() + diffs.size() / 2, diffs.end());
    sigma = diffs[diffs.size() / 2] / std::sqrt(2.0);
  }
  if (sigma <= 0) sigma = 1e-3;
  const double base = sigma * std::sqrt(static_cast<double>(T));
  return {0.5 * base, 1 * base, 2 * base, 4 * base, 8 * base, 16 * base};
}

LambdaSelection select_lambda_u(const Eigen::MatrixXd& series, const std::vector<double>& grid) {
  if (grid.empty()) throw std::invalid_argument("lambda_u grid is empty");
  for (std::size_t g = 1; g < grid.size(); ++g)
    if (grid[g] <= grid[g - 1]) throw std::invalid_argument("lambda_u grid must be strictly increasing");
  const int T = static_cast<int>(series.rows());
  const int E = static_cast<int>(series.cols());
  const double e_eff = E == 1 ? 1.0 : std::log(static_cast<double>(E)) + 1.0;

  LambdaSelection sel;
  double best_bic = std::numeric_limits<double>::infinity();
  int prev_count = std::numeric_limits<int>::max();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    TvSegmentation seg = tv_segment(series, grid[g]);
    const int ncp = static_cast<int>(seg.change_points.size());
    sel.cp_counts.push_back(ncp);
    if (ncp > prev_count) sel.monotone = false;
    prev_count = ncp;
    const double bic = T * std::log(std::max(seg.rss, 1e-300) / T) +
                       ncp * std::log(static_cast<double>(T)) * e_eff;
    if (bic < best_bic) {
      best_bic = bic;
      sel.lambda_u = grid[g];
      sel.change_points = seg.change_points;
      sel.piecewise = seg.piecewise;
    }
  }
  if (!sel.monotone)
    log_warn("change-point count was not monotone along the lambda_u grid");
  return sel;
}

std::vector<int> cluster_changepoints_one(const std::vector<std::vector<int>>& member_cps,
                                          int cluster_size, double freq_threshold, int window) {
  if (freq_threshold <= 0 || freq_threshold > 1)
    throw std::invalid_argument("freq_threshold must be in (0, 1]");
  if (window < 0) throw std::invalid_argument("window must be >= 0");
  if (cluster_size <= 0) return {};

  std::vector<std::pair<int, int>> pooled;  // (scan, member)
  for (std::size_t m = 0; m < member_cps.size(); ++m)
    for (int cp : member_cps[m]) pooled.emplace_back(cp, static_cast<int>(m));
  std::sort(pooled.begin(), pooled.end());

  std::vector<int> result;
  std::size_t k = 0;
  while (k < pooled.size()) {
    std::size_t end = k + 1;
    while (end < pooled.size() && pooled[end].first - pooled[end - 1].first <= window) ++end;
    std::vector<int> scans;
    std::vector<bool> member_seen(member_cps.size(), false);
    int support = 0;
    for (std::size_t m = k; m < end; ++m) {
      scans.push_back(pooled[m].first);
      if (!member_seen[pooled[m].second]) {
        member_seen[pooled[m].second] = true;
        ++support;
      }
    }
    if (static_cast<double>(support) / cluster_size >= freq_threshold)
      result.push_back(scans[(scans.size() - 1) / 2]);  // lower median
    k = end;
  }
  return result;
}

std::map<int, std::vector<int>> cluster_changepoints(
    const std::vector<std::vector<int>>& per_subject_cps, const ClusterAssignment& assignment,
    double freq_threshold, int window) {
  assignment.validate();
  if (per_subject_cps.size() != assignment.labels.size())
    throw std::invalid_argument("change-point list must match the assignment");
  std::map<int, std::vector<int>> out;
  for (int k = 0; k < assignment.K; ++k) {
    std::vector<std::vector<int>> members;
    for (std::size_t i = 0; i < assignment.labels.size(); ++i)
      if (assignment.labels[i] == k) members.push_back(per_subject_cps[i]);
    out[k] = cluster_changepoints_one(members, static_cast<int>(members.size()), freq_threshold,
                                      window);
  }
  return out;
}

std::string serialize_changepoint_report(const ChangePointReport& report) {
  std::ostringstream os;
  os << "bpmm-changepoints v1\n";
  os.precision(12);
  os << "lambda_u " << report.lambda_u_used << "\n";
  for (std::size_t i = 0; i < report.per_subject.size(); ++i) {
    os << "subject " << report.subject_ids[i];
    for (int cp : report.per_subject[i]) os << " " << cp + 1;
    os << "\n";
  }
  for (const auto& [k, cps] : report.cluster_level) {
    os << "cluster " << k + 1;
    for (int cp : cps) os << " " << cp + 1;
    os << "\n";
  }
  return os.str();
}

ChangePointReport parse_changepoint_report(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != "bpmm-changepoints v1")
    throw std::runtime_error("unrecognized change-point report header");
  ChangePointReport report;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "lambda_u") {
      ls >> report.lambda_u_used;
    } else if (tag == "subject") {
      std::string id;
      ls >> id;
      report.subject_ids.push_back(id);
      std::vector<int> cps;
      int cp;
      while (ls >> cp) cps.push_back(cp - 1);
      report.per_subject.push_back(std::move(cps));
    } else if (tag == "cluster") {
      int k;
      ls >> k;
      std::vector<int> cps;
      int cp;
      while (ls >> cp) cps.push_back(cp - 1);
      report.cluster_level[k - 1] = std::move(cps);
    } else {
      throw std::runtime_error("unrecognized change-point report line: " + line);
    }
  }
  return report;
}

}  // namespace bpmm
