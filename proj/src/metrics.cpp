#include "bpmm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bpmm/kmeans.hpp"
#include "bpmm/logging.hpp"
#include "bpmm/transforms.hpp"

namespace bpmm {

Eigen::MatrixXd build_similarity(const std::vector<Eigen::MatrixXi>& labels) {
  const int N = static_cast<int>(labels.size());
  if (N == 0) throw std::invalid_argument("no label matrices");
  const Eigen::Index T = labels[0].rows();
  const Eigen::Index U = labels[0].cols();
  for (const auto& m : labels)
    if (m.rows() != T || m.cols() != U) throw std::invalid_argument("label shape mismatch");

  Eigen::MatrixXd sim = Eigen::MatrixXd::Identity(N, N);
  const double cells = static_cast<double>(T) * static_cast<double>(U);
  for (int a = 0; a < N; ++a)
    for (int b = a + 1; b < N; ++b) {
      const double agree = (labels[a].array() == labels[b].array()).count();
      sim(a, b) = sim(b, a) = agree / cells;
    }
  return sim;
}

ClusterAssignment kmeans_subgroups(const Eigen::MatrixXd& similarity, int K, std::uint64_t seed,
                                   int k_max, bool* degenerate) {
  const int N = static_cast<int>(similarity.rows());
  if (similarity.cols() != N) throw std::invalid_argument("similarity must be square");
  if (degenerate) *degenerate = false;

  // identical rows carry no separation signal
  bool all_same = true;
  for (int i = 1; i < N && all_same; ++i)
    all_same = (similarity.row(i) - similarity.row(0)).cwiseAbs().maxCoeff() < 1e-12;
  if (all_same) {
    log_warn("similarity matrix is degenerate; returning a single subgroup");
    if (degenerate) *degenerate = true;
    ClusterAssignment out;
    out.K = 1;
    out.labels.assign(N, 0);
    return out;
  }

  if (K <= 0) {
    // elbow: maximum discrete curvature of the WCSS curve over 1..k_max
    if (k_max <= 0) k_max = std::min(8, N - 1);
    k_max = std::min(k_max, N - 1);
    std::vector<double> wcss(k_max + 1, 0.0);
    for (int k = 1; k <= k_max; ++k) wcss[k] = kmeans(similarity, k, 50, seed).wcss;
    if (k_max <= 2) {
      K = k_max;
    } else {
      double best = -std::numeric_limits<double>::infinity();
      K = 2;
      for (int k = 2; k <= k_max - 1; ++k) {
        const double curv = wcss[k - 1] - 2 * wcss[k] + wcss[k + 1];
        if (curv > best) {
          best = curv;
          K = k;
        }
      }
    }
  }
  K = std::min(K, N);
  KMeansResult km = kmeans(similarity, K, 50, seed);
  ClusterAssignment out;
  out.K = K;
  out.labels = km.labels;
  // k-means can leave a center empty; compact the label space
  std::vector<int> remap(K, -1);
  int next = 0;
  for (int& l : out.labels) {
    if (remap[l] < 0) remap[l] = next++;
    l = remap[l];
  }
  out.K = next;
  out.validate();
  return out;
}

std::vector<int> hungarian(const Eigen::MatrixXd& cost) {
  // Jonker-Volgenant style shortest augmenting path, O(n^3).
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw std::invalid_argument("cost matrix must be square");
  std::vector<double> u(n + 1, 0), v(n + 1, 0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
    std::vector<char> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = std::numeric_limits<double>::infinity();
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> assignment(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) assignment[p[j] - 1] = j - 1;
  return assignment;
}

namespace {

Eigen::MatrixXd contingency(const ClusterAssignment& a, const ClusterAssignment& b) {
  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(a.K, b.K);
  for (std::size_t i = 0; i < a.labels.size(); ++i) table(a.labels[i], b.labels[i]) += 1;
  return table;
}

}  // namespace

double clustering_error(const ClusterAssignment& est, const ClusterAssignment& truth) {
  est.validate();
  truth.validate();
  if (est.labels.size() != truth.labels.size())
    throw std::invalid_argument("clusterings must cover the same subjects");
  const int n = static_cast<int>(est.labels.size());
  const Eigen::MatrixXd table = contingency(est, truth);
  const int K = std::max(est.K, truth.K);
  Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(K, K);
  // maximize agreement = minimize (n - agreement)
  for (int a = 0; a < est.K; ++a)
    for (int b = 0; b < truth.K; ++b) cost(a, b) = -table(a, b);
  const std::vector<int> match = hungarian(cost);
  double agree = 0;
  for (int a = 0; a < est.K; ++a)
    if (match[a] < truth.K) agree += table(a, match[a]);
  return 1.0 - agree / n;
}

double variation_of_information(const ClusterAssignment& est, const ClusterAssignment& truth) {
  est.validate();
  truth.validate();
  if (est.labels.size() != truth.labels.size())
    throw std::invalid_argument("clusterings must cover the same subjects");
  const double n = static_cast<double>(est.labels.size());
  const Eigen::MatrixXd table = contingency(est, truth);
  const Eigen::VectorXd ra = table.rowwise().sum();
  const Eigen::VectorXd rb = table.colwise().sum();
  double h_a = 0, h_b = 0, mi = 0;
  for (int a = 0; a < est.K; ++a)
    if (ra(a) > 0) h_a -= ra(a) / n * std::log(ra(a) / n);
  for (int b = 0; b < truth.K; ++b)
    if (rb(b) > 0) h_b -= rb(b) / n * std::log(rb(b) / n);
  for (int a = 0; a < est.K; ++a)
    for (int b = 0; b < truth.K; ++b)
      if (table(a, b) > 0)
        mi += table(a, b) / n * std::log(table(a, b) * n / (ra(a) * rb(b)));
  return std::max(0.0, h_a + h_b - 2 * mi);
}

double f1_score(const Eigen::MatrixXd& est_partial, const Eigen::MatrixXi& true_adjacency,
                double threshold) {
  const int V = static_cast<int>(est_partial.rows());
  if (est_partial.cols() != V || true_adjacency.rows() != V || true_adjacency.cols() != V)
    throw std::invalid_argument("matrix shape mismatch");
  int tp = 0, fp = 0, fn = 0;
  for (int j = 0; j < V; ++j)
    for (int l = j + 1; l < V; ++l) {
      const bool est = std::abs(est_partial(j, l)) > threshold;
      const bool truth = true_adjacency(j, l) != 0;
      if (est && truth) ++tp;
      else if (est && !truth) ++fp;
      else if (!est && truth) ++fn;
    }
  if (tp == 0) return (fp == 0 && fn == 0) ? 1.0 : 0.0;
  const double precision = static_cast<double>(tp) / (tp + fp);
  const double recall = static_cast<double>(tp) / (tp + fn);
  return 2 * precision * recall / (precision + recall);
}

std::pair<double, int> cp_match_score(const std::vector<int>& est_cps,
                                      const std::vector<int>& true_cps, int tolerance) {
  std::size_t e = 0;
  int matched = 0;
  for (int tcp : true_cps) {
    while (e < est_cps.size() && est_cps[e] < tcp - tolerance) ++e;  // too early for any later true point
    if (e < est_cps.size() && std::abs(est_cps[e] - tcp) <= tolerance) {
      ++matched;
      ++e;
    }
  }
  const int fp = static_cast<int>(est_cps.size()) - matched;
  const double sens = true_cps.empty() ? 1.0 : static_cast<double>(matched) / true_cps.size();
  return {sens, fp};
}

std::vector<Eigen::MatrixXd> to_correlations(const DynamicNetworkSet& nets) {
  const int N = nets.n_subjects();
  const int T = nets.n_scans();
  std::vector<Eigen::MatrixXd> out(N);
  if (nets.kind == NetworkKind::PairwiseFisherZ) {
    for (int i = 0; i < N; ++i) out[i] = nets.edges[i].array().tanh();
    return out;
  }
  const int V = nets.n_nodes;
  const int E = n_edges(V);
  for (int i = 0; i < N; ++i) {
    out[i].resize(T, E);
    for (int t = 0; t < T; ++t) {
      Eigen::MatrixXd corr;
      if (nets.kind == NetworkKind::Precision) {
        const Eigen::MatrixXd cov =
            nets.matrices[i][t].llt().solve(Eigen::MatrixXd::Identity(V, V));
        corr.resize(V, V);
        for (int j = 0; j < V; ++j)
          for (int l = 0; l < V; ++l) corr(j, l) = cov(j, l) / std::sqrt(cov(j, j) * cov(l, l));
      } else {
        corr = nets.matrices[i][t];  // partial correlations compared directly
      }
      for (int j = 0; j < V; ++j)
        for (int l = j + 1; l < V; ++l) out[i](t, edge_index(j, l, V)) = corr(j, l);
    }
  }
  return out;
}

double mse_correlations(const DynamicNetworkSet& est, const DynamicNetworkSet& truth) {
  const auto a = to_correlations(est);
  const auto b = to_correlations(truth);
  if (a.size() != b.size()) throw std::invalid_argument("subject count mismatch");
  double acc = 0;
  std::int64_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].rows() != b[i].rows() || a[i].cols() != b[i].cols())
      throw std::invalid_argument("network shape mismatch");
    acc += (a[i] - b[i]).squaredNorm();
    n += a[i].size();
  }
  return acc / n;
}

std::string MetricReport::to_key_value() const {
  std::ostringstream os;
  os.precision(12);
  os << "ce=" << ce << "\n"
     << "vi=" << vi << "\n"
     << "f1=" << f1 << "\n"
     << "mse=" << mse << "\n"
     << "cp_sensitivity=" << cp_sensitivity << "\n"
     << "cp_false_positives=" << cp_false_positives << "\n";
  return os.str();
}

std::string MetricReport::to_json() const {
  std::ostringstream os;
  os.precision(12);
  os << "{\n  \"ce\": " << ce << ",\n  \"vi\": " << vi << ",\n  \"f1\": " << f1
     << ",\n  \"mse\": " << mse << ",\n  \"cp_sensitivity\": " << cp_sensitivity
     << ",\n  \"cp_false_positives\": " << cp_false_positives << "\n}\n";
  return os.str();
}

}  // namespace bpmm
