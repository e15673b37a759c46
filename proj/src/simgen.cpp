#include "bpmm/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "bpmm/logging.hpp"
#include "bpmm/rng.hpp"
#include "bpmm/transforms.hpp"

namespace bpmm {

void SimConfig::validate() const {
  if (n_subjects < 1 || n_nodes < 2 || n_scans < 8) throw std::runtime_error("bad sim dimensions");
  if (cluster_sizes.empty() || cps_per_cluster.size() != cluster_sizes.size())
    throw std::runtime_error("cluster size and change-point lists must align");
  int total = 0;
  for (int s : cluster_sizes) {
    if (s < 1) throw std::runtime_error("cluster sizes must be positive");
    total += s;
  }
  if (total != n_subjects)
    throw std::runtime_error("cluster sizes sum to " + std::to_string(total) + ", expected " +
                             std::to_string(n_subjects));
  for (int c : cps_per_cluster) {
    if (c < 0) throw std::runtime_error("change-point counts must be >= 0");
    if (c >= n_scans / 4) throw std::runtime_error("too many change points for the scan count");
  }
  if (n_spurious < 0 || n_spurious > 8) throw std::runtime_error("n_spurious must be in 0..8");
  if (cp_jitter < 0 || min_segment < 2) throw std::runtime_error("bad segment parameters");
  if (obs_model == ObsModel::VAR && std::abs(ar_coeff) >= 1)
    throw std::runtime_error("ar_coeff must be inside the unit circle");
}

int SimTruth::phase_of(int subject, int scan) const {
  const auto& c = cps[subject];
  return static_cast<int>(std::upper_bound(c.begin(), c.end(), scan) - c.begin());
}

const Eigen::MatrixXd& SimTruth::omega_at(int subject, int scan) const {
  return phase_precisions[subject][phase_of(subject, scan)];
}

const Eigen::MatrixXi& SimTruth::adjacency_at(int subject, int scan) const {
  return phase_adjacency[labels[subject]][phase_of(subject, scan)];
}

ClusterAssignment SimTruth::assignment() const {
  ClusterAssignment a;
  a.labels = labels;
  a.K = K;
  return a;
}

DynamicNetworkSet SimTruth::to_network_set() const {
  DynamicNetworkSet nets;
  nets.kind = NetworkKind::Precision;
  nets.n_nodes = phase_precisions.empty() ? 0 : static_cast<int>(phase_precisions[0][0].rows());
  nets.matrices.resize(phase_precisions.size());
  for (std::size_t i = 0; i < phase_precisions.size(); ++i) {
    nets.matrices[i].reserve(n_scans);
    for (int t = 0; t < n_scans; ++t)
      nets.matrices[i].push_back(omega_at(static_cast<int>(i), t));
  }
  return nets;
}

Eigen::MatrixXi erdos_renyi_graph(int V, double p, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXi adj = Eigen::MatrixXi::Zero(V, V);
  for (int j = 0; j < V; ++j)
    for (int l = j + 1; l < V; ++l)
      if (rng.uniform() < p) adj(j, l) = adj(l, j) = 1;
  return adj;
}

Eigen::MatrixXi watts_strogatz_graph(int V, int k, double rewire_p, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXi adj = Eigen::MatrixXi::Zero(V, V);
  const int half = std::max(1, k / 2);
  for (int j = 0; j < V; ++j)
    for (int d = 1; d <= half; ++d) {
      const int l = (j + d) % V;
      adj(j, l) = adj(l, j) = 1;
    }
  for (int j = 0; j < V; ++j)
    for (int d = 1; d <= half; ++d) {
      const int l = (j + d) % V;
      if (rng.uniform() >= rewire_p) continue;
      // rewire the far endpoint to a fresh node
      int cand = static_cast<int>(rng.uniform_int(V));
      int tries = 0;
      while ((cand == j || adj(j, cand) != 0) && tries < 4 * V) {
        cand = static_cast<int>(rng.uniform_int(V));
        ++tries;
      }
      if (cand == j || adj(j, cand) != 0) continue;  // dense row, keep the lattice edge
      adj(j, l) = adj(l, j) = 0;
      adj(j, cand) = adj(cand, j) = 1;
    }
  return adj;
}

Eigen::MatrixXi barabasi_albert_graph(int V, int m, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXi adj = Eigen::MatrixXi::Zero(V, V);
  if (V < 2) return adj;
  adj(0, 1) = adj(1, 0) = 1;
  std::vector<int> degree(V, 0);
  degree[0] = degree[1] = 1;
  int degree_total = 2;
  for (int v = 2; v < V; ++v) {
    const int links = std::min(m, v);
    for (int e = 0; e < links; ++e) {
      int target = -1;
      int tries = 0;
      do {
        double u = rng.uniform() * degree_total;
        double acc = 0;
        for (int w = 0; w < v; ++w) {
          acc += degree[w];
          if (acc >= u) {
            target = w;
            break;
          }
        }
        ++tries;
      } while ((target < 0 || adj(v, target) != 0) && tries < 8 * V);
      if (target < 0 || adj(v, target) != 0) {
        // fall back to the lowest-degree unlinked node
        for (int w = 0; w < v; ++w)
          if (adj(v, w) == 0 && w != v) {
            target = w;
            break;
          }
      }
      adj(v, target) = adj(target, v) = 1;
      ++degree[v];
      ++degree[target];
      degree_total += 2;
    }
  }
  return adj;
}

namespace {

Eigen::MatrixXi draw_support(const SimConfig& cfg, std::uint64_t seed) {
  switch (cfg.topology) {
    case Topology::ErdosRenyi: {
      const double p = cfg.er_edge_prob > 0 ? cfg.er_edge_prob : 4.0 / (cfg.n_nodes - 1);
      return erdos_renyi_graph(cfg.n_nodes, p, seed);
    }
    case Topology::SmallWorld:
      return watts_strogatz_graph(cfg.n_nodes, cfg.ws_neighbors, cfg.ws_rewire, seed);
    case Topology::ScaleFree:
      return barabasi_albert_graph(cfg.n_nodes, cfg.ba_edges_per_node, seed);
  }
  throw std::logic_error("unreachable");
}

// uniform edge weights on the support; diagonal = 1 + row absolute sum,
// which makes the matrix strictly diagonally dominant hence positive definite
Eigen::MatrixXd precision_from_support(const Eigen::MatrixXi& support, Rng& rng) {
  const int V = static_cast<int>(support.rows());
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(V, V);
  for (int j = 0; j < V; ++j)
    for (int l = j + 1; l < V; ++l)
      if (support(j, l) != 0) omega(j, l) = omega(l, j) = rng.uniform(-1.0, 1.0);
  for (int j = 0; j < V; ++j) omega(j, j) = 1.0 + omega.row(j).cwiseAbs().sum();
  return omega;
}

}  // namespace

SimResult generate(const SimConfig& cfg) {
  cfg.validate();
  const int N = cfg.n_subjects, V = cfg.n_nodes, T = cfg.n_scans;
  const int K = static_cast<int>(cfg.cluster_sizes.size());

  SimResult out;
  SimTruth& truth = out.truth;
  truth.K = K;
  truth.n_scans = T;
  truth.labels.resize(N);
  {
    int i = 0;
    for (int k = 0; k < K; ++k)
      for (int s = 0; s < cfg.cluster_sizes[k]; ++s) truth.labels[i++] = k;
  }

  // cluster-common anchors, evenly spaced so jitter keeps segments legal
  std::vector<std::vector<int>> anchors(K);
  for (int k = 0; k < K; ++k) {
    const int c = cfg.cps_per_cluster[k];
    for (int a = 1; a <= c; ++a)
      anchors[k].push_back(static_cast<int>(std::lround(static_cast<double>(T) * a / (c + 1))));
    for (std::size_t a = 0; a < anchors[k].size(); ++a) {
      const int lo = a == 0 ? 0 : anchors[k][a - 1];
      const int hi = a + 1 < anchors[k].size() ? anchors[k][a + 1] : T;
      if (anchors[k][a] - lo < cfg.min_segment + cfg.cp_jitter ||
          hi - anchors[k][a] < cfg.min_segment + cfg.cp_jitter)
        throw std::runtime_error("scan count too small for the requested change points");
    }
  }

  // per-cluster per-phase supports; any two clusters must differ somewhere
  truth.phase_adjacency.resize(K);
  for (int k = 0; k < K; ++k) {
    const int phases = cfg.cps_per_cluster[k] + 1;
    truth.phase_adjacency[k].resize(phases);
    for (int p = 0; p < phases; ++p) {
      for (int attempt = 0; attempt < 100; ++attempt) {
        Eigen::MatrixXi adj = draw_support(cfg, derive_seed(cfg.seed, 0x5bULL + k, p, attempt));
        bool clash = false;
        for (int k2 = 0; k2 < k && !clash; ++k2)
          if (p < static_cast<int>(truth.phase_adjacency[k2].size()) &&
              truth.phase_adjacency[k2][p] == adj)
            clash = true;
        if (!clash) {
          truth.phase_adjacency[k][p] = std::move(adj);
          break;
        }
        if (attempt == 99) throw std::runtime_error("could not draw distinct cluster supports");
      }
    }
  }

  // subjects: jittered change points, per-phase weights, observations
  truth.cps.resize(N);
  truth.phase_precisions.resize(N);
  out.panel.data.resize(N);
  out.panel.subject_ids.resize(N);

  const int q_informative = K <= 4 ? 2 : K;
  Eigen::MatrixXd covariates(N, q_informative + cfg.n_spurious);
  for (int i = 0; i < N; ++i) {
    const int k = truth.labels[i];
    if (K <= 4) {
      covariates(i, 0) = (k >> 1) & 1;
      covariates(i, 1) = k & 1;
    } else {
      for (int c = 0; c < K; ++c) covariates(i, c) = c == k ? 1.0 : 0.0;
    }
  }

  for (int i = 0; i < N; ++i) {
    const int k = truth.labels[i];
    Rng rng(derive_seed(cfg.seed, 0x50bULL, i));
    // change points
    truth.cps[i].clear();
    for (int a : anchors[k]) {
      const int jitter =
          cfg.cp_jitter > 0 ? static_cast<int>(rng.uniform_int(2 * cfg.cp_jitter + 1)) - cfg.cp_jitter
                            : 0;
      truth.cps[i].push_back(a + jitter);
    }
    // per-phase precision with subject-specific weights on the cluster support
    const int phases = cfg.cps_per_cluster[k] + 1;
    truth.phase_precisions[i].resize(phases);
    std::vector<Eigen::LLT<Eigen::MatrixXd>> llts(phases);
    for (int p = 0; p < phases; ++p) {
      truth.phase_precisions[i][p] = precision_from_support(truth.phase_adjacency[k][p], rng);
      llts[p].compute(truth.phase_precisions[i][p]);
      if (llts[p].info() != Eigen::Success)
        throw std::logic_error("generated precision matrix is not positive definite");
    }
    // observations
    Eigen::MatrixXd Y(V, T);
    Eigen::VectorXd z(V), innov(V);
    for (int t = 0; t < T; ++t) {
      const int p = truth.phase_of(i, t);
      for (int v = 0; v < V; ++v) z(v) = rng.normal();
      // L^{-T} z has covariance omega^{-1}
      innov = llts[p].matrixU().solve(z);
      if (cfg.obs_model == ObsModel::GGM || t == 0)
        Y.col(t) = innov;
      else
        Y.col(t) = cfg.ar_coeff * Y.col(t - 1) + innov;
    }
    out.panel.data[i] = std::move(Y);
    out.panel.subject_ids[i] = "s" + std::to_string(i + 1);
    // spurious covariates: alternate uniform / standard normal columns
    for (int c = 0; c < cfg.n_spurious; ++c)
      covariates(i, q_informative + c) = (c % 2 == 0) ? rng.uniform() : rng.normal();
  }

  out.panel.covariates = covariates;
  truth.covariates = covariates;
  out.panel.validate();
  return out;
}

namespace {

struct ArFit {
  int order = 0;
  Eigen::VectorXd coef;
  bool unit_root = false;
};

// Levinson-Durbin over sample autocovariances; order by T ln(sigma2) + p ln(T)
ArFit select_ar(const Eigen::VectorXd& y, int max_order) {
  const int T = static_cast<int>(y.size());
  ArFit fit;
  Eigen::VectorXd acov = Eigen::VectorXd::Zero(max_order + 1);
  const double mean = y.mean();
  for (int lag = 0; lag <= max_order; ++lag) {
    double s = 0;
    for (int t = lag; t < T; ++t) s += (y(t) - mean) * (y(t - lag) - mean);
    acov(lag) = s / T;
  }
  if (acov(0) <= 0) return fit;

  double best_score = T * std::log(acov(0));
  int best_order = 0;
  Eigen::VectorXd best_coef;

  Eigen::VectorXd phi = Eigen::VectorXd::Zero(max_order);
  Eigen::VectorXd prev = phi;
  double err = acov(0);
  for (int p = 1; p <= max_order; ++p) {
    double num = acov(p);
    for (int k = 1; k < p; ++k) num -= prev(k - 1) * acov(p - k);
    const double reflect = num / err;
    phi.setZero();
    phi(p - 1) = reflect;
    for (int k = 1; k < p; ++k) phi(k - 1) = prev(k - 1) - reflect * prev(p - k - 1);
    err *= (1 - reflect * reflect);
    if (err <= 0) break;
    const double score = T * std::log(err) + p * std::log(static_cast<double>(T));
    if (score < best_score) {
      best_score = score;
      best_order = p;
      best_coef = phi.head(p);
    }
    prev = phi;
  }
  fit.order = best_order;
  fit.coef = best_coef;
  if (best_order > 0) {
    // companion-matrix spectral radius for the unit-root guard
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(best_order, best_order);
    comp.row(0) = best_coef.transpose();
    for (int r = 1; r < best_order; ++r) comp(r, r - 1) = 1.0;
    const Eigen::VectorXcd ev = Eigen::EigenSolver<Eigen::MatrixXd>(comp, false).eigenvalues();
    for (int r = 0; r < best_order; ++r)
      if (std::abs(ev(r)) >= 1.0 - 1e-3) fit.unit_root = true;
  }
  return fit;
}

}  // namespace

PrewhitenResult prewhiten(const PanelDataset& panel, int max_ar_order) {
  if (max_ar_order < 0) throw std::invalid_argument("max_ar_order must be >= 0");
  if (panel.n_scans() <= 3 * max_ar_order)
    throw std::invalid_argument("need T > 3 * max_ar_order for prewhitening");
  PrewhitenResult out;
  out.panel = panel;
  const int N = panel.n_subjects(), V = panel.n_nodes(), T = panel.n_scans();
  out.orders.assign(static_cast<std::size_t>(N) * V, 0);
  for (int i = 0; i < N; ++i) {
    for (int v = 0; v < V; ++v) {
      const Eigen::VectorXd y = panel.data[i].row(v).transpose();
      const ArFit fit = select_ar(y, max_ar_order);
      Eigen::VectorXd resid = Eigen::VectorXd::Zero(T);
      if (fit.unit_root) {
        ++out.differenced_series;
        log_warn("near-unit-root series at subject " + std::to_string(i + 1) + ", node " +
                 std::to_string(v + 1) + "; first-differencing");
        for (int t = 1; t < T; ++t) resid(t) = y(t) - y(t - 1);
        out.orders[static_cast<std::size_t>(i) * V + v] = -1;
      } else {
        const int p = fit.order;
        for (int t = p; t < T; ++t) {
          double pred = 0;
          for (int k = 1; k <= p; ++k) pred += fit.coef(k - 1) * y(t - k);
          resid(t) = y(t) - pred;
        }
        out.orders[static_cast<std::size_t>(i) * V + v] = p;
      }
      out.panel.data[i].row(v) = resid.transpose();
    }
  }
  return out;
}

DynamicNetworkSet sliding_window_baseline(const PanelDataset& panel, int window) {
  const int N = panel.n_subjects(), V = panel.n_nodes(), T = panel.n_scans();
  if (window % 2 == 0 || window < 3 || window > T)
    throw std::invalid_argument("window must be odd and within [3, T]");
  const int E = n_edges(V);
  const int half = window / 2;

  DynamicNetworkSet nets;
  nets.kind = NetworkKind::PairwiseFisherZ;
  nets.n_nodes = V;
  nets.edges.assign(N, Eigen::MatrixXd::Zero(T, E));

  for (int i = 0; i < N; ++i) {
    const auto& Y = panel.data[i];
    // prefix sums over scans for x, x^2 and pairwise products
    Eigen::MatrixXd ps = Eigen::MatrixXd::Zero(V, T + 1);
    Eigen::MatrixXd ps2 = Eigen::MatrixXd::Zero(V, T + 1);
    for (int v = 0; v < V; ++v)
      for (int t = 0; t < T; ++t) {
        ps(v, t + 1) = ps(v, t) + Y(v, t);
        ps2(v, t + 1) = ps2(v, t) + Y(v, t) * Y(v, t);
      }
    for (int j = 0; j < V; ++j) {
      for (int l = j + 1; l < V; ++l) {
        Eigen::VectorXd pxy = Eigen::VectorXd::Zero(T + 1);
        for (int t = 0; t < T; ++t) pxy(t + 1) = pxy(t) + Y(j, t) * Y(l, t);
        const int e = edge_index(j, l, V);
        for (int t = 0; t < T; ++t) {
          int lo = std::max(0, std::min(t - half, T - window));
          const int hi = lo + window;  // clamped full-width window [lo, hi)
          const double n = window;
          const double sj = ps(j, hi) - ps(j, lo), sl = ps(l, hi) - ps(l, lo);
          const double sjj = ps2(j, hi) - ps2(j, lo), sll = ps2(l, hi) - ps2(l, lo);
          const double sjl = pxy(hi) - pxy(lo);
          const double cjj = sjj - sj * sj / n, cll = sll - sl * sl / n;
          const double cjl = sjl - sj * sl / n;
          const double denom = std::sqrt(cjj * cll);
          nets.edges[i](t, e) = fisher_transform(denom > 0 ? cjl / denom : 0.0);
        }
      }
    }
  }
  return nets;
}

}  // namespace bpmm
