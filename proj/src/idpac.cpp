#include "bpmm/idpac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bpmm/kmeans.hpp"
#include "bpmm/lasso.hpp"
#include "bpmm/logging.hpp"
#include "bpmm/parallel.hpp"
#include "bpmm/rng.hpp"
#include "bpmm/transforms.hpp"

namespace bpmm {

namespace {

// Bivariate zero-mean unit-marginal Gaussian log likelihood in the Fisher-z
// parameter, additive constants dropped:
//   log cosh z - (Q (1 + cosh 2z) / 2 - P sinh 2z) / (2 sigma_y2)
// with Q = yj^2 + yl^2 and P = yj yl.
double bivariate_term(double z, double yj, double yl, double sigma_y2) {
  const double Q = yj * yj + yl * yl, P = yj * yl;
  const double c2 = std::cosh(2 * z), s2 = std::sinh(2 * z);
  return std::log(std::cosh(z)) - (0.5 * Q * (1 + c2) - P * s2) / (2 * sigma_y2);
}

}  // namespace

double fisherz_conditional_logpost(double z, double yj, double yl, const Eigen::VectorXd& psi,
                                   const Eigen::VectorXd& atoms_t, const Eigen::VectorXd& sigma2,
                                   double sigma_y2) {
  double v = bivariate_term(z, yj, yl, sigma_y2);
  for (int h = 0; h < psi.size(); ++h) {
    const double r = z - atoms_t(h);
    v -= 0.5 * psi(h) * r * r / sigma2(h);
  }
  return v;
}

void fisherz_derivatives(double z, double yj, double yl, const Eigen::VectorXd& psi,
                         const Eigen::VectorXd& atoms_t, const Eigen::VectorXd& sigma2,
                         double sigma_y2, double& a1, double& a2) {
  const double Q = yj * yj + yl * yl, P = yj * yl;
  const double th = std::tanh(z);
  const double c2 = std::cosh(2 * z), s2 = std::sinh(2 * z);
  a1 = th - (0.5 * Q * s2 - P * c2) / sigma_y2;
  a2 = (1 - th * th) - (Q * c2 - 2 * P * s2) / (2 * sigma_y2);
  for (int h = 0; h < psi.size(); ++h) {
    a1 -= psi(h) * (z - atoms_t(h)) / sigma2(h);
    a2 -= psi(h) / sigma2(h);
  }
}

double newton_update_fisherz(double z, double yj, double yl, const Eigen::VectorXd& psi,
                             const Eigen::VectorXd& atoms_t, const Eigen::VectorXd& sigma2,
                             double sigma_y2) {
  constexpr int kMaxIters = 50;
  for (int it = 0; it < kMaxIters; ++it) {
    double a1, a2;
    fisherz_derivatives(z, yj, yl, psi, atoms_t, sigma2, sigma_y2, a1, a2);
    double step = (a2 < 0) ? -a1 / a2 : 0.1 * a1;
    if (!std::isfinite(step)) break;
    const double base = fisherz_conditional_logpost(z, yj, yl, psi, atoms_t, sigma2, sigma_y2);
    double cand = z + step;
    int halvings = 0;
    while (halvings < 20 &&
           fisherz_conditional_logpost(cand, yj, yl, psi, atoms_t, sigma2, sigma_y2) < base) {
      step *= 0.5;
      cand = z + step;
      ++halvings;
    }
    if (halvings == 20 &&
        fisherz_conditional_logpost(cand, yj, yl, psi, atoms_t, sigma2, sigma_y2) < base)
      break;  // no improving step in this direction
    z = cand;
    if (std::abs(step) < 1e-3) break;
  }
  return z;
}

Eigen::MatrixXd standardize_columns(const Eigen::MatrixXd& X) {
  Eigen::MatrixXd out = X;
  const int n = static_cast<int>(X.rows());
  if (n < 2) return out;
  for (int c = 0; c < X.cols(); ++c) {
    const double mean = X.col(c).mean();
    out.col(c).array() -= mean;
    const double sd = std::sqrt(out.col(c).squaredNorm() / n);
    if (sd > 1e-12) out.col(c) /= sd;
  }
  return out;
}

Eigen::MatrixXd sliding_window_fisherz(const Eigen::MatrixXd& y_j, const Eigen::MatrixXd& y_l,
                                       int window) {
  const int N = static_cast<int>(y_j.rows());
  const int T = static_cast<int>(y_j.cols());
  const int half = window / 2;
  Eigen::MatrixXd fz(N, T);
  for (int i = 0; i < N; ++i) {
    for (int t = 0; t < T; ++t) {
      const int lo = std::max(0, t - half);
      const int hi = std::min(T - 1, t + half);
      const int n = hi - lo + 1;
      double mj = 0, ml = 0;
      for (int s = lo; s <= hi; ++s) {
        mj += y_j(i, s);
        ml += y_l(i, s);
      }
      mj /= n;
      ml /= n;
      double sjj = 0, sll = 0, sjl = 0;
      for (int s = lo; s <= hi; ++s) {
        const double a = y_j(i, s) - mj, b = y_l(i, s) - ml;
        sjj += a * a;
        sll += b * b;
        sjl += a * b;
      }
      const double denom = std::sqrt(sjj * sll);
      fz(i, t) = fisher_transform(denom > 0 ? sjl / denom : 0.0);
    }
  }
  return fz;
}

namespace {

// Per-scan quantile k-means atoms, components aligned to the previous scan
// by nearest-center matching.
void init_atoms(const Eigen::MatrixXd& fz, int H, MixtureState& state) {
  const int N = static_cast<int>(fz.rows());
  const int T = static_cast<int>(fz.cols());
  state.atoms.resize(H, T);
  std::vector<std::vector<double>> members(H);  // squared residuals per component
  for (int t = 0; t < T; ++t) {
    KMeansResult km = kmeans_1d_quantile(fz.col(t), H);
    Eigen::VectorXd centers(H);
    for (int h = 0; h < H; ++h)
      centers(h) = h < km.centers.rows() ? km.centers(h, 0) : km.centers(km.centers.rows() - 1, 0);
    Eigen::VectorXi order(H);
    if (t == 0) {
      std::vector<int> idx(H);
      for (int h = 0; h < H; ++h) idx[h] = h;
      std::sort(idx.begin(), idx.end(), [&](int a, int b) { return centers(a) < centers(b); });
      for (int h = 0; h < H; ++h) order(h) = idx[h];
    } else {
      // greedy min-distance matching against scan t-1
      std::vector<bool> used(H, false);
      order.setConstant(-1);
      for (int pick = 0; pick < H; ++pick) {
        double best = std::numeric_limits<double>::infinity();
        int bh = -1, bc = -1;
        for (int h = 0; h < H; ++h) {
          if (order(h) >= 0) continue;
          for (int c = 0; c < H; ++c) {
            if (used[c]) continue;
            const double d = std::abs(state.atoms(h, t - 1) - centers(c));
            if (d < best) {
              best = d;
              bh = h;
              bc = c;
            }
          }
        }
        order(bh) = bc;
        used[bc] = true;
      }
    }
    for (int h = 0; h < H; ++h) state.atoms(h, t) = centers(order(h));
    for (int i = 0; i < N; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int arg = 0;
      for (int h = 0; h < H; ++h) {
        const double d = std::abs(fz(i, t) - state.atoms(h, t));
        if (d < best) {
          best = d;
          arg = h;
        }
      }
      const double r = fz(i, t) - state.atoms(arg, t);
      members[arg].push_back(r * r);
    }
  }
  state.sigma2.resize(H);
  double pooled = 0;
  std::size_t n_all = 0;
  for (const auto& m : members) {
    for (double v : m) pooled += v;
    n_all += m.size();
  }
  pooled = n_all ? pooled / n_all : 0.1;
  for (int h = 0; h < H; ++h) {
    double s = 0;
    for (double v : members[h]) s += v;
    state.sigma2(h) = members[h].size() >= 4 ? s / members[h].size() : pooled;
    state.sigma2(h) = std::max(state.sigma2(h), 1e-4);
  }
}

struct TraceParts {
  double base = 0;                 // penalty-free part + sigma2 priors + beta priors
  Eigen::VectorXd tv;              // per-component total variation of the atoms
  double value(const Eigen::VectorXd& lambda) const { return base - lambda.dot(tv); }
};

TraceParts observed_parts(const Eigen::MatrixXd& fz, const MixtureState& state,
                          const Eigen::MatrixXd& y_j, const Eigen::MatrixXd& y_l,
                          const Eigen::MatrixXd& X, const HyperParams& hp) {
  const int N = static_cast<int>(fz.rows());
  const int T = static_cast<int>(fz.cols());
  const int H = state.H;
  TraceParts parts;
  Eigen::VectorXd logw = Eigen::VectorXd::Constant(H, -std::log(double(H)));
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < N; ++i) {
      if (!hp.covariate_naive) logw = log_mixture_weights(X.row(i).transpose(), state.beta[t]);
      Eigen::VectorXd lp(H);
      for (int h = 0; h < H; ++h) {
        const double r = fz(i, t) - state.atoms(h, t);
        lp(h) = logw(h) - 0.5 * std::log(state.sigma2(h)) - 0.5 * r * r / state.sigma2(h);
      }
      parts.base += bivariate_term(fz(i, t), y_j(i, t), y_l(i, t), hp.sigma_y2) + log_sum_exp(lp);
    }
  }
  for (int h = 0; h < H; ++h)
    parts.base += -(hp.a_sigma + 1) * std::log(state.sigma2(h)) - hp.b_sigma / state.sigma2(h);
  if (!hp.covariate_naive) {
    const double q = static_cast<double>(X.cols());
    for (int t = 0; t < T; ++t)
      for (int h = 0; h < H - 1; ++h)
        parts.base += -0.5 * state.beta[t].row(h).squaredNorm() / hp.sigma_beta_diag -
                      0.5 * q * std::log(hp.sigma_beta_diag);
  }
  parts.tv = Eigen::VectorXd::Zero(H);
  for (int h = 0; h < H; ++h)
    for (int t = 1; t < T; ++t) parts.tv(h) += std::abs(state.atoms(h, t) - state.atoms(h, t - 1));
  return parts;
}

}  // namespace

double augmented_log_posterior_edge(const Eigen::MatrixXd& fisherz, const MixtureState& state,
                                    const Eigen::MatrixXd& y_j, const Eigen::MatrixXd& y_l,
                                    const Eigen::MatrixXd& X, const HyperParams& hp,
                                    const Eigen::VectorXd& lambda) {
  const int N = static_cast<int>(fisherz.rows());
  const int T = static_cast<int>(fisherz.cols());
  const int H = state.H;
  double v = 0;
  for (int i = 0; i < N; ++i) {
    for (int t = 0; t < T; ++t) {
      v += bivariate_term(fisherz(i, t), y_j(i, t), y_l(i, t), hp.sigma_y2);
      const auto psi = state.resp[i].col(t);
      for (int h = 0; h < H; ++h) {
        const double r = fisherz(i, t) - state.atoms(h, t);
        v -= 0.5 * psi(h) * (r * r / state.sigma2(h) + std::log(state.sigma2(h)));
      }
      if (!hp.covariate_naive) {
        Eigen::VectorXd logits = state.beta[t] * X.row(i).transpose();
        for (int h = 0; h < H - 1; ++h) v += psi(h) * logits(h);
        Eigen::VectorXd full(H);
        full.head(H - 1) = logits;
        full(H - 1) = 0;
        v -= log_sum_exp(full);
      } else {
        v -= std::log(double(H));
      }
    }
  }
  for (int h = 0; h < H; ++h) {
    double tv = 0;
    for (int t = 1; t < T; ++t) tv += std::abs(state.atoms(h, t) - state.atoms(h, t - 1));
    v += -lambda(h) * tv - (hp.a_sigma + 1) * std::log(state.sigma2(h)) -
         hp.b_sigma / state.sigma2(h);
  }
  if (!hp.covariate_naive) {
    const double q = static_cast<double>(X.cols());
    for (int t = 0; t < T; ++t)
      for (int h = 0; h < H - 1; ++h)
        v += -0.5 * state.beta[t].row(h).squaredNorm() / hp.sigma_beta_diag -
             0.5 * q * std::log(hp.sigma_beta_diag);
  }
  return v;
}

EdgeFit fit_edge(const Eigen::MatrixXd& y_j, const Eigen::MatrixXd& y_l,
                 const Eigen::MatrixXd& X, const HyperParams& hp, std::uint64_t seed) {
  (void)seed;  // the pairwise fit is fully deterministic; kept for interface parity
  const int N = static_cast<int>(y_j.rows());
  const int T = static_cast<int>(y_j.cols());
  const int H = hp.H;
  const int q = static_cast<int>(X.cols());
  if (y_l.rows() != N || y_l.cols() != T) throw std::invalid_argument("node series shape mismatch");
  if (X.rows() != N) throw std::invalid_argument("covariate rows must match subjects");
  if (hp.sigma_y2 <= 0) throw std::invalid_argument("sigma_y2 must be set before fitting an edge");

  EdgeFit fit;
  fit.fisherz = sliding_window_fisherz(y_j, y_l, 15);
  fit.state.H = H;
  fit.state.atom_dim = 1;
  init_atoms(fit.fisherz, H, fit.state);
  fit.state.beta.assign(T, Eigen::MatrixXd::Zero(H - 1, q));
  fit.state.resp.assign(N, Eigen::MatrixXd::Constant(H, T, 1.0 / H));
  fit.lambda = Eigen::VectorXd::Constant(H, hp.lambda_grid[hp.lambda_grid.size() / 2]);

  std::vector<Eigen::MatrixXd> warm(H);        // per-component warm starts along the grid
  std::vector<Eigen::VectorXd> frozen_warm(H);  // warm start at the frozen penalty
  std::ostringstream warnings;

  TraceParts prev_parts = observed_parts(fit.fisherz, fit.state, y_j, y_l, X, hp);
  fit.log_posterior_trace.push_back(prev_parts.value(fit.lambda));

  const Eigen::VectorXd uniform_logw = Eigen::VectorXd::Constant(H, -std::log(double(H)));

  for (int iter = 1; iter <= hp.max_em_iters; ++iter) {
    // E-step
    for (int i = 0; i < N; ++i) {
      for (int t = 0; t < T; ++t) {
        const Eigen::VectorXd logw =
            hp.covariate_naive ? uniform_logw : log_mixture_weights(X.row(i).transpose(), fit.state.beta[t]);
        Eigen::VectorXd logdens(H);
        for (int h = 0; h < H; ++h) {
          const double r = fit.fisherz(i, t) - fit.state.atoms(h, t);
          logdens(h) = log_normal_density(r * r, fit.state.sigma2(h), 1);
        }
        fit.state.resp[i].col(t) = e_step_responsibilities(logw, logdens);
      }
    }

    // component masses and per-scan weighted targets
    Eigen::VectorXd total_psi = Eigen::VectorXd::Zero(H);
    Eigen::MatrixXd psi_t = Eigen::MatrixXd::Zero(H, T);      // sum_i psi
    Eigen::MatrixXd psi_fz_t = Eigen::MatrixXd::Zero(H, T);   // sum_i psi * z
    for (int i = 0; i < N; ++i) {
      psi_t += fit.state.resp[i];
      psi_fz_t += fit.state.resp[i].cwiseProduct(fit.fisherz.row(i).replicate(H, 1));
    }
    total_psi = psi_t.rowwise().sum();

    // M-step: atoms via the weighted fused path
    for (int h = 0; h < H; ++h) {
      if (total_psi(h) < 1e-6) continue;  // empty component: atom and sigma2 frozen
      Eigen::VectorXd w = psi_t.row(h) / (2.0 * fit.state.sigma2(h));
      Eigen::VectorXd target(T);
      for (int t = 0; t < T; ++t)
        target(t) = psi_t(h, t) > 0 ? psi_fz_t(h, t) / psi_t(h, t) : 0.0;
      FusedFit ff;
      if (hp.freeze_lambda_after_first && iter > 1) {
        ff = solve_fused_weighted(w, target, fit.lambda(h),
                                  frozen_warm[h].size() == T ? &frozen_warm[h] : nullptr);
      } else {
        ff = solve_fused_path(w, target, hp.lambda_grid, &warm[h]);
        fit.lambda(h) = ff.lambda;
      }
      frozen_warm[h] = ff.eta;
      fit.state.atoms.row(h) = ff.atoms.transpose();
      if (!ff.converged) warnings << "fused cap (h=" << h + 1 << ", iter=" << iter << "); ";
    }

    // M-step: component variances
    for (int h = 0; h < H; ++h) {
      if (total_psi(h) < 1e-6) continue;
      double ss = 0;
      for (int i = 0; i < N; ++i)
        for (int t = 0; t < T; ++t) {
          const double r = fit.fisherz(i, t) - fit.state.atoms(h, t);
          ss += fit.state.resp[i](h, t) * r * r;
        }
      bool held = false;
      fit.state.sigma2(h) = m_step_sigma2(total_psi(h), ss, hp.a_sigma, hp.b_sigma, 1,
                                          fit.state.sigma2(h), &held);
      if (held) {
        ++fit.sigma2_holds;
        log_warn("variance update held for component " + std::to_string(h + 1) +
                 " (tiny effective count)");
      }
    }

    // M-step: covariate effects, rejected wholesale if the posterior drops
    if (!hp.covariate_naive) {
      std::vector<Eigen::MatrixXd> beta_old = fit.state.beta;
      Eigen::MatrixXd psi_sum(N, H);
      for (int t = 0; t < T; ++t) {
        for (int i = 0; i < N; ++i) psi_sum.row(i) = fit.state.resp[i].col(t).transpose();
        fit.state.beta[t] = m_step_beta(psi_sum, X, fit.state.beta[t], hp.sigma_beta_diag, 1);
      }
      TraceParts with_new = observed_parts(fit.fisherz, fit.state, y_j, y_l, X, hp);
      std::vector<Eigen::MatrixXd> beta_new = fit.state.beta;
      fit.state.beta = beta_old;
      TraceParts with_old = observed_parts(fit.fisherz, fit.state, y_j, y_l, X, hp);
      if (with_new.value(fit.lambda) >= with_old.value(fit.lambda)) {
        fit.state.beta = std::move(beta_new);
      } else {
        ++fit.beta_rejects;
      }
    }

    // M-step: Fisher-z values by safeguarded Newton ascent
    for (int i = 0; i < N; ++i) {
      const auto& resp = fit.state.resp[i];
      for (int t = 0; t < T; ++t) {
        fit.fisherz(i, t) =
            newton_update_fisherz(fit.fisherz(i, t), y_j(i, t), y_l(i, t), resp.col(t),
                                  fit.state.atoms.col(t), fit.state.sigma2, hp.sigma_y2);
      }
    }

    TraceParts parts = observed_parts(fit.fisherz, fit.state, y_j, y_l, X, hp);
    const double now = parts.value(fit.lambda);
    const double prev_comparable = prev_parts.value(fit.lambda);
    if (!std::isfinite(now)) throw std::runtime_error("non-finite log posterior in edge fit");
    if (now < prev_comparable - 1e-6) ++fit.monotone_violations;
    fit.log_posterior_trace.push_back(now);
    fit.iterations = iter;
    const double delta = std::abs(now - prev_comparable);
    prev_parts = parts;
    if (delta < hp.em_tol) {
      fit.converged = true;
      break;
    }
  }
  fit.warning = warnings.str();
  return fit;
}

IdpacFit fit_idpac(const PanelDataset& panel, const HyperParams& hp, std::uint64_t seed,
                   int threads) {
  panel.validate();
  hp.validate();
  const int N = panel.n_subjects();
  const int V = panel.n_nodes();
  const int T = panel.n_scans();
  const int E = n_edges(V);

  // node series as fitted: demeaned by load, optionally unit variance
  std::vector<Eigen::MatrixXd> series = panel.data;
  if (hp.standardize_nodes) {
    for (auto& m : series)
      for (int v = 0; v < V; ++v) {
        const double sd = std::sqrt(m.row(v).squaredNorm() / T);
        if (sd > 1e-12) m.row(v) /= sd;
      }
  }
  HyperParams hp_edge = hp;
  if (hp_edge.sigma_y2 <= 0) {
    double acc = 0;
    for (const auto& m : series)
      for (int v = 0; v < V; ++v) acc += m.row(v).squaredNorm() / T;
    hp_edge.sigma_y2 = acc / (static_cast<double>(N) * V);
  }
  const Eigen::MatrixXd X =
      hp.standardize_covariates ? standardize_columns(panel.covariates) : panel.covariates;

  IdpacFit out;
  out.sigma_y2 = hp_edge.sigma_y2;
  out.states.resize(E);
  out.diagnostics.resize(E);
  out.networks.kind = NetworkKind::PairwiseFisherZ;
  out.networks.n_nodes = V;
  out.networks.edges.assign(N, Eigen::MatrixXd::Zero(T, E));
  out.labels.assign(N, Eigen::MatrixXi::Zero(T, E));

  std::vector<EdgeFit> fits(E);
  parallel_for(E, threads, [&](int e) {
    int j, l;
    edge_nodes(e, V, j, l);
    Eigen::MatrixXd yj(N, T), yl(N, T);
    for (int i = 0; i < N; ++i) {
      yj.row(i) = series[i].row(j);
      yl.row(i) = series[i].row(l);
    }
    try {
      fits[e] = fit_edge(yj, yl, X, hp_edge, derive_seed(seed, e));
    } catch (const std::exception& first) {
      log_warn("edge " + std::to_string(e + 1) + " failed (" + first.what() + "), retrying");
      try {
        fits[e] = fit_edge(yj, yl, X, hp_edge, derive_seed(seed, e, 1));
        fits[e].warning += std::string("retried after: ") + first.what();
      } catch (const std::exception& second) {
        // surface the failure but keep the run alive with the initializer
        fits[e] = EdgeFit{};
        fits[e].fisherz = sliding_window_fisherz(yj, yl, 15);
        fits[e].state.H = hp_edge.H;
        fits[e].state.atom_dim = 1;
        init_atoms(fits[e].fisherz, hp_edge.H, fits[e].state);
        fits[e].state.beta.assign(T, Eigen::MatrixXd::Zero(hp_edge.H - 1, X.cols()));
        fits[e].state.resp.assign(N, Eigen::MatrixXd::Constant(hp_edge.H, T, 1.0 / hp_edge.H));
        fits[e].lambda = Eigen::VectorXd::Constant(hp_edge.H, hp_edge.lambda_grid.front());
        fits[e].warning = std::string("edge failed twice: ") + second.what();
        log_error("edge " + std::to_string(e + 1) + " failed twice: " + second.what());
      }
    }
  });

  for (int e = 0; e < E; ++e) {
    EdgeFit& f = fits[e];
    int j, l;
    edge_nodes(e, V, j, l);
    for (int i = 0; i < N; ++i) {
      out.networks.edges[i].col(e) = f.fisherz.row(i).transpose();
      for (int t = 0; t < T; ++t) {
        int arg = 0;
        f.state.resp[i].col(t).maxCoeff(&arg);
        out.labels[i](t, e) = arg;
      }
    }
    EdgeDiagnostics d;
    d.edge = e + 1;
    d.j = j + 1;
    d.l = l + 1;
    d.iterations = f.iterations;
    d.converged = f.converged;
    d.final_log_posterior = f.log_posterior_trace.empty() ? 0 : f.log_posterior_trace.back();
    std::ostringstream ls;
    for (int h = 0; h < f.lambda.size(); ++h) ls << (h ? ";" : "") << f.lambda(h);
    d.lambdas = ls.str();
    d.warning = f.warning;
    out.diagnostics[e] = d;
    if (!f.converged) out.all_converged = false;
    out.states[e] = std::move(f.state);
  }
  return out;
}

}  // namespace bpmm
