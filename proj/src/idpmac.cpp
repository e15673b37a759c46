#include "bpmm/idpmac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bpmm/kmeans.hpp"
#include "bpmm/lasso.hpp"
#include "bpmm/logging.hpp"
#include "bpmm/parallel.hpp"
#include "bpmm/transforms.hpp"

namespace bpmm {

namespace {

// Schur complement: inverse of omega with row/col v removed, computed from
// the full inverse sigma in O(V^2).
Eigen::MatrixXd complement_inverse(const Eigen::MatrixXd& sigma, int v) {
  const int V = static_cast<int>(sigma.rows());
  Eigen::MatrixXd B(V - 1, V - 1);
  Eigen::VectorXd sv(V - 1);
  int r = 0;
  for (int a = 0; a < V; ++a) {
    if (a == v) continue;
    sv(r) = sigma(a, v);
    int c = 0;
    for (int b = 0; b < V; ++b) {
      if (b == v) continue;
      B(r, c) = sigma(a, b);
      ++c;
    }
    ++r;
  }
  B.noalias() -= sv * sv.transpose() / sigma(v, v);
  return B;
}

Eigen::LLT<Eigen::MatrixXd> safe_llt(Eigen::MatrixXd A, GibbsDiagnostics* diag) {
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() == Eigen::Success) return llt;
  if (diag) ++diag->jitter_count;
  A.diagonal().array() += 1e-8;
  llt.compute(A);
  int tries = 0;
  while (llt.info() != Eigen::Success && tries < 20) {
    A.diagonal().array() += std::pow(10.0, tries - 7);
    llt.compute(A);
    ++tries;
  }
  if (llt.info() != Eigen::Success) throw std::runtime_error("Cholesky failed beyond jitter rescue");
  return llt;
}

}  // namespace

ColumnDraw draw_precision_column(const Eigen::MatrixXd& B, const Eigen::VectorXd& s_v,
                                 double s_vv, const Eigen::VectorXd& psi_v,
                                 const Eigen::MatrixXd& atoms_t, const Eigen::VectorXd& sigma2,
                                 double alpha, Rng& rng, GibbsDiagnostics* diag) {
  const int d = static_cast<int>(B.rows());
  const int H = static_cast<int>(psi_v.size());
  double conc = 0;
  Eigen::VectorXd m = Eigen::VectorXd::Zero(d);
  for (int h = 0; h < H; ++h) {
    conc += psi_v(h) / sigma2(h);
    m.noalias() += (psi_v(h) / sigma2(h)) * atoms_t.col(h);
  }
  Eigen::MatrixXd A = (s_vv + alpha) * B;
  A.diagonal().array() += conc;
  const auto llt = safe_llt(std::move(A), diag);

  ColumnDraw draw;
  draw.offdiag = llt.solve(m - s_v);
  Eigen::VectorXd z(d);
  for (int k = 0; k < d; ++k) z(k) = rng.normal();
  // x = mean + L^{-T} z has covariance A^{-1}
  draw.offdiag += llt.matrixU().solve(z);
  draw.kappa = rng.gamma(1.5) * 2.0 / (s_vv + alpha);
  return draw;
}

Eigen::MatrixXd gibbs_sample_precision(const Eigen::MatrixXd& S, Eigen::MatrixXd omega,
                                       const Eigen::MatrixXd& psi_nodes,
                                       const Eigen::MatrixXd& atoms_t,
                                       const Eigen::VectorXd& sigma2, double alpha,
                                       int n_samples, int burnin, Rng& rng,
                                       GibbsDiagnostics* diag) {
  const int V = static_cast<int>(omega.rows());
  Eigen::MatrixXd sigma = safe_llt(omega, diag).solve(Eigen::MatrixXd::Identity(V, V));
  Eigen::MatrixXd accum = Eigen::MatrixXd::Zero(V, V);
  Eigen::VectorXd s_v(V - 1);

  for (int sweep = 0; sweep < burnin + n_samples; ++sweep) {
    for (int v = 0; v < V; ++v) {
      const Eigen::MatrixXd B = complement_inverse(sigma, v);
      int r = 0;
      for (int a = 0; a < V; ++a)
        if (a != v) s_v(r++) = S(a, v);
      const ColumnDraw draw = draw_precision_column(B, s_v, S(v, v), psi_nodes.col(v), atoms_t,
                                                    sigma2, alpha, rng, diag);
      const Eigen::VectorXd Bw = B * draw.offdiag;
      const double diagval = draw.kappa + draw.offdiag.dot(Bw);
      // write the column and mirror it so omega stays symmetric
      r = 0;
      for (int a = 0; a < V; ++a) {
        if (a == v) continue;
        omega(a, v) = omega(v, a) = draw.offdiag(r);
        ++r;
      }
      omega(v, v) = diagval;
      // rank-structured refresh of the inverse: the complement block kept B
      r = 0;
      for (int a = 0; a < V; ++a) {
        if (a == v) continue;
        sigma(a, v) = sigma(v, a) = -Bw(r) / draw.kappa;
        ++r;
      }
      sigma(v, v) = 1.0 / draw.kappa;
      int rr = 0;
      for (int a = 0; a < V; ++a) {
        if (a == v) continue;
        int cc = 0;
        for (int b = 0; b < V; ++b) {
          if (b == v) continue;
          sigma(a, b) = B(rr, cc) + Bw(rr) * Bw(cc) / draw.kappa;
          ++cc;
        }
        ++rr;
      }
    }
    // full refresh once per sweep to stop numerical drift
    sigma = safe_llt(omega, diag).solve(Eigen::MatrixXd::Identity(V, V));
    if (sweep >= burnin) accum += omega;
  }
  return accum / n_samples;
}

Eigen::MatrixXd partial_correlation_matrix(const Eigen::MatrixXd& omega) {
  const int V = static_cast<int>(omega.rows());
  Eigen::MatrixXd p(V, V);
  for (int k = 0; k < V; ++k) {
    p(k, k) = 1.0;
    for (int l = k + 1; l < V; ++l) {
      const double v = -omega(k, l) / std::sqrt(omega(k, k) * omega(l, l));
      p(k, l) = p(l, k) = v;
    }
  }
  return p;
}

DynamicNetworkSet partial_correlations(const PrecisionFit& fit) {
  DynamicNetworkSet out;
  out.kind = NetworkKind::PartialCorrelation;
  out.n_nodes = fit.omega.empty() ? 0 : static_cast<int>(fit.omega[0][0].rows());
  out.matrices.resize(fit.omega.size());
  for (std::size_t i = 0; i < fit.omega.size(); ++i) {
    out.matrices[i].reserve(fit.omega[i].size());
    for (const auto& om : fit.omega[i]) out.matrices[i].push_back(partial_correlation_matrix(om));
  }
  return out;
}

namespace {

Eigen::VectorXd omega_row_without(const Eigen::MatrixXd& omega, int v) {
  const int V = static_cast<int>(omega.rows());
  Eigen::VectorXd row(V - 1);
  int r = 0;
  for (int a = 0; a < V; ++a)
    if (a != v) row(r++) = omega(v, a);
  return row;
}

}  // namespace

MixtureState init_idpmac_state(const std::vector<std::vector<Eigen::MatrixXd>>& omega, int H,
                               int n_covariates, std::uint64_t seed) {
  const int N = static_cast<int>(omega.size());
  const int T = static_cast<int>(omega[0].size());
  const int V = static_cast<int>(omega[0][0].rows());
  const int d = V - 1;

  MixtureState state;
  state.H = H;
  state.atom_dim = d;
  state.vatoms.assign(H, Eigen::MatrixXd::Zero(d, T));
  state.sigma2 = Eigen::VectorXd::Constant(H, 0.1);
  state.beta.assign(T, Eigen::MatrixXd::Zero(H - 1, n_covariates));
  state.resp.assign(static_cast<std::size_t>(N) * V, Eigen::MatrixXd::Constant(H, T, 1.0 / H));

  Eigen::MatrixXd rows(static_cast<Eigen::Index>(N) * V, d);
  std::vector<double> ss_per_h(H, 0.0);
  std::vector<std::int64_t> n_per_h(H, 0);
  Eigen::MatrixXd prev_centers;
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < N; ++i)
      for (int v = 0; v < V; ++v)
        rows.row(static_cast<Eigen::Index>(i) * V + v) = omega_row_without(omega[i][t], v).transpose();
    KMeansResult km = kmeans(rows, H, 3, derive_seed(seed, 0x696e69ULL, t), 50);
    // align to the previous scan by greedy nearest-center matching
    Eigen::MatrixXd centers = km.centers;
    std::vector<int> order(H);
    if (t == 0) {
      for (int h = 0; h < H; ++h) order[h] = h;
    } else {
      std::vector<bool> used(H, false);
      std::fill(order.begin(), order.end(), -1);
      for (int pick = 0; pick < H; ++pick) {
        double best = std::numeric_limits<double>::infinity();
        int bh = -1, bc = -1;
        for (int h = 0; h < H; ++h) {
          if (order[h] >= 0) continue;
          for (int c = 0; c < H; ++c) {
            if (used[c]) continue;
            const double dd = (prev_centers.row(h) - centers.row(c)).squaredNorm();
            if (dd < best) {
              best = dd;
              bh = h;
              bc = c;
            }
          }
        }
        order[bh] = bc;
        used[bc] = true;
      }
    }
    Eigen::MatrixXd aligned(H, d);
    for (int h = 0; h < H; ++h) aligned.row(h) = centers.row(order[h]);
    prev_centers = aligned;
    for (int h = 0; h < H; ++h) state.vatoms[h].col(t) = aligned.row(h).transpose();
    for (Eigen::Index rr = 0; rr < rows.rows(); ++rr) {
      double best = std::numeric_limits<double>::infinity();
      int arg = 0;
      for (int h = 0; h < H; ++h) {
        const double dd = (rows.row(rr) - aligned.row(h)).squaredNorm();
        if (dd < best) {
          best = dd;
          arg = h;
        }
      }
      ss_per_h[arg] += best;
      ++n_per_h[arg];
    }
  }
  double pooled = 0;
  std::int64_t n_all = 0;
  for (int h = 0; h < H; ++h) {
    pooled += ss_per_h[h];
    n_all += n_per_h[h];
  }
  pooled = n_all ? pooled / (static_cast<double>(n_all) * d) : 0.1;
  for (int h = 0; h < H; ++h) {
    state.sigma2(h) = n_per_h[h] >= 4 ? ss_per_h[h] / (static_cast<double>(n_per_h[h]) * d) : pooled;
    state.sigma2(h) = std::max(state.sigma2(h), 1e-4);
  }
  return state;
}

namespace {

struct PmacParts {
  double likelihood = 0;  // logdet/trace/diagonal-prior block, beta-free
  double mix = 0;         // mixture marginal + beta prior, beta-dependent
  double sigma_prior = 0;
  Eigen::VectorXd tv;
  double value(const Eigen::VectorXd& lambda) const {
    return likelihood + mix + sigma_prior - lambda.dot(tv);
  }
};

double mix_term(const std::vector<std::vector<Eigen::MatrixXd>>& omega, const MixtureState& state,
                const Eigen::MatrixXd& X, const HyperParams& hp) {
  const int N = static_cast<int>(omega.size());
  const int T = static_cast<int>(omega[0].size());
  const int V = static_cast<int>(omega[0][0].rows());
  const int H = state.H;
  const int d = V - 1;
  double acc = 0;
  Eigen::VectorXd logw = Eigen::VectorXd::Constant(H, -std::log(double(H)));
  for (int i = 0; i < N; ++i) {
    for (int t = 0; t < T; ++t) {
      if (!hp.covariate_naive) logw = log_mixture_weights(X.row(i).transpose(), state.beta[t]);
      for (int v = 0; v < V; ++v) {
        const Eigen::VectorXd row = omega_row_without(omega[i][t], v);
        Eigen::VectorXd lp(H);
        for (int h = 0; h < H; ++h) {
          const double sq = (row - state.vatoms[h].col(t)).squaredNorm();
          lp(h) = logw(h) - 0.5 * d * std::log(state.sigma2(h)) - 0.5 * sq / state.sigma2(h);
        }
        acc += log_sum_exp(lp);
      }
    }
  }
  if (!hp.covariate_naive) {
    const double q = static_cast<double>(X.cols());
    for (int t = 0; t < T; ++t)
      for (int h = 0; h < H - 1; ++h)
        acc += -0.5 * state.beta[t].row(h).squaredNorm() / hp.sigma_beta_diag -
               0.5 * q * std::log(hp.sigma_beta_diag);
  }
  return acc;
}

}  // namespace

PrecisionFit fit_idpmac(const PanelDataset& panel, const HyperParams& hp, std::uint64_t seed,
                        int threads, const MixtureState* init) {
  panel.validate();
  hp.validate();
  const int N = panel.n_subjects();
  const int V = panel.n_nodes();
  const int T = panel.n_scans();
  const int d = V - 1;
  const int H = hp.H;
  if (V < 3) throw std::runtime_error("precision-matrix fitting needs V >= 3");

  const Eigen::MatrixXd X =
      hp.standardize_covariates ? standardize_columns(panel.covariates) : panel.covariates;

  // cross products and a windowed-covariance initial precision per (i, t)
  std::vector<std::vector<Eigen::MatrixXd>> S(N), omega(N);
  parallel_for(N, threads, [&](int i) {
    S[i].resize(T);
    omega[i].resize(T);
    const auto& Y = panel.data[i];
    for (int t = 0; t < T; ++t) S[i][t] = Y.col(t) * Y.col(t).transpose();
    constexpr int kWin = 15;
    for (int t = 0; t < T; ++t) {
      const int lo = std::max(0, t - kWin / 2);
      const int hi = std::min(T - 1, t + kWin / 2);
      Eigen::MatrixXd C = Eigen::MatrixXd::Zero(V, V);
      for (int s = lo; s <= hi; ++s) C += S[i][s];
      C /= (hi - lo + 1);
      C.diagonal().array() += 0.25 * C.trace() / V + 1e-6;
      omega[i][t] = C.llt().solve(Eigen::MatrixXd::Identity(V, V));
    }
  });

  PrecisionFit fit;
  fit.state = init ? *init : init_idpmac_state(omega, H, static_cast<int>(X.cols()), seed);
  if (static_cast<int>(fit.state.resp.size()) != N * V || fit.state.atom_dim != d)
    throw std::invalid_argument("mixture init does not match the panel layout");
  fit.omega = std::move(omega);
  fit.lambda = Eigen::VectorXd::Constant(H, hp.lambda_grid[hp.lambda_grid.size() / 2]);

  const Eigen::VectorXd uniform_logw = Eigen::VectorXd::Constant(H, -std::log(double(H)));
  std::vector<std::vector<Eigen::MatrixXd>> warm(H);  // [h][coordinate] grid warm starts
  for (auto& wv : warm) wv.resize(d);
  std::ostringstream warnings;
  int consecutive_drops = 0;

  const auto likelihood_term = [&]() {
    double acc = 0;
    for (int i = 0; i < N; ++i)
      for (int t = 0; t < T; ++t) {
        const Eigen::LLT<Eigen::MatrixXd> llt(fit.omega[i][t]);
        double logdet = 0;
        if (llt.info() == Eigen::Success) {
          for (int v = 0; v < V; ++v) logdet += std::log(llt.matrixL()(v, v));
          logdet *= 2;
        } else {
          logdet = -1e12;  // non-PD state should never happen; poison the trace
        }
        acc += 0.5 * logdet - 0.5 * (fit.omega[i][t].cwiseProduct(S[i][t])).sum() -
               0.5 * hp.alpha * fit.omega[i][t].trace();
      }
    return acc;
  };
  const auto sigma_prior_term = [&]() {
    double acc = 0;
    for (int h = 0; h < H; ++h)
      acc += -(hp.a_sigma + 1) * std::log(fit.state.sigma2(h)) - hp.b_sigma / fit.state.sigma2(h);
    return acc;
  };
  const auto tv_term = [&]() {
    Eigen::VectorXd tv = Eigen::VectorXd::Zero(H);
    for (int h = 0; h < H; ++h)
      for (int t = 1; t < T; ++t)
        tv(h) += (fit.state.vatoms[h].col(t) - fit.state.vatoms[h].col(t - 1)).lpNorm<1>();
    return tv;
  };

  PmacParts prev;
  prev.likelihood = likelihood_term();
  prev.mix = mix_term(fit.omega, fit.state, X, hp);
  prev.sigma_prior = sigma_prior_term();
  prev.tv = tv_term();
  fit.log_posterior_trace.push_back(prev.value(fit.lambda));

  Rng audit_rng(derive_seed(seed, 0xaadbULL));

  for (int iter = 1; iter <= hp.max_em_iters; ++iter) {
    // (a) mixture-indicator E-step on the current precision rows
    for (int i = 0; i < N; ++i) {
      for (int t = 0; t < T; ++t) {
        const Eigen::VectorXd logw =
            hp.covariate_naive ? uniform_logw
                               : log_mixture_weights(X.row(i).transpose(), fit.state.beta[t]);
        for (int v = 0; v < V; ++v) {
          const Eigen::VectorXd row = omega_row_without(fit.omega[i][t], v);
          Eigen::VectorXd logdens(H);
          for (int h = 0; h < H; ++h)
            logdens(h) = log_normal_density((row - fit.state.vatoms[h].col(t)).squaredNorm(),
                                            fit.state.sigma2(h), d);
          fit.state.resp[static_cast<std::size_t>(i) * V + v].col(t) =
              e_step_responsibilities(logw, logdens);
        }
      }
    }

    // (b) Monte Carlo E-step: posterior-mean precision per (subject, scan)
    std::vector<GibbsDiagnostics> gdiag(static_cast<std::size_t>(N) * T);
    parallel_for(N * T, threads, [&](int it) {
      const int i = it / T;
      const int t = it % T;
      Rng rng(derive_seed(seed, 0x9bULL + iter, it));
      Eigen::MatrixXd psi_nodes(H, V);
      for (int v = 0; v < V; ++v)
        psi_nodes.col(v) = fit.state.resp[static_cast<std::size_t>(i) * V + v].col(t);
      Eigen::MatrixXd atoms_t(d, H);
      for (int h = 0; h < H; ++h) atoms_t.col(h) = fit.state.vatoms[h].col(t);
      fit.omega[i][t] = gibbs_sample_precision(S[i][t], fit.omega[i][t], psi_nodes, atoms_t,
                                               fit.state.sigma2, hp.alpha, hp.mc_samples,
                                               hp.mc_burnin, rng, &gdiag[it]);
    });
    int iter_jitters = 0;
    for (const auto& g : gdiag) iter_jitters += g.jitter_count;
    fit.jitter_count += iter_jitters;

    // component masses, per-scan sums over (subject, node)
    Eigen::VectorXd total_psi = Eigen::VectorXd::Zero(H);
    Eigen::MatrixXd psi_t = Eigen::MatrixXd::Zero(H, T);
    std::vector<Eigen::MatrixXd> psi_row_t(H, Eigen::MatrixXd::Zero(d, T));
    for (int i = 0; i < N; ++i)
      for (int v = 0; v < V; ++v) {
        const auto& r = fit.state.resp[static_cast<std::size_t>(i) * V + v];
        psi_t += r;
        for (int t = 0; t < T; ++t) {
          const Eigen::VectorXd row = omega_row_without(fit.omega[i][t], v);
          for (int h = 0; h < H; ++h) psi_row_t[h].col(t) += r(h, t) * row;
        }
      }
    total_psi = psi_t.rowwise().sum();

    // (c) atom M-step: one fused path per component per coordinate
    for (int h = 0; h < H; ++h) {
      if (total_psi(h) < 1e-6) continue;
      Eigen::VectorXd w = psi_t.row(h) / (2.0 * fit.state.sigma2(h));
      double lambda_vote = 0;
      for (int c = 0; c < d; ++c) {
        Eigen::VectorXd target(T);
        for (int t = 0; t < T; ++t)
          target(t) = psi_t(h, t) > 0 ? psi_row_t[h](c, t) / psi_t(h, t) : 0.0;
        if (hp.freeze_lambda_after_first && iter > 1) {
          FusedFit ff = solve_fused_weighted(w, target, fit.lambda(h));
          fit.state.vatoms[h].row(c) = ff.atoms.transpose();
          lambda_vote += fit.lambda(h);
        } else {
          FusedFit ff = solve_fused_path(w, target, hp.lambda_grid, &warm[h][c]);
          fit.state.vatoms[h].row(c) = ff.atoms.transpose();
          lambda_vote += ff.lambda;
        }
      }
      fit.lambda(h) = lambda_vote / d;  // bookkeeping value for the trace penalty
    }

    // (d) sigma2 M-step
    for (int h = 0; h < H; ++h) {
      if (total_psi(h) < 1e-6) continue;
      double ss = 0;
      for (int i = 0; i < N; ++i)
        for (int v = 0; v < V; ++v) {
          const auto& r = fit.state.resp[static_cast<std::size_t>(i) * V + v];
          for (int t = 0; t < T; ++t)
            ss += r(h, t) *
                  (omega_row_without(fit.omega[i][t], v) - fit.state.vatoms[h].col(t)).squaredNorm();
        }
      fit.state.sigma2(h) =
          m_step_sigma2(total_psi(h), ss, hp.a_sigma, hp.b_sigma, d, fit.state.sigma2(h));
    }

    // (e) covariate effects with the node-count aggregation, reject on drop
    if (!hp.covariate_naive) {
      std::vector<Eigen::MatrixXd> beta_old = fit.state.beta;
      for (int t = 0; t < T; ++t) {
        Eigen::MatrixXd psi_sum = Eigen::MatrixXd::Zero(N, H);
        for (int i = 0; i < N; ++i)
          for (int v = 0; v < V; ++v)
            psi_sum.row(i) += fit.state.resp[static_cast<std::size_t>(i) * V + v].col(t).transpose();
        fit.state.beta[t] = m_step_beta(psi_sum, X, fit.state.beta[t], hp.sigma_beta_diag, V);
      }
      const double mix_new = mix_term(fit.omega, fit.state, X, hp);
      std::vector<Eigen::MatrixXd> beta_new = fit.state.beta;
      fit.state.beta = beta_old;
      const double mix_old = mix_term(fit.omega, fit.state, X, hp);
      if (mix_new >= mix_old) fit.state.beta = std::move(beta_new);
    }

    // positive-definiteness audit on a 5% sample of (subject, scan) pairs
    double min_eig = std::numeric_limits<double>::infinity();
    const int n_audit = std::max(1, N * T / 20);
    for (int a = 0; a < n_audit; ++a) {
      const int i = static_cast<int>(audit_rng.uniform_int(N));
      const int t = static_cast<int>(audit_rng.uniform_int(T));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fit.omega[i][t],
                                                        Eigen::EigenvaluesOnly);
      min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
    }
    if (min_eig <= 0) throw std::runtime_error("positive definiteness audit failed");

    PmacParts parts;
    parts.likelihood = likelihood_term();
    parts.mix = mix_term(fit.omega, fit.state, X, hp);
    parts.sigma_prior = sigma_prior_term();
    parts.tv = tv_term();
    const double now = parts.value(fit.lambda);
    const double prev_comparable = prev.value(fit.lambda);
    if (!std::isfinite(now)) throw std::runtime_error("non-finite log posterior in precision fit");

    fit.log_posterior_trace.push_back(now);
    fit.iterations = iter;
    fit.iteration_diagnostics.push_back({iter, now, min_eig, iter_jitters});

    const double delta = now - prev_comparable;
    if (delta < -10.0 * hp.em_tol) {
      warnings << "log-posterior dropped by " << -delta << " at iter " << iter
               << " (consider raising mc_samples); ";
      log_warn("precision fit log-posterior oscillation beyond the tolerance band");
    }
    consecutive_drops = delta < 0 ? consecutive_drops + 1 : 0;
    if (consecutive_drops >= 5)
      throw std::runtime_error("log posterior decreased 5 iterations in a row");
    prev = parts;
    if (std::abs(delta) < hp.em_tol) {
      fit.converged = true;
      break;
    }
  }

  // full audit at exit
  double final_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < N; ++i)
    for (int t = 0; t < T; ++t) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fit.omega[i][t], Eigen::EigenvaluesOnly);
      final_min = std::min(final_min, es.eigenvalues().minCoeff());
    }
  if (final_min <= 0) throw std::runtime_error("final positive definiteness audit failed");

  fit.labels.assign(N, Eigen::MatrixXi::Zero(T, V));
  for (int i = 0; i < N; ++i)
    for (int v = 0; v < V; ++v)
      for (int t = 0; t < T; ++t) {
        int arg = 0;
        fit.state.resp[static_cast<std::size_t>(i) * V + v].col(t).maxCoeff(&arg);
        fit.labels[i](t, v) = arg;
      }
  fit.warning = warnings.str();
  return fit;
}

}  // namespace bpmm
