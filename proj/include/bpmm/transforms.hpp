#ifndef BPMM_TRANSFORMS_HPP
#define BPMM_TRANSFORMS_HPP

#include <cmath>
#include <stdexcept>

namespace bpmm {

/// Correlations are clipped to |rho| <= 1 - kCorrClipEps before the Fisher
/// transform; the bivariate Gaussian likelihood is singular at |rho| = 1.
inline constexpr double kCorrClipEps = 1e-6;

template <typename Scalar>
Scalar clip_correlation(Scalar rho) {
  const Scalar lim = Scalar(1) - Scalar(kCorrClipEps);
  if (rho > lim) return lim;
  if (rho < -lim) return -lim;
  return rho;
}

/// Fisher z-transform arctanh(rho), clipping near +-1 so the result is
/// always finite.
template <typename Scalar>
Scalar fisher_transform(Scalar rho) {
  return std::atanh(clip_correlation(rho));
}

template <typename Scalar>
Scalar inverse_fisher(Scalar z) {
  return std::tanh(z);
}

inline int n_edges(int V) { return V * (V - 1) / 2; }

/// Row-major upper-triangle edge ordinal for 0 <= j < l < V, mapping onto
/// [0, V(V-1)/2). All edge-indexed tensors share this ordering.
inline int edge_index(int j, int l, int V) {
  if (j < 0 || l <= j || l >= V)
    throw std::invalid_argument("edge_index requires 0 <= j < l < V");
  return j * V - j * (j + 1) / 2 + (l - j - 1);
}

/// Inverse of edge_index.
inline void edge_nodes(int e, int V, int& j, int& l) {
  if (e < 0 || e >= n_edges(V)) throw std::invalid_argument("edge ordinal out of range");
  int row = 0;
  int acc = 0;
  while (acc + (V - 1 - row) <= e) {
    acc += V - 1 - row;
    ++row;
  }
  j = row;
  l = row + 1 + (e - acc);
}

}  // namespace bpmm

#endif
