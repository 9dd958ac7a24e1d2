#pragma once

// Newton transformation tensor of a complex Hessian, built symbolically so
// its derivatives are exact.

#include <random>
#include <vector>

#include "khess/jet.hpp"

namespace khess {

using PolyMatrix = std::vector<std::vector<PolyField>>;

namespace detail {

inline PolyMatrix poly_identity(int n, const PolyField& s) {
  PolyMatrix m(n, std::vector<PolyField>(n, PolyField(s.n())));
  for (int i = 0; i < n; ++i) m[i][i] = s;
  return m;
}

inline PolyMatrix poly_mul(const PolyMatrix& a, const PolyMatrix& b) {
  const int n = static_cast<int>(a.size());
  const int nv = a[0][0].n();
  PolyMatrix c(n, std::vector<PolyField>(n, PolyField(nv)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l) c[i][j] += a[i][l] * b[l][j];
  return c;
}

}  // namespace detail

/// T_k(D u) entrywise as polynomials, with the same orientation as
/// newton_tensor: entry (j, i) is d sigma_{k+1} / d u_{ij'}.
inline PolyMatrix newton_tensor_poly(const PolyField& u, int k) {
  const int n = u.n();
  detail::require_range(k >= 0 && k <= n - 1, "newton_tensor_poly: k must lie in [0, n-1]");
  const PolyMatrix a = complex_hessian_poly(u);
  PolyMatrix t = detail::poly_identity(n, PolyField::constant(n, 1.0));
  for (int m = 1; m <= k; ++m) {
    PolyMatrix at = detail::poly_mul(a, t);
    PolyField sigma(n);
    for (int i = 0; i < n; ++i) sigma += at[i][i];
    sigma *= 1.0 / m;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) at[i][j] = -at[i][j];
    for (int i = 0; i < n; ++i) at[i][i] += sigma;
    t = std::move(at);
  }
  return t;
}

struct DivergenceResidual {
  double barred = 0.0;    // max |sum_i conj(Z_i) T_{ij'}| over points and j
  double unbarred = 0.0;  // max |sum_j Z_j T_{ij'}| over points and i
};

/// Evaluates both divergences of T_k(D u) at `points` seeded random points
/// of the ball of radius R.
inline DivergenceResidual newton_divergence(const PolyField& u, int k, int points,
                                            unsigned long long seed, double R = 1.0) {
  const int n = u.n();
  const PolyMatrix t = newton_tensor_poly(u, k);
  std::vector<PolyField> div_bar(n, PolyField(n)), div(n, PolyField(n));
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) div_bar[j] += frame_dzbar(t[i][j], i);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) div[i] += frame_dz(t[i][j], j);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  DivergenceResidual r;
  std::vector<double> p(2 * n);
  for (int s = 0; s < points; ++s) {
    double norm = 0.0;
    for (auto& c : p) {
      c = g(rng);
      norm += c * c;
    }
    const double scale = R * std::pow(unif(rng), 1.0 / (2 * n)) / std::sqrt(norm);
    for (auto& c : p) c *= scale;
    for (int a = 0; a < n; ++a) {
      r.barred = std::max(r.barred, std::abs(div_bar[a].eval(p)));
      r.unbarred = std::max(r.unbarred, std::abs(div[a].eval(p)));
    }
  }
  return r;
}

}  // namespace khess
