#pragma once

// Elementary symmetric functions of Hermitian matrices, their polarizations,
// Newton transformation tensors and the positive k-cones.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "khess/error.hpp"

namespace khess {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

/// Eigenvalues of a Hermitian matrix, sorted descending.
struct SpectrumVector {
  std::vector<double> values;
};

/// n x n complex Hermitian matrix. Entries are stored symmetrized, so
/// entry (j, i) is exactly the conjugate of entry (i, j).
class HermitianMatrix {
 public:
  HermitianMatrix() = default;

  /// Validates |M - M*| <= tol (1 + |M|) and stores (M + M*) / 2.
  static HermitianMatrix from_raw(const CMat& m, double tol = 1e-10) {
    detail::require(m.rows() == m.cols(), "HermitianMatrix: matrix is not square");
    const double gap = (m - m.adjoint()).cwiseAbs().maxCoeff();
    const double size = m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
    if (m.size() > 0 && !(gap <= tol * (1.0 + size)))
      throw ValidationError("HermitianMatrix: input is not Hermitian (|M - M*| = " +
                            std::to_string(gap) + ")");
    return symmetrize(m);
  }

  /// Stores (M + M*) / 2 without validation.
  static HermitianMatrix symmetrize(const CMat& m) {
    detail::require(m.rows() == m.cols(), "HermitianMatrix: matrix is not square");
    HermitianMatrix h;
    h.m_ = 0.5 * (m + m.adjoint());
    return h;
  }

  static HermitianMatrix identity(int n) { return symmetrize(CMat::Identity(n, n)); }
  static HermitianMatrix zero(int n) { return symmetrize(CMat::Zero(n, n)); }

  static HermitianMatrix diagonal(std::span<const double> d) {
    CMat m = CMat::Zero(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return symmetrize(m);
  }
  static HermitianMatrix diagonal(std::initializer_list<double> d) {
    return diagonal(std::span<const double>(d.begin(), d.size()));
  }

  int dim() const { return static_cast<int>(m_.rows()); }
  const CMat& matrix() const { return m_; }
  cplx operator()(int i, int j) const { return m_(i, j); }

  friend HermitianMatrix operator+(const HermitianMatrix& a, const HermitianMatrix& b) {
    detail::require(a.dim() == b.dim(), "HermitianMatrix: dimension mismatch");
    HermitianMatrix h;
    h.m_ = a.m_ + b.m_;
    return h;
  }
  friend HermitianMatrix operator*(double s, const HermitianMatrix& a) {
    HermitianMatrix h;
    h.m_ = s * a.m_;
    return h;
  }

 private:
  CMat m_;
};

/// Signs sigma_1 .. sigma_k of the spectrum and the strict positivity test.
struct ConeReport {
  std::vector<double> sigmas;
  bool in_cone = false;
};

// ---------------------------------------------------------------------------
// Scalar helpers on eigenvalue lists.

/// e_k(values) with e_0 = 1 and e_k = 0 for k > size.
inline double elementary_symmetric(std::span<const double> values, int k) {
  if (k < 0) return 0.0;
  if (k == 0) return 1.0;
  if (k > static_cast<int>(values.size())) return 0.0;
  std::vector<double> e(static_cast<std::size_t>(k) + 1, 0.0);
  e[0] = 1.0;
  int filled = 0;
  for (double lambda : values) {
    filled = std::min(filled + 1, k);
    for (int j = filled; j >= 1; --j) e[j] += lambda * e[j - 1];
  }
  return e[k];
}

/// All of e_0 .. e_kmax in one pass.
inline std::vector<double> elementary_symmetric_all(std::span<const double> values, int kmax) {
  std::vector<double> e(static_cast<std::size_t>(std::max(kmax, 0)) + 1, 0.0);
  e[0] = 1.0;
  for (double lambda : values)
    for (int j = kmax; j >= 1; --j) e[j] += lambda * e[j - 1];
  return e;
}

namespace detail {

inline std::vector<double> hermitian_eigenvalues(const CMat& a) {
  const auto n = a.rows();
  if (n == 0) return {};
  if (n == 1) return {a(0, 0).real()};
  Eigen::SelfAdjointEigenSolver<CMat> es(a, Eigen::EigenvaluesOnly);
  const RVec& ev = es.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

inline double sigma_raw(const CMat& a, int k) {
  if (k < 0 || k > a.rows()) return k == 0 ? 1.0 : 0.0;
  if (k == 0) return 1.0;
  const auto ev = hermitian_eigenvalues(a);
  return elementary_symmetric(ev, k);
}

inline double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

// Inclusion-exclusion multilinearization of a degree-k homogeneous map F:
//   F(A_1, .., A_k) = (1/k!) sum_{S} (-1)^{k-|S|} F(sum_{i in S} A_i).
template <class Value, class Eval>
Value polarize(const std::vector<const CMat*>& args, Eval&& eval, const Value& zero) {
  const int k = static_cast<int>(args.size());
  const auto n = args.front()->rows();
  Value acc = zero;
  CMat sum(n, n);
  for (unsigned mask = 1; mask < (1u << k); ++mask) {
    sum.setZero();
    int count = 0;
    for (int i = 0; i < k; ++i)
      if (mask & (1u << i)) {
        sum += *args[i];
        ++count;
      }
    const double sign = ((k - count) % 2 == 0) ? 1.0 : -1.0;
    acc += sign * eval(sum);
  }
  return acc / factorial(k);
}

inline void check_same_dim(const std::vector<HermitianMatrix>& as) {
  for (const auto& a : as)
    require(a.dim() == as.front().dim(), "polarization: dimension mismatch");
}

inline std::vector<const CMat*> raw_args(const std::vector<HermitianMatrix>& as) {
  std::vector<const CMat*> out;
  out.reserve(as.size());
  for (const auto& a : as) out.push_back(&a.matrix());
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Operations.

inline SpectrumVector spectrum(const HermitianMatrix& a) {
  auto ev = detail::hermitian_eigenvalues(a.matrix());
  std::sort(ev.begin(), ev.end(), std::greater<>());
  return {std::move(ev)};
}

/// sigma_k of the eigenvalues of A. sigma_0 = 1 and sigma_k = 0 for k > n.
inline double sigma_k(const HermitianMatrix& a, int k) {
  detail::require_range(k >= 0, "sigma_k: k must be nonnegative");
  return detail::sigma_raw(a.matrix(), k);
}

/// Polarized sigma_k(A_1, .., A_k) through inclusion-exclusion; an empty list
/// yields sigma_0 = 1.
inline double sigma_k_polarized(const std::vector<HermitianMatrix>& as) {
  if (as.empty()) return 1.0;
  detail::check_same_dim(as);
  const int k = static_cast<int>(as.size());
  if (k > as.front().dim()) return 0.0;
  return detail::polarize<double>(
      detail::raw_args(as), [k](const CMat& s) { return detail::sigma_raw(s, k); }, 0.0);
}

/// Newton transformation tensor T_k(A) = sigma_k(A) I - A T_{k-1}(A), T_0 = I.
/// Entry (j, i) of the result is dsigma_{k+1}/dA_{i j}.
inline CMat newton_tensor_raw(const CMat& a, int k) {
  const auto n = a.rows();
  const auto ev = detail::hermitian_eigenvalues(a);
  const auto sig = elementary_symmetric_all(ev, k);
  CMat t = CMat::Identity(n, n);
  for (int j = 1; j <= k; ++j) t = sig[j] * CMat::Identity(n, n) - a * t;
  return t;
}

inline HermitianMatrix newton_tensor(const HermitianMatrix& a, int k) {
  detail::require_range(k >= 0 && k <= a.dim() - 1, "newton_tensor: k must lie in [0, n-1]");
  return HermitianMatrix::symmetrize(newton_tensor_raw(a.matrix(), k));
}

inline HermitianMatrix newton_tensor_polarized(const std::vector<HermitianMatrix>& as, int n) {
  if (as.empty()) return HermitianMatrix::identity(n);
  detail::check_same_dim(as);
  const int k = static_cast<int>(as.size());
  detail::require_range(k <= as.front().dim() - 1, "newton_tensor_polarized: k must be <= n-1");
  const auto dim = as.front().dim();
  CMat t = detail::polarize<CMat>(
      detail::raw_args(as), [k](const CMat& s) { return newton_tensor_raw(s, k); },
      CMat::Zero(dim, dim));
  return HermitianMatrix::symmetrize(t);
}

inline HermitianMatrix newton_tensor_polarized(const std::vector<HermitianMatrix>& as) {
  detail::require(!as.empty(), "newton_tensor_polarized: empty list needs an explicit dimension");
  return newton_tensor_polarized(as, as.front().dim());
}

/// sigma_1 .. sigma_k of A and whether all are strictly positive.
inline ConeReport cone_membership(const HermitianMatrix& a, int k) {
  detail::require_range(k >= 1 && k <= a.dim(), "cone_membership: k must lie in [1, n]");
  const auto ev = detail::hermitian_eigenvalues(a.matrix());
  const auto e = elementary_symmetric_all(ev, k);
  ConeReport r;
  r.sigmas.assign(e.begin() + 1, e.end());
  r.in_cone = std::all_of(r.sigmas.begin(), r.sigmas.end(), [](double s) { return s > 0.0; });
  return r;
}

/// Closure test sigma_j >= -slack for j = 1..k on raw Hermitian input.
inline double cone_closure_margin(const CMat& a, int k) {
  const auto ev = detail::hermitian_eigenvalues(a);
  const auto e = elementary_symmetric_all(ev, k);
  return *std::min_element(e.begin() + 1, e.end());
}

/// Max-entry gap between T_k(A) and a central finite-difference estimate of
/// dsigma_{k+1}/dA taken along Hermitian real and imaginary directions.
inline double linearization_residual(const HermitianMatrix& a, int k, double h) {
  const int n = a.dim();
  detail::require_range(k >= 0 && k + 1 <= n, "linearization_residual: need 1 <= k+1 <= n");
  detail::require(h > 0.0, "linearization_residual: step must be positive");
  const CMat& base = a.matrix();
  auto sig = [&](const CMat& d, double s) { return detail::sigma_raw(base + s * d, k + 1); };
  auto central = [&](const CMat& d) { return (sig(d, h) - sig(d, -h)) / (2.0 * h); };

  // fd(j, i) approximates dsigma/dA_{ij}; T_k stores that derivative at (j, i).
  CMat fd = CMat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    CMat d = CMat::Zero(n, n);
    d(i, i) = 1.0;
    fd(i, i) = central(d);
    for (int j = i + 1; j < n; ++j) {
      CMat re = CMat::Zero(n, n), im = CMat::Zero(n, n);
      re(i, j) = re(j, i) = 1.0;
      im(i, j) = cplx(0, 1);
      im(j, i) = cplx(0, -1);
      const double dre = central(re), dim = central(im);
      fd(j, i) = 0.5 * cplx(dre, -dim);
      fd(i, j) = 0.5 * cplx(dre, dim);
    }
  }
  const CMat t = newton_tensor_raw(base, k);
  return (t - fd).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// Brute-force generalized Kronecker delta evaluation. Factorial cost, so it is
// capped at n <= 4 and k <= 4 and used only to cross-check the fast paths.

namespace oracle {

inline constexpr int kMaxDim = 4;

namespace detail {

inline int permutation_sign(const std::vector<int>& p) {
  int sign = 1;
  std::vector<bool> seen(p.size(), false);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (seen[i]) continue;
    std::size_t len = 0;
    for (std::size_t j = i; !seen[j]; j = static_cast<std::size_t>(p[j])) {
      seen[j] = true;
      ++len;
    }
    if (len % 2 == 0) sign = -sign;
  }
  return sign;
}

// Calls f(upper, lower, sign) for every pair of index tuples with the same
// entries; sign is delta^{upper}_{lower}.
template <class F>
void for_each_delta(int n, int len, F&& f) {
  std::vector<int> upper(len);
  std::vector<int> perm(len);
  std::vector<int> lower(len);
  auto recurse = [&](auto&& self, int pos, unsigned used) -> void {
    if (pos == len) {
      std::iota(perm.begin(), perm.end(), 0);
      do {
        for (int m = 0; m < len; ++m) lower[m] = upper[perm[m]];
        f(upper, lower, permutation_sign(perm));
      } while (std::next_permutation(perm.begin(), perm.end()));
      return;
    }
    for (int i = 0; i < n; ++i) {
      if (used & (1u << i)) continue;
      upper[pos] = i;
      self(self, pos + 1, used | (1u << i));
    }
  };
  recurse(recurse, 0, 0u);
}

inline void check_limits(const std::vector<HermitianMatrix>& as, int extra) {
  const int n = as.empty() ? 0 : as.front().dim();
  const int k = static_cast<int>(as.size());
  if (n > kMaxDim || k + extra > kMaxDim + extra || k > kMaxDim)
    throw OracleLimitError("delta oracle limit: requires n <= 4 and k <= 4 (got n = " +
                           std::to_string(n) + ", k = " + std::to_string(k) + ")");
  for (const auto& a : as)
    khess::detail::require(a.dim() == n, "delta oracle: dimension mismatch");
}

}  // namespace detail

/// (1/k!) delta^{i_1..i_k}_{j_1..j_k} (A_1)_{i_1 j_1} .. (A_k)_{i_k j_k}.
inline double sigma_k_delta(const std::vector<HermitianMatrix>& as, double imag_tol = 1e-9) {
  if (as.empty()) return 1.0;
  detail::check_limits(as, 0);
  const int n = as.front().dim();
  const int k = static_cast<int>(as.size());
  if (k > n) return 0.0;
  cplx acc = 0.0;
  detail::for_each_delta(n, k, [&](const std::vector<int>& up, const std::vector<int>& lo, int sign) {
    cplx prod = static_cast<double>(sign);
    for (int m = 0; m < k; ++m) prod *= as[m](up[m], lo[m]);
    acc += prod;
  });
  acc /= khess::detail::factorial(k);
  if (std::abs(acc.imag()) > imag_tol * (1.0 + std::abs(acc.real())))
    throw ValidationError("sigma_k_delta: imaginary residue " + std::to_string(acc.imag()));
  return acc.real();
}

/// Matrix with entry (j, i) = (1/k!) delta^{i i_1..i_k}_{j j_1..j_k} prod (A_m)_{i_m j_m}.
inline CMat newton_tensor_delta(const std::vector<HermitianMatrix>& as, int n) {
  if (!as.empty()) n = as.front().dim();
  if (n > kMaxDim) throw OracleLimitError("delta oracle limit: requires n <= 4");
  detail::check_limits(as, 1);
  const int k = static_cast<int>(as.size());
  CMat t = CMat::Zero(n, n);
  if (k + 1 > n) return t;
  detail::for_each_delta(n, k + 1, [&](const std::vector<int>& up, const std::vector<int>& lo, int sign) {
    cplx prod = static_cast<double>(sign);
    for (int m = 0; m < k; ++m) prod *= as[m](up[m + 1], lo[m + 1]);
    t(lo[0], up[0]) += prod;
  });
  return t / khess::detail::factorial(k);
}

}  // namespace oracle
}  // namespace khess
