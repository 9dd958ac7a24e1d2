#pragma once

// Pointwise derivative bundles of polynomial fields.
//
// Complex derivatives are taken in the unitary frame E_j = sqrt(2) d/dz_j, so
//   u_i     = sqrt(2) du/dz_i
//   u_{ij'} = 2 d^2u/dz_i dzbar_j
// and the trace of the complex Hessian is half the real Laplacian.

#include <cmath>
#include <map>
#include <span>
#include <tuple>
#include <vector>

#include "khess/hessalg.hpp"
#include "khess/polyfield.hpp"

namespace khess {

inline constexpr double kSqrt2 = 1.41421356237309504880;

/// Third derivative slot u_{i j' k} (k_bar = false) or u_{i j' k'} (k_bar = true).
struct ThirdIndex {
  int i, j, k;
  bool k_bar;
  friend bool operator<(const ThirdIndex& a, const ThirdIndex& b) {
    return std::tie(a.i, a.j, a.k, a.k_bar) < std::tie(b.i, b.j, b.k, b.k_bar);
  }
};

struct FieldJet {
  double value = 0.0;
  RVec real_gradient;
  RMat real_hessian;
  CVec dz;     // u_i
  CVec dzbar;  // u_{i'}
  HermitianMatrix complex_hessian;
  std::map<ThirdIndex, cplx> third;
};

/// Value, gradient and Hessian in real coordinates. Linear in the field, so
/// samples of several fields can be combined without re-evaluation.
struct RealJet {
  double value = 0.0;
  RVec grad;
  RMat hess;

  RealJet& axpy(double a, const RealJet& o) {
    value += a * o.value;
    grad += a * o.grad;
    hess += a * o.hess;
    return *this;
  }
};

/// Complex Hessian u_{ij'} from the real one, without symmetrization.
inline CMat complex_hessian_raw(const RMat& h) {
  const auto n = h.rows() / 2;
  CMat m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      m(i, j) = 0.5 * cplx(h(2 * i, 2 * j) + h(2 * i + 1, 2 * j + 1),
                           h(2 * i, 2 * j + 1) - h(2 * i + 1, 2 * j));
  return m;
}

/// u_i from the real gradient.
inline CVec complex_gradient(const RVec& g) {
  const auto n = g.size() / 2;
  CVec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = cplx(g(2 * i), -g(2 * i + 1)) / kSqrt2;
  return v;
}

inline FieldJet to_field_jet(const RealJet& r) {
  FieldJet j;
  j.value = r.value;
  j.real_gradient = r.grad;
  j.real_hessian = r.hess;
  j.dz = complex_gradient(r.grad);
  j.dzbar = j.dz.conjugate();
  j.complex_hessian = HermitianMatrix::symmetrize(complex_hessian_raw(r.hess));
  return j;
}

/// Derivative polynomials of a real field, built once and evaluated at many points.
class FieldDerivs {
 public:
  FieldDerivs() = default;
  explicit FieldDerivs(const PolyField& p) : f_(p.real_part()) {
    const int m = f_.vars();
    grad_.reserve(m);
    for (int a = 0; a < m; ++a) grad_.push_back(f_.d(a));
    hess_.resize(static_cast<std::size_t>(m) * m);
    for (int a = 0; a < m; ++a)
      for (int b = a; b < m; ++b) hess_[a * m + b] = grad_[a].d(b);
  }

  const PolyField& field() const { return f_; }

  RealJet eval(std::span<const double> pt) const {
    const int m = f_.vars();
    RealJet r;
    r.value = f_.eval_real(pt);
    r.grad.resize(m);
    r.hess.resize(m, m);
    for (int a = 0; a < m; ++a) r.grad(a) = grad_[a].eval_real(pt);
    for (int a = 0; a < m; ++a)
      for (int b = a; b < m; ++b) r.hess(a, b) = r.hess(b, a) = hess_[a * m + b].eval_real(pt);
    return r;
  }

 private:
  PolyField f_;
  std::vector<PolyField> grad_;
  std::vector<PolyField> hess_;
};

/// Frame derivative E_i = sqrt(2) d/dz_i of a polynomial.
inline PolyField frame_dz(const PolyField& p, int i) { return kSqrt2 * p.dz(i); }
/// Frame derivative conj(E_i) = sqrt(2) d/dzbar_i of a polynomial.
inline PolyField frame_dzbar(const PolyField& p, int i) { return kSqrt2 * p.dzbar(i); }

/// All derivative slots of P at pt by exact differentiation. The real
/// gradient and Hessian use the real part of P.
inline FieldJet jet(const PolyField& p, std::span<const double> pt, bool want_third = false) {
  detail::require(static_cast<int>(pt.size()) == p.vars(), "jet: point dimension mismatch");
  FieldJet j = to_field_jet(FieldDerivs(p).eval(pt));
  if (want_third) {
    const int n = p.n();
    for (int i = 0; i < n; ++i)
      for (int b = 0; b < n; ++b) {
        const PolyField uij = frame_dzbar(frame_dz(p, i), b);
        for (int k = 0; k < n; ++k) {
          j.third[{i, b, k, false}] = frame_dz(uij, k).eval(pt);
          j.third[{i, b, k, true}] = frame_dzbar(uij, k).eval(pt);
        }
      }
  }
  return j;
}

/// Trace of the complex Hessian at pt.
inline double complex_laplacian(const PolyField& p, std::span<const double> pt) {
  return jet(p, pt).complex_hessian.matrix().trace().real();
}

/// Exact complex Hessian entries u_{ij'} as polynomials.
inline std::vector<std::vector<PolyField>> complex_hessian_poly(const PolyField& p) {
  const int n = p.n();
  std::vector<std::vector<PolyField>> h(n, std::vector<PolyField>(n, PolyField(n)));
  for (int i = 0; i < n; ++i) {
    const PolyField ui = frame_dz(p, i);
    for (int j = 0; j < n; ++j) h[i][j] = frame_dzbar(ui, j);
  }
  return h;
}

}  // namespace khess
