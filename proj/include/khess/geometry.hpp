#pragma once

// Level-set boundary geometry: adapted unitary frames, the second fundamental
// form, and the boundary operators acting on traces of ambient fields.
//
// A (1,0) vector Z = sum_j zeta_j E_j is stored by its coefficients zeta.
// Its real coordinates are zeta_j / sqrt(2) on x_j and -i zeta_j / sqrt(2) on y_j.

#include <cmath>
#include <string>
#include <vector>

#include "khess/jet.hpp"
#include "khess/newton_poly.hpp"
#include "khess/quadrature.hpp"

namespace khess {

enum class DomainKind { ball, level_set };

struct DomainSpec {
  int n = 0;
  PolyField rho;
  DomainKind kind = DomainKind::ball;
  double R = 1.0;  // meaningful for balls only

  static DomainSpec ball(int n, double R) {
    detail::require(R > 0.0, "DomainSpec::ball: radius must be positive");
    return {n, PolyField::abs2(n) - PolyField::constant(n, R * R), DomainKind::ball, R};
  }
  static DomainSpec level_set(const PolyField& rho) {
    detail::require(rho.is_real(), "DomainSpec::level_set: defining function must be real");
    return {rho.n(), rho, DomainKind::level_set, 0.0};
  }
};

struct BoundaryFrame {
  RVec p;
  RVec nu;
  RVec T;
  CVec Zn;  // coefficients of Z_n, equal to nu_x + i nu_y per coordinate
  CMat Z;   // n x (n-1); column a holds Z_a
  double grad_norm = 0.0;
};

struct ShapeData {
  RMat L_real;  // (2n-1) square in the basis X_1, JX_1, .., X_{n-1}, JX_{n-1}, T
  CMat L_H;     // L(Z_a, conj Z_b)
  CVec L_ZT;    // L(Z_a, T)
  double H = 0.0;
  double Hb = 0.0;
  RMat A;       // Hess(rho) / |grad rho| in ambient real coordinates
};

/// Real 2n-vector of the (1,0) vector with coefficients zeta (complex entries).
inline CVec real_coords(const CVec& zeta) {
  const auto n = zeta.size();
  CVec r(2 * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    r(2 * j) = zeta(j) / kSqrt2;
    r(2 * j + 1) = cplx(0, -1) * zeta(j) / kSqrt2;
  }
  return r;
}

/// J(a, b) = (-b, a) in each complex coordinate.
inline RVec apply_J(const RVec& v) {
  RVec r(v.size());
  for (Eigen::Index j = 0; j < v.size() / 2; ++j) {
    r(2 * j) = -v(2 * j + 1);
    r(2 * j + 1) = v(2 * j);
  }
  return r;
}

inline BoundaryFrame adapted_frame(const DomainSpec& spec, std::span<const double> p) {
  const int n = spec.n;
  detail::require(static_cast<int>(p.size()) == 2 * n, "adapted_frame: point dimension mismatch");
  const double level = std::abs(spec.rho.eval_real(p));
  detail::require(level <= 1e-10 * (1.0 + spec.rho.max_coeff()),
                  "adapted_frame: point is off the boundary (|rho| = " + std::to_string(level) + ")");
  BoundaryFrame f;
  f.p = Eigen::Map<const RVec>(p.data(), 2 * n);
  RVec g(2 * n);
  for (int a = 0; a < 2 * n; ++a) g(a) = spec.rho.d(a).eval_real(p);
  f.grad_norm = g.norm();
  if (!(f.grad_norm > 1e-12)) throw ValidationError("adapted_frame: vanishing gradient of rho");
  f.nu = g / f.grad_norm;
  f.T = apply_J(f.nu);
  f.Zn.resize(n);
  for (int j = 0; j < n; ++j) f.Zn(j) = cplx(f.nu(2 * j), f.nu(2 * j + 1));

  // Largest-pivot Gram-Schmidt of the standard basis projected off Z_n.
  std::vector<CVec> cand;
  for (int j = 0; j < n; ++j) {
    CVec e = CVec::Zero(n);
    e(j) = 1.0;
    cand.push_back(e - std::conj(f.Zn(j)) * f.Zn);
  }
  std::vector<bool> used(n, false);
  f.Z.resize(n, n - 1);
  for (int a = 0; a < n - 1; ++a) {
    int best = -1;
    double best_norm = -1.0;
    for (int j = 0; j < n; ++j) {
      if (used[j]) continue;
      const double nj = cand[j].norm();
      if (nj > best_norm) {
        best_norm = nj;
        best = j;
      }
    }
    used[best] = true;
    const CVec z = cand[best] / best_norm;
    f.Z.col(a) = z;
    for (int j = 0; j < n; ++j)
      if (!used[j]) cand[j] -= z.dot(cand[j]) * z;
  }
  return f;
}

inline ShapeData shape_operator(const DomainSpec& spec, std::span<const double> p,
                                const BoundaryFrame& f) {
  const int n = spec.n;
  ShapeData s;
  s.A.resize(2 * n, 2 * n);
  for (int a = 0; a < 2 * n; ++a) {
    const PolyField da = spec.rho.d(a);
    for (int b = a; b < 2 * n; ++b) s.A(a, b) = s.A(b, a) = da.d(b).eval_real(p);
  }
  s.A /= f.grad_norm;

  RMat basis(2 * n, 2 * n - 1);
  for (int a = 0; a < n - 1; ++a) {
    const CVec zeta = f.Z.col(a);
    RVec X(2 * n);
    for (int j = 0; j < n; ++j) {
      X(2 * j) = zeta(j).real();
      X(2 * j + 1) = zeta(j).imag();
    }
    basis.col(2 * a) = X;
    basis.col(2 * a + 1) = apply_J(X);
  }
  basis.col(2 * n - 2) = f.T;
  s.L_real = basis.transpose() * s.A * basis;

  s.L_H.resize(n - 1, n - 1);
  s.L_ZT.resize(n - 1);
  const CMat Ac = s.A.cast<cplx>();
  const CVec Tc = f.T.cast<cplx>();
  for (int a = 0; a < n - 1; ++a) {
    const CVec ra = real_coords(f.Z.col(a));
    for (int b = 0; b < n - 1; ++b) s.L_H(a, b) = (ra.transpose() * Ac * real_coords(f.Z.col(b)).conjugate()).value();
    s.L_ZT(a) = (ra.transpose() * Ac * Tc).value();
  }
  s.H = s.L_real.trace();
  s.Hb = s.H - f.T.dot(s.A * f.T);
  return s;
}

/// Frame and shape data at one boundary point.
struct BoundaryPoint {
  BoundaryFrame frame;
  ShapeData shape;
};

inline BoundaryPoint boundary_point(const DomainSpec& spec, std::span<const double> p) {
  BoundaryPoint b;
  b.frame = adapted_frame(spec, p);
  b.shape = shape_operator(spec, p, b.frame);
  return b;
}

/// Frame and shape data at every boundary node of a ball rule.
inline std::vector<BoundaryPoint> boundary_geometry(const DomainSpec& spec, const QuadratureRule& rule) {
  detail::require(spec.kind == DomainKind::ball && spec.n == rule.n && std::abs(spec.R - rule.R) < 1e-14,
                  "boundary_geometry: quadrature rule and domain disagree");
  std::vector<BoundaryPoint> out;
  out.reserve(rule.boundary.size());
  for (int i = 0; i < rule.boundary.size(); ++i) out.push_back(boundary_point(spec, rule.boundary.point(i)));
  return out;
}

// ---------------------------------------------------------------------------
// Boundary operators on traces.

inline double normal_derivative(const FieldJet& u, const BoundaryFrame& f) { return u.real_gradient.dot(f.nu); }
inline double T_derivative(const FieldJet& u, const BoundaryFrame& f) { return u.real_gradient.dot(f.T); }

/// D^{1,1}u restricted to the complex tangent space: entry (a, b) = u(Z_a, conj Z_b).
inline CMat restricted_hessian(const FieldJet& u, const BoundaryFrame& f) {
  return f.Z.transpose() * u.complex_hessian.matrix() * f.Z.conjugate();
}

/// D^{1,1}u|_H - u_nu L|_H.
inline HermitianMatrix boundary_hessian(const FieldJet& u, const BoundaryFrame& f, const ShapeData& s) {
  return HermitianMatrix::symmetrize(restricted_hessian(u, f) - normal_derivative(u, f) * s.L_H);
}

/// u_{a'} = conj(Z_a) u for every tangential index a.
inline CVec tangential_dzbar(const FieldJet& u, const BoundaryFrame& f) { return f.Z.adjoint() * u.dzbar; }

/// w = sum_a u_{a'} L(Z_a, T).
inline cplx tangential_torsion(const FieldJet& u, const BoundaryFrame& f, const ShapeData& s) {
  return (tangential_dzbar(u, f).transpose() * s.L_ZT).value();
}

/// Kohn Laplacian of the trace of u, computed from ambient derivatives.
inline cplx kohn_laplacian(const FieldJet& u, const BoundaryFrame& f, const ShapeData& s) {
  const double unu = normal_derivative(u, f);
  const cplx tangential = restricted_hessian(u, f).trace() - unu * s.L_H.trace();
  return tangential - cplx(0, 0.5) * s.Hb * T_derivative(u, f) + cplx(0, 1) * tangential_torsion(u, f, s);
}

/// Real part of the Kohn Laplacian.
inline double sublaplacian_of_trace(const FieldJet& u, const BoundaryFrame& f, const ShapeData& s) {
  return kohn_laplacian(u, f, s).real();
}

/// u_{n n'} = u(Z_n, conj Z_n).
inline double normal_normal_hessian(const FieldJet& u, const BoundaryFrame& f) {
  return (f.Zn.transpose() * u.complex_hessian.matrix() * f.Zn.conjugate()).value().real();
}

struct TnnSides {
  double lhs = 0.0;
  double rhs = 0.0;
};

/// lhs = Delta u - u_{nn'}; rhs = Delta_b u - i w + i conj(w) + H_b u_nu / 2.
inline TnnSides tnn_cross_check(const FieldJet& u, const BoundaryFrame& f, const ShapeData& s) {
  TnnSides r;
  r.lhs = u.complex_hessian.matrix().trace().real() - normal_normal_hessian(u, f);
  const cplx w = tangential_torsion(u, f, s);
  const cplx rhs = sublaplacian_of_trace(u, f, s) - cplx(0, 1) * w + cplx(0, 1) * std::conj(w) +
                   0.5 * s.Hb * normal_derivative(u, f);
  r.rhs = rhs.real();
  return r;
}

/// |(Delta u - u_{nn'}) - (Kohn u - i w + H_b u_{n'} / sqrt 2)|, complex.
inline double laplacian_relation_residual(const FieldJet& u, const BoundaryFrame& f, const ShapeData& s) {
  const double lhs = u.complex_hessian.matrix().trace().real() - normal_normal_hessian(u, f);
  const cplx u_nbar = (f.Zn.adjoint() * u.dzbar).value();
  const cplx rhs = kohn_laplacian(u, f, s) - cplx(0, 1) * tangential_torsion(u, f, s) + s.Hb * u_nbar / kSqrt2;
  return std::abs(lhs - rhs);
}

// ---------------------------------------------------------------------------
// Divergence theorem in the unitary frame.

struct DivergenceReport {
  cplx lhs = 0.0;
  cplx rhs = 0.0;
  double residual = 0.0;
  double scale = 1.0;  // 1 + integral of |boundary integrand|
};

/// Integrates sum_i conj(Z_i) a_i over the ball and a(Z_n) / sqrt 2 over the
/// sphere for a_i = u * sum_j v_{j'} T_k(D w)_{i j'}.
inline DivergenceReport verify_divergence_identity(const DomainSpec& spec, const QuadratureRule& rule,
                                                   const PolyField& u, const PolyField& v,
                                                   const PolyField& w, int k) {
  const int n = spec.n;
  detail::require(u.n() == n && v.n() == n && w.n() == n, "verify_divergence_identity: dimension mismatch");
  detail::require(spec.kind == DomainKind::ball && rule.n == n && std::abs(spec.R - rule.R) < 1e-14,
                  "verify_divergence_identity: quadrature rule and domain disagree");
  const PolyMatrix t = newton_tensor_poly(w, k);
  std::vector<PolyField> a(n, PolyField(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a[i] += frame_dzbar(v, j) * t[i][j];
    a[i] = u * a[i];
  }
  PolyField div(n);
  for (int i = 0; i < n; ++i) div += frame_dzbar(a[i], i);

  DivergenceReport r;
  for (int q = 0; q < rule.interior.size(); ++q) r.lhs += rule.interior.weights(q) * div.eval(rule.interior.point(q));
  double abs_sum = 0.0;
  for (int q = 0; q < rule.boundary.size(); ++q) {
    const auto p = rule.boundary.point(q);
    const BoundaryFrame f = adapted_frame(spec, p);
    cplx an = 0.0;
    for (int i = 0; i < n; ++i) an += f.Zn(i) * a[i].eval(p);
    r.rhs += rule.boundary.weights(q) * an / kSqrt2;
    abs_sum += rule.boundary.weights(q) * std::abs(an) / kSqrt2;
  }
  r.residual = std::abs(r.lhs - r.rhs);
  r.scale = 1.0 + abs_sum;
  return r;
}

inline DivergenceReport verify_divergence_identity(const DomainSpec& spec, const QuadratureRule& rule,
                                                   const PolyField& u, const PolyField& v, int k) {
  return verify_divergence_identity(spec, rule, u, v, u, k);
}

}  // namespace khess
