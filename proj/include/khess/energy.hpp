#pragma once

// The k-Hessian energy E_{k+1}: interior integral, boundary functionals S_i,
// boundary density Q_k, and the simplified k = 2 form.

#include <cmath>
#include <complex>
#include <map>
#include <ostream>
#include <vector>

#include <nlohmann/json.hpp>

#include "khess/geometry.hpp"

namespace khess {

/// A ball quadrature rule with its boundary geometry precomputed.
struct Discretization {
  DomainSpec domain;
  QuadratureRule rule;
  std::vector<BoundaryPoint> geom;

  static Discretization make(QuadratureRule rule) {
    Discretization d;
    d.domain = DomainSpec::ball(rule.n, rule.R);
    d.geom = boundary_geometry(d.domain, rule);
    d.rule = std::move(rule);
    return d;
  }
  int n() const { return rule.n; }
};

/// Real jets of one field at every interior and boundary node.
struct FieldSamples {
  std::vector<RealJet> interior;
  std::vector<RealJet> boundary;

  static FieldSamples of(const PolyField& u, const Discretization& d) {
    detail::require(u.n() == d.n(), "FieldSamples: field dimension does not match the rule");
    const FieldDerivs fd(u);
    FieldSamples s;
    s.interior.reserve(d.rule.interior.size());
    for (int i = 0; i < d.rule.interior.size(); ++i) s.interior.push_back(fd.eval(d.rule.interior.point(i)));
    s.boundary.reserve(d.rule.boundary.size());
    for (int i = 0; i < d.rule.boundary.size(); ++i) s.boundary.push_back(fd.eval(d.rule.boundary.point(i)));
    return s;
  }

  /// a * x + b * y, nodewise.
  static FieldSamples combine(double a, const FieldSamples& x, double b, const FieldSamples& y) {
    FieldSamples s = x;
    for (std::size_t i = 0; i < s.interior.size(); ++i) {
      RealJet& r = s.interior[i];
      r.value *= a;
      r.grad *= a;
      r.hess *= a;
      r.axpy(b, y.interior[i]);
    }
    for (std::size_t i = 0; i < s.boundary.size(); ++i) {
      RealJet& r = s.boundary[i];
      r.value *= a;
      r.grad *= a;
      r.hess *= a;
      r.axpy(b, y.boundary[i]);
    }
    return s;
  }
};

struct EnergyBreakdown {
  int k = 0;
  double interior = 0.0;
  std::map<int, double> s_terms;  // i -> S_i(u), i = 2..k+1
  double total = 0.0;             // interior + sum S_i / (k^2 (k+1))
  double total_q = 0.0;           // interior + boundary integral of u Q_k(u)
  double route_gap = 0.0;         // |total - total_q|
  double magnitude = 0.0;         // integral of |interior integrand| + |boundary integrand|
  long double total_ld = 0.0L;    // total before rounding, for finite differences
};

inline nlohmann::json to_json(const EnergyBreakdown& e) {
  nlohmann::json s = nlohmann::json::object();
  for (const auto& [i, v] : e.s_terms) s[std::to_string(i)] = v;
  return {{"k", e.k},         {"interior", e.interior}, {"s_terms", s},
          {"total", e.total}, {"total_q", e.total_q},   {"route_gap", e.route_gap}};
}

namespace detail {

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

inline void check_k(int k, int n) { require_range(k >= 1 && k <= n, "energy: k must lie in [1, n]"); }

/// sigma_m(L x a, D x b) with a + b = m, sigma_0 = 1.
inline double mixed_sigma(const HermitianMatrix& L, const HermitianMatrix& D, int a, int b) {
  std::vector<HermitianMatrix> args;
  args.reserve(a + b);
  for (int i = 0; i < a; ++i) args.push_back(L);
  for (int i = 0; i < b; ++i) args.push_back(D);
  return sigma_k_polarized(args);
}

struct BoundaryTerms {
  double u = 0.0;
  double u_nu = 0.0;
  std::vector<double> sigma_mixed;  // index i - 2 for i = 2..k+1
};

inline BoundaryTerms boundary_terms(const FieldJet& u, const BoundaryFrame& f, const ShapeData& s, int k) {
  BoundaryTerms t;
  t.u = u.value;
  t.u_nu = normal_derivative(u, f);
  const HermitianMatrix L = HermitianMatrix::symmetrize(s.L_H);
  const HermitianMatrix D = HermitianMatrix::symmetrize(restricted_hessian(u, f));
  for (int i = 2; i <= k + 1; ++i) t.sigma_mixed.push_back(mixed_sigma(L, D, i - 2, k + 1 - i));
  return t;
}

/// (-1)^i C(k, i-1) u_nu^{i-1} sigma_{k-1}(..), the i-th summand shared by Q_k and S_i.
inline double boundary_summand(const BoundaryTerms& t, int i, int k) {
  const double sign = (i % 2 == 0) ? 1.0 : -1.0;
  return sign * binomial(k, i - 1) * std::pow(t.u_nu, i - 1) * t.sigma_mixed[i - 2];
}

}  // namespace detail

/// Q_k(u) at one boundary point.
inline double qk_density(const FieldJet& u, const BoundaryFrame& f, const ShapeData& s, int k) {
  detail::require_range(k >= 1 && k <= f.Zn.size(), "qk_density: k must lie in [1, n]");
  const auto t = detail::boundary_terms(u, f, s, k);
  double q = 0.0;
  for (int i = 2; i <= k + 1; ++i) q += detail::boundary_summand(t, i, k);
  return q / (2.0 * k);
}

inline double interior_term(const FieldSamples& u, const Discretization& d, int k) {
  detail::check_k(k, d.n());
  double acc = 0.0;
  for (std::size_t q = 0; q < u.interior.size(); ++q) {
    const RealJet& r = u.interior[q];
    acc -= d.rule.interior.weights(q) * r.value * detail::sigma_raw(complex_hessian_raw(r.hess), k);
  }
  return acc;
}

inline double interior_term(const PolyField& u, const Discretization& d, int k) {
  return interior_term(FieldSamples::of(u, d), d, k);
}

inline double s_i_term(const FieldSamples& u, const Discretization& d, int i, int k) {
  detail::check_k(k, d.n());
  detail::require_range(i >= 2 && i <= k + 1, "s_i_term: i must lie in [2, k+1]");
  double acc = 0.0;
  for (std::size_t q = 0; q < u.boundary.size(); ++q) {
    const FieldJet j = to_field_jet(u.boundary[q]);
    const auto t = detail::boundary_terms(j, d.geom[q].frame, d.geom[q].shape, k);
    acc += d.rule.boundary.weights(q) * t.u * detail::boundary_summand(t, i, k);
  }
  return 0.5 * k * (k + 1) * acc;
}

inline double s_i_term(const PolyField& u, const Discretization& d, int i, int k) {
  return s_i_term(FieldSamples::of(u, d), d, i, k);
}

namespace detail {

using LD = long double;
using LCplx = std::complex<LD>;
using LCMat = Eigen::Matrix<LCplx, Eigen::Dynamic, Eigen::Dynamic>;
using LRVec = Eigen::Matrix<LD, Eigen::Dynamic, 1>;
using LRMat = Eigen::Matrix<LD, Eigen::Dynamic, Eigen::Dynamic>;

/// sigma_k of a small Hermitian matrix by the Faddeev-LeVerrier recursion.
inline LD sigma_fl(const LCMat& a, int k) {
  if (k == 0) return 1.0L;
  if (k > a.rows()) return 0.0L;
  const auto n = a.rows();
  LCMat m = LCMat::Identity(n, n);
  LCplx c = 1.0L;
  for (int j = 1; j <= k; ++j) {
    const LCMat am = a * m;
    c = am.trace() / static_cast<LD>(j);
    m = c * LCMat::Identity(n, n) - am;
  }
  return c.real();
}

/// sigma_m(L x a, D x b) by inclusion-exclusion on sigma_fl.
inline LD mixed_sigma_fl(const LCMat& L, const LCMat& D, int a, int b) {
  const int m = a + b;
  if (m == 0) return 1.0L;
  if (m > L.rows()) return 0.0L;
  LD acc = 0.0L;
  // subsets are counted by how many copies of L and of D they take
  for (int i = 0; i <= a; ++i)
    for (int j = 0; j <= b; ++j) {
      if (i + j == 0) continue;
      const LD sign = ((m - i - j) % 2 == 0) ? 1.0L : -1.0L;
      acc += sign * static_cast<LD>(binomial(a, i) * binomial(b, j)) *
             sigma_fl(static_cast<LD>(i) * L + static_cast<LD>(j) * D, m);
    }
  return acc / static_cast<LD>(factorial(m));
}

inline LCMat complex_hessian_ld(const LRMat& h) {
  const auto n = h.rows() / 2;
  LCMat m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      m(i, j) = 0.5L * LCplx(h(2 * i, 2 * j) + h(2 * i + 1, 2 * j + 1), h(2 * i, 2 * j + 1) - h(2 * i + 1, 2 * j));
  return m;
}

/// Neumaier summation; keeps the rounding of long node sums at O(eps).
struct CompensatedSum {
  LD sum = 0.0L;
  LD carry = 0.0L;
  void add(LD x) {
    const LD t = sum + x;
    carry += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  LD value() const { return sum + carry; }
};

/// Jet of u + t v in extended precision.
struct LDJet {
  LD value;
  LRVec grad;
  LRMat hess;
};

inline LDJet combine_ld(const RealJet& u, const RealJet* v, LD t) {
  LDJet j{static_cast<LD>(u.value), u.grad.cast<LD>(), u.hess.cast<LD>()};
  if (v) {
    j.value += t * static_cast<LD>(v->value);
    j.grad += t * v->grad.cast<LD>();
    j.hess += t * v->hess.cast<LD>();
  }
  return j;
}

}  // namespace detail

/// Both assembly routes for E(u + t v) over the same nodes. Node jets, sigma_k
/// and the sums are evaluated in extended precision so finite differences in t
/// stay above rounding noise.
inline EnergyBreakdown energy_line(const FieldSamples& u, const FieldSamples* v, long double t,
                                   const Discretization& d, int k) {
  using namespace detail;
  check_k(k, d.n());
  EnergyBreakdown e;
  e.k = k;
  CompensatedSum interior_sum, q_sum;
  LD magnitude = 0.0L;
  for (std::size_t q = 0; q < u.interior.size(); ++q) {
    const LDJet j = combine_ld(u.interior[q], v ? &v->interior[q] : nullptr, t);
    const LD c = static_cast<LD>(d.rule.interior.weights(q)) * j.value * sigma_fl(complex_hessian_ld(j.hess), k);
    interior_sum.add(-c);
    magnitude += std::abs(c);
  }
  std::vector<CompensatedSum> s(k + 2);
  for (std::size_t q = 0; q < u.boundary.size(); ++q) {
    const LDJet j = combine_ld(u.boundary[q], v ? &v->boundary[q] : nullptr, t);
    const auto& f = d.geom[q].frame;
    const LD unu = j.grad.dot(f.nu.cast<LD>());
    const LCMat Z = f.Z.cast<LCplx>();
    const LCMat DH = Z.transpose() * complex_hessian_ld(j.hess) * Z.conjugate();
    const LCMat LH = d.geom[q].shape.L_H.cast<LCplx>();
    const LD w = static_cast<LD>(d.rule.boundary.weights(q));
    LD density = 0.0L;
    for (int i = 2; i <= k + 1; ++i) {
      const LD sign = (i % 2 == 0) ? 1.0L : -1.0L;
      LD pw = 1.0L;
      for (int a = 0; a < i - 1; ++a) pw *= unu;
      const LD term = sign * static_cast<LD>(binomial(k, i - 1)) * pw * mixed_sigma_fl(LH, DH, i - 2, k + 1 - i);
      s[i].add(w * j.value * term);
      density += term;
    }
    q_sum.add(w * j.value * density / (2.0L * k));
    magnitude += w * std::abs(j.value * density) / (2.0L * k);
  }
  LD boundary = 0.0L;
  for (int i = 2; i <= k + 1; ++i) {
    const LD si = 0.5L * k * (k + 1) * s[i].value();
    e.s_terms[i] = static_cast<double>(si);
    boundary += si;
  }
  const LD interior = interior_sum.value();
  const LD q_route = q_sum.value();
  const LD total = interior + boundary / (static_cast<LD>(k) * k * (k + 1));
  const LD total_q = interior + q_route;
  e.interior = static_cast<double>(interior);
  e.total = static_cast<double>(total);
  e.total_ld = total;
  e.total_q = static_cast<double>(total_q);
  e.route_gap = static_cast<double>(std::abs(total - total_q));
  e.magnitude = static_cast<double>(magnitude);
  return e;
}

inline EnergyBreakdown energy(const FieldSamples& u, const Discretization& d, int k) {
  return energy_line(u, nullptr, 0.0L, d, k);
}

inline EnergyBreakdown energy(const PolyField& u, const Discretization& d, int k) {
  return energy(FieldSamples::of(u, d), d, k);
}

/// E_3 through the sub-Laplacian, Hermitian mean curvature and torsion terms.
inline double energy3_simplified(const FieldSamples& u, const Discretization& d) {
  detail::require(d.n() >= 2, "energy3_simplified: needs n >= 2");
  double acc = interior_term(u, d, 2);
  for (std::size_t q = 0; q < u.boundary.size(); ++q) {
    const FieldJet j = to_field_jet(u.boundary[q]);
    const auto& f = d.geom[q].frame;
    const auto& s = d.geom[q].shape;
    const double unu = normal_derivative(j, f);
    const cplx w = tangential_torsion(j, f, s);
    const cplx torsion = cplx(0, -0.5) * (w - std::conj(w));
    const double density = 0.5 * unu * sublaplacian_of_trace(j, f, s) + 0.125 * unu * unu * s.Hb +
                           unu * torsion.real();
    acc += d.rule.boundary.weights(q) * j.value * density;
  }
  return acc;
}

inline double energy3_simplified(const PolyField& u, const Discretization& d) {
  return energy3_simplified(FieldSamples::of(u, d), d);
}

/// -integral of v sigma_k(D w_1, .., D w_k).
inline double polarized_interior(const FieldSamples& v, const std::vector<const FieldSamples*>& args,
                                 const Discretization& d) {
  const int k = static_cast<int>(args.size());
  detail::require_range(k <= d.n(), "polarized_interior: k must not exceed n");
  double acc = 0.0;
  std::vector<HermitianMatrix> hs(k);
  for (std::size_t q = 0; q < v.interior.size(); ++q) {
    for (int a = 0; a < k; ++a)
      hs[a] = HermitianMatrix::symmetrize(complex_hessian_raw(args[a]->interior[q].hess));
    acc -= d.rule.interior.weights(q) * v.interior[q].value * sigma_k_polarized(hs);
  }
  return acc;
}

inline double polarized_interior(const PolyField& v, const std::vector<PolyField>& args, const Discretization& d) {
  const FieldSamples vs = FieldSamples::of(v, d);
  std::vector<FieldSamples> as;
  as.reserve(args.size());
  for (const auto& a : args) as.push_back(FieldSamples::of(a, d));
  std::vector<const FieldSamples*> ptrs;
  for (const auto& a : as) ptrs.push_back(&a);
  return polarized_interior(vs, ptrs, d);
}

// ---------------------------------------------------------------------------
// Boundary density export.

struct BoundaryDensityRow {
  int node = 0;
  double u = 0.0;
  double u_nu = 0.0;
  std::vector<double> sigma_mixed;  // i = 2..k+1
  double q_k = 0.0;
};

struct BoundaryDensityReport {
  int k = 0;
  std::vector<BoundaryDensityRow> rows;
};

inline BoundaryDensityReport boundary_density_report(const FieldSamples& u, const Discretization& d, int k) {
  detail::check_k(k, d.n());
  BoundaryDensityReport r;
  r.k = k;
  for (std::size_t q = 0; q < u.boundary.size(); ++q) {
    const FieldJet j = to_field_jet(u.boundary[q]);
    const auto t = detail::boundary_terms(j, d.geom[q].frame, d.geom[q].shape, k);
    BoundaryDensityRow row{static_cast<int>(q), t.u, t.u_nu, t.sigma_mixed, 0.0};
    for (int i = 2; i <= k + 1; ++i) row.q_k += detail::boundary_summand(t, i, k);
    row.q_k /= 2.0 * k;
    r.rows.push_back(std::move(row));
  }
  return r;
}

/// Long format, one line per (node, i): node,k,i,u,u_nu,sigma_mixed,q_k.
inline void write_csv(std::ostream& os, const BoundaryDensityReport& r) {
  os << "node,k,i,u,u_nu,sigma_mixed,q_k\n";
  os.precision(17);
  for (const auto& row : r.rows)
    for (int i = 2; i <= r.k + 1; ++i)
      os << row.node << ',' << r.k << ',' << i << ',' << row.u << ',' << row.u_nu << ','
         << row.sigma_mixed[i - 2] << ',' << row.q_k << '\n';
}

}  // namespace khess
