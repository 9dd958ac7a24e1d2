#pragma once

// Exact polynomials in the real coordinates (x_1, y_1, .., x_n, y_n) of C^n
// with complex coefficients.

#include <cmath>
#include <complex>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "khess/error.hpp"

namespace khess {

using cplx = std::complex<double>;

/// Exponent of x_j sits at slot 2j, exponent of y_j at slot 2j + 1.
using Exponent = std::vector<int>;

class PolyField {
 public:
  PolyField() = default;
  explicit PolyField(int n) : n_(n) { detail::require(n >= 1, "PolyField: n must be positive"); }

  static PolyField constant(int n, cplx c) {
    PolyField p(n);
    p.add_term(Exponent(2 * n, 0), c);
    return p;
  }
  /// Real coordinate number var in 0 .. 2n-1.
  static PolyField coord(int n, int var) {
    detail::require_range(var >= 0 && var < 2 * n, "PolyField::coord: index out of range");
    PolyField p(n);
    Exponent e(2 * n, 0);
    e[var] = 1;
    p.add_term(e, 1.0);
    return p;
  }
  static PolyField x(int n, int j) { return coord(n, 2 * j); }
  static PolyField y(int n, int j) { return coord(n, 2 * j + 1); }
  static PolyField z(int n, int j) { return x(n, j) + cplx(0, 1) * y(n, j); }
  static PolyField zbar(int n, int j) { return x(n, j) - cplx(0, 1) * y(n, j); }
  /// |z|^2 = sum of all squared real coordinates.
  static PolyField abs2(int n) {
    PolyField p(n);
    for (int v = 0; v < 2 * n; ++v) {
      Exponent e(2 * n, 0);
      e[v] = 2;
      p.add_term(e, 1.0);
    }
    return p;
  }

  int n() const { return n_; }
  int vars() const { return 2 * n_; }
  const std::map<Exponent, cplx>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  int degree() const {
    int d = -1;
    for (const auto& [e, c] : terms_) {
      int s = 0;
      for (int a : e) s += a;
      d = std::max(d, s);
    }
    return d;
  }

  /// Adds c x^e; drops the monomial if its coefficient cancels to zero.
  void add_term(const Exponent& e, cplx c) {
    detail::require(static_cast<int>(e.size()) == vars(), "PolyField: exponent length mismatch");
    if (c == cplx(0.0)) return;
    auto [it, inserted] = terms_.try_emplace(e, c);
    if (!inserted) {
      it->second += c;
      if (it->second == cplx(0.0)) terms_.erase(it);
    }
  }

  PolyField& operator+=(const PolyField& o) {
    check(o);
    for (const auto& [e, c] : o.terms_) add_term(e, c);
    return *this;
  }
  PolyField& operator-=(const PolyField& o) {
    check(o);
    for (const auto& [e, c] : o.terms_) add_term(e, -c);
    return *this;
  }
  PolyField& operator*=(cplx s) {
    if (s == cplx(0.0)) {
      terms_.clear();
      return *this;
    }
    for (auto& [e, c] : terms_) c *= s;
    return *this;
  }

  friend PolyField operator+(PolyField a, const PolyField& b) { return a += b; }
  friend PolyField operator-(PolyField a, const PolyField& b) { return a -= b; }
  friend PolyField operator-(PolyField a) { return a *= -1.0; }
  friend PolyField operator*(cplx s, PolyField a) { return a *= s; }
  friend PolyField operator*(double s, PolyField a) { return a *= cplx(s); }
  friend PolyField operator*(PolyField a, cplx s) { return a *= s; }

  friend PolyField operator*(const PolyField& a, const PolyField& b) {
    a.check(b);
    PolyField p(a.n_);
    Exponent e(a.vars());
    for (const auto& [ea, ca] : a.terms_)
      for (const auto& [eb, cb] : b.terms_) {
        for (int v = 0; v < a.vars(); ++v) e[v] = ea[v] + eb[v];
        p.add_term(e, ca * cb);
      }
    return p;
  }

  PolyField pow(int m) const {
    detail::require(m >= 0, "PolyField::pow: negative exponent");
    PolyField r = constant(n_, 1.0);
    for (int i = 0; i < m; ++i) r = r * *this;
    return r;
  }

  friend bool operator==(const PolyField& a, const PolyField& b) {
    return a.n_ == b.n_ && a.terms_ == b.terms_;
  }

  /// Exact partial derivative in real coordinate var.
  PolyField d(int var) const {
    detail::require_range(var >= 0 && var < vars(), "PolyField::d: index out of range");
    PolyField p(n_);
    for (const auto& [e, c] : terms_) {
      if (e[var] == 0) continue;
      Exponent f = e;
      --f[var];
      p.add_term(f, c * static_cast<double>(e[var]));
    }
    return p;
  }

  /// Wirtinger derivative d/dz_j = (d/dx_j - i d/dy_j) / 2.
  PolyField dz(int j) const { return 0.5 * (d(2 * j) - cplx(0, 1) * d(2 * j + 1)); }
  /// Wirtinger derivative d/dzbar_j = (d/dx_j + i d/dy_j) / 2.
  PolyField dzbar(int j) const { return 0.5 * (d(2 * j) + cplx(0, 1) * d(2 * j + 1)); }

  /// Real Laplacian, exact.
  PolyField laplacian() const {
    PolyField p(n_);
    for (int v = 0; v < vars(); ++v) p += d(v).d(v);
    return p;
  }

  PolyField conj() const {
    PolyField p(n_);
    for (const auto& [e, c] : terms_) p.add_term(e, std::conj(c));
    return p;
  }
  /// (P + conj P) / 2; the coordinates are real so this is the real part pointwise.
  PolyField real_part() const {
    PolyField p(n_);
    for (const auto& [e, c] : terms_) p.add_term(e, c.real());
    return p;
  }
  PolyField imag_part() const {
    PolyField p(n_);
    for (const auto& [e, c] : terms_) p.add_term(e, c.imag());
    return p;
  }
  bool is_real(double tol = 0.0) const {
    for (const auto& [e, c] : terms_)
      if (std::abs(c.imag()) > tol) return false;
    return true;
  }

  /// Homogeneous part of total degree m.
  PolyField homogeneous_part(int m) const {
    PolyField p(n_);
    for (const auto& [e, c] : terms_) {
      int s = 0;
      for (int a : e) s += a;
      if (s == m) p.add_term(e, c);
    }
    return p;
  }

  cplx eval(std::span<const double> pt) const {
    detail::require(static_cast<int>(pt.size()) == vars(), "PolyField::eval: point dimension mismatch");
    const int deg = std::max(degree(), 0);
    // powers[v * (deg + 1) + a] = pt[v]^a
    std::vector<double> powers(static_cast<std::size_t>(vars()) * (deg + 1));
    for (int v = 0; v < vars(); ++v) {
      double* row = &powers[static_cast<std::size_t>(v) * (deg + 1)];
      row[0] = 1.0;
      for (int a = 1; a <= deg; ++a) row[a] = row[a - 1] * pt[v];
    }
    cplx acc = 0.0;
    for (const auto& [e, c] : terms_) {
      double m = 1.0;
      for (int v = 0; v < vars(); ++v)
        if (e[v]) m *= powers[static_cast<std::size_t>(v) * (deg + 1) + e[v]];
      acc += c * m;
    }
    return acc;
  }
  double eval_real(std::span<const double> pt) const { return eval(pt).real(); }

  /// Largest coefficient modulus, 0 for the zero polynomial.
  double max_coeff() const {
    double m = 0.0;
    for (const auto& [e, c] : terms_) m = std::max(m, std::abs(c));
    return m;
  }

  // JSON form: {"n": n, "terms": [[[e_1, .., e_2n], re, im], ...]}.
  nlohmann::json to_json() const {
    nlohmann::json t = nlohmann::json::array();
    for (const auto& [e, c] : terms_) t.push_back({e, c.real(), c.imag()});
    return {{"n", n_}, {"terms", t}};
  }

  static PolyField from_json(const nlohmann::json& j) {
    try {
      const int n = j.at("n").get<int>();
      PolyField p(n);
      for (const auto& t : j.at("terms")) {
        detail::require(t.is_array() && t.size() == 3, "PolyField JSON: each term is [exponent, re, im]");
        auto e = t[0].get<Exponent>();
        for (int a : e) detail::require(a >= 0, "PolyField JSON: negative exponent");
        p.add_term(e, cplx(t[1].get<double>(), t[2].get<double>()));
      }
      return p;
    } catch (const nlohmann::json::exception& ex) {
      throw ValidationError(std::string("PolyField JSON: ") + ex.what());
    }
  }

 private:
  void check(const PolyField& o) const {
    detail::require(n_ == o.n_, "PolyField: dimension mismatch");
  }

  int n_ = 1;
  std::map<Exponent, cplx> terms_;
};

enum class WirtingerKind { holomorphic, antiholomorphic };

/// d/dz_i or d/dzbar_i of P, exact. Index i is zero-based.
inline PolyField wirtinger_derivative(const PolyField& p, int i, WirtingerKind kind) {
  detail::require_range(i >= 0 && i < p.n(), "wirtinger_derivative: index out of range");
  return kind == WirtingerKind::holomorphic ? p.dz(i) : p.dzbar(i);
}

}  // namespace khess
