#pragma once

// Deterministic quadrature on the ball and sphere of radius R in C^n = R^{2n}.
//
// The sphere rule writes z_j = sqrt(s_j) e^{i theta_j} with s uniform on the
// standard simplex. Angles use an m-point trapezoid per circle (exact for
// trigonometric degree < m), the simplex uses Gauss-Legendre after
// stick-breaking. The rule is exact for all polynomials up to a degree chosen
// from the node budget. The seed only rotates each circle's trapezoid grid.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "khess/hessalg.hpp"

namespace khess {

struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {

// Legendre P_q(x) and its derivative by the three-term recurrence.
inline std::pair<double, double> legendre(int q, double x) {
  double p0 = 1.0, p1 = x;
  for (int l = 2; l <= q; ++l) {
    const double p2 = ((2.0 * l - 1.0) * x * p1 - (l - 1.0) * p0) / l;
    p0 = p1;
    p1 = p2;
  }
  return {p1, q * (x * p1 - p0) / (x * x - 1.0)};
}

}  // namespace detail

/// q-point Gauss-Legendre rule on [a, b], nodes ascending.
inline GaussLegendre gauss_legendre(int q, double a = -1.0, double b = 1.0) {
  detail::require(q >= 1, "gauss_legendre: need at least one node");
  GaussLegendre g;
  g.nodes.resize(q);
  g.weights.resize(q);
  for (int i = 0; i < q; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (q + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = detail::legendre(q, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = detail::legendre(q, x).second;
    g.nodes[q - 1 - i] = 0.5 * (b - a) * x + 0.5 * (b + a);
    g.weights[q - 1 - i] = 0.5 * (b - a) * 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return g;
}

/// Area of the sphere of radius 1 in R^{2n}: 2 pi^n / (n-1)!.
inline double unit_sphere_area(int n) {
  return 2.0 * std::pow(std::numbers::pi, n) / std::tgamma(static_cast<double>(n));
}
/// Volume of the unit ball in R^{2n}: pi^n / n!.
inline double unit_ball_volume(int n) {
  return std::pow(std::numbers::pi, n) / std::tgamma(static_cast<double>(n) + 1.0);
}

/// Nodes as columns of a (2n x count) matrix, weights alongside.
struct NodeSet {
  RMat points;
  RVec weights;
  int size() const { return static_cast<int>(weights.size()); }
  std::span<const double> point(int i) const {
    return {points.col(i).data(), static_cast<std::size_t>(points.rows())};
  }
};

struct QuadratureRule {
  int n = 0;
  double R = 1.0;
  int radial_order = 0;
  int angular_count = 0;
  int boundary_count = 0;
  std::uint64_t seed = 0;
  int sphere_degree = 0;    // exactness degree of the interior sphere factor
  int boundary_degree = 0;  // exactness degree of the boundary rule
  NodeSet interior;
  NodeSet boundary;
};

namespace detail {

struct SphereLayout {
  int degree, m, q, count;
};

inline long long ipow(long long b, int e) {
  long long r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

inline SphereLayout sphere_layout(int n, int degree) {
  const int m = degree + 1;
  const int q = std::max(1, (degree / 2 + n - 1 + 1) / 2);
  return {degree, m, q, static_cast<int>(ipow(m, n) * ipow(q, n - 1))};
}

/// Largest exactness degree whose node count fits the budget.
inline SphereLayout best_layout(int n, int budget) {
  SphereLayout best = sphere_layout(n, 0);
  for (int d = 1;; ++d) {
    const SphereLayout l = sphere_layout(n, d);
    if (l.count > budget) break;
    best = l;
  }
  return best;
}

/// Unit-sphere nodes for a layout, seeded circle offsets.
inline NodeSet unit_sphere_nodes(int n, const SphereLayout& lay, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> offset(n);
  for (auto& o : offset) o = unif(rng);

  const GaussLegendre gl = gauss_legendre(lay.q, 0.0, 1.0);
  const double base = unit_sphere_area(n) * std::tgamma(static_cast<double>(n)) /
                      std::pow(static_cast<double>(lay.m), n);

  // simplex points by stick-breaking over (n-1) Gauss-Legendre factors
  std::vector<std::vector<double>> simplex_s;
  std::vector<double> simplex_w;
  const long long ns = ipow(lay.q, n - 1);
  for (long long idx = 0; idx < ns; ++idx) {
    long long rem = idx;
    std::vector<double> s(n);
    double left = 1.0, w = 1.0;
    for (int j = 0; j < n - 1; ++j) {
      const int a = static_cast<int>(rem % lay.q);
      rem /= lay.q;
      const double t = gl.nodes[a];
      s[j] = left * t;
      w *= gl.weights[a] * std::pow(1.0 - t, n - 2 - j);
      left *= 1.0 - t;
    }
    s[n - 1] = left;
    simplex_s.push_back(std::move(s));
    simplex_w.push_back(w);
  }

  const long long na = ipow(lay.m, n);
  NodeSet out;
  out.points.resize(2 * n, lay.count);
  out.weights.resize(lay.count);
  int col = 0;
  for (long long si = 0; si < ns; ++si) {
    for (long long ai = 0; ai < na; ++ai) {
      long long rem = ai;
      for (int j = 0; j < n; ++j) {
        const int l = static_cast<int>(rem % lay.m);
        rem /= lay.m;
        const double theta = 2.0 * std::numbers::pi * (l + offset[j]) / lay.m;
        const double r = std::sqrt(simplex_s[si][j]);
        out.points(2 * j, col) = r * std::cos(theta);
        out.points(2 * j + 1, col) = r * std::sin(theta);
      }
      out.weights(col) = base * simplex_w[si];
      ++col;
    }
  }
  return out;
}

}  // namespace detail

/// Interior rule: Gauss-Legendre in radius with Jacobian r^{2n-1} times the
/// sphere rule of at most angular_count nodes. Boundary rule: the sphere rule
/// of at most boundary_count nodes (defaults to angular_count).
inline QuadratureRule build_ball_quadrature(int n, int radial_order, int angular_count,
                                            std::uint64_t seed, double R = 1.0,
                                            int boundary_count = 0) {
  detail::require(n >= 1, "build_ball_quadrature: n must be positive");
  detail::require(radial_order >= 4, "build_ball_quadrature: radial order must be >= 4");
  detail::require(angular_count >= 100, "build_ball_quadrature: angular count must be >= 100");
  detail::require(R > 0.0, "build_ball_quadrature: radius must be positive");
  if (boundary_count == 0) boundary_count = angular_count;
  detail::require(boundary_count >= 100, "build_ball_quadrature: boundary count must be >= 100");

  QuadratureRule rule;
  rule.n = n;
  rule.R = R;
  rule.radial_order = radial_order;
  rule.angular_count = angular_count;
  rule.boundary_count = boundary_count;
  rule.seed = seed;

  const auto lay = detail::best_layout(n, angular_count);
  const auto blay = detail::best_layout(n, boundary_count);
  rule.sphere_degree = lay.degree;
  rule.boundary_degree = blay.degree;
  const NodeSet sphere = detail::unit_sphere_nodes(n, lay, seed);
  const NodeSet bsphere = detail::unit_sphere_nodes(n, blay, seed);

  rule.boundary.points = R * bsphere.points;
  rule.boundary.weights = std::pow(R, 2 * n - 1) * bsphere.weights;

  const GaussLegendre gl = gauss_legendre(radial_order, 0.0, R);
  const int ns = sphere.size();
  rule.interior.points.resize(2 * n, static_cast<Eigen::Index>(radial_order) * ns);
  rule.interior.weights.resize(static_cast<Eigen::Index>(radial_order) * ns);
  for (int a = 0; a < radial_order; ++a) {
    const double r = gl.nodes[a];
    const double wr = gl.weights[a] * std::pow(r, 2 * n - 1);
    for (int s = 0; s < ns; ++s) {
      const int col = a * ns + s;
      rule.interior.points.col(col) = r * sphere.points.col(s);
      rule.interior.weights(col) = wr * sphere.weights(s);
    }
  }
  return rule;
}

/// Closed-form integral of x^alpha over the sphere of radius R in R^{2n}.
inline double sphere_moment(const std::vector<int>& alpha, double R = 1.0) {
  double prod = 1.0;
  int total = 0;
  for (int a : alpha) {
    if (a % 2) return 0.0;
    prod *= std::tgamma((a + 1) / 2.0);
    total += a;
  }
  const double dim = static_cast<double>(alpha.size());
  return 2.0 * prod / std::tgamma((total + dim) / 2.0) * std::pow(R, total + dim - 1);
}

/// Closed-form integral of x^alpha over the ball of radius R in R^{2n}.
inline double ball_moment(const std::vector<int>& alpha, double R = 1.0) {
  int total = 0;
  for (int a : alpha) total += a;
  const double dim = static_cast<double>(alpha.size());
  return sphere_moment(alpha, 1.0) * std::pow(R, total + dim) / (total + dim);
}

/// Sum of w * f(point) in fixed node order.
template <class F>
double integrate(const NodeSet& nodes, F&& f) {
  double acc = 0.0;
  for (int i = 0; i < nodes.size(); ++i) acc += nodes.weights(i) * f(nodes.point(i));
  return acc;
}

struct CalibrationReport {
  double volume_rel = 0.0;
  double area_rel = 0.0;
  double moment_rel = 0.0;  // worst relative (or absolute for zero moments) error up to max_degree
  bool pass = false;
};

/// Volume, area and all monomial moments up to max_degree against closed forms.
inline CalibrationReport calibrate(const QuadratureRule& rule, int max_degree = 6, double tol = 5e-3) {
  CalibrationReport c;
  const int d = 2 * rule.n;
  const double vol = unit_ball_volume(rule.n) * std::pow(rule.R, d);
  const double area = unit_sphere_area(rule.n) * std::pow(rule.R, d - 1);
  c.volume_rel = std::abs(rule.interior.weights.sum() - vol) / vol;
  c.area_rel = std::abs(rule.boundary.weights.sum() - area) / area;

  std::vector<int> alpha(d, 0);
  auto visit = [&](auto&& self, int pos, int left) -> void {
    if (pos == d) {
      auto mono = [&](std::span<const double> x) {
        double m = 1.0;
        for (int v = 0; v < d; ++v) m *= std::pow(x[v], alpha[v]);
        return m;
      };
      const double bi = integrate(rule.interior, mono), be = ball_moment(alpha, rule.R);
      const double si = integrate(rule.boundary, mono), se = sphere_moment(alpha, rule.R);
      c.moment_rel = std::max(c.moment_rel, std::abs(bi - be) / std::max(std::abs(be), vol));
      c.moment_rel = std::max(c.moment_rel, std::abs(si - se) / std::max(std::abs(se), area));
      return;
    }
    for (int a = 0; a <= left; ++a) {
      alpha[pos] = a;
      self(self, pos + 1, left - a);
    }
    alpha[pos] = 0;
  };
  visit(visit, 0, max_degree);
  c.pass = c.volume_rel <= tol && c.area_rel <= tol && c.moment_rel <= tol;
  return c;
}

inline nlohmann::json to_json(const NodeSet& s) {
  nlohmann::json pts = nlohmann::json::array();
  for (int i = 0; i < s.size(); ++i) {
    const auto p = s.point(i);
    pts.push_back({std::vector<double>(p.begin(), p.end()), s.weights(i)});
  }
  return pts;
}

inline nlohmann::json to_json(const QuadratureRule& r) {
  return {{"n", r.n},
          {"R", r.R},
          {"seed", r.seed},
          {"radial_order", r.radial_order},
          {"angular_count", r.angular_count},
          {"boundary_count", r.boundary_count},
          {"sphere_degree", r.sphere_degree},
          {"boundary_degree", r.boundary_degree},
          {"interior_nodes", to_json(r.interior)},
          {"boundary_nodes", to_json(r.boundary)}};
}

/// Seeded point uniformly distributed on the sphere of radius R.
template <class Rng>
std::vector<double> random_sphere_point(int n, double R, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> p(2 * n);
  double norm = 0.0;
  for (auto& c : p) {
    c = g(rng);
    norm += c * c;
  }
  norm = std::sqrt(norm);
  for (auto& c : p) c *= R / norm;
  return p;
}

}  // namespace khess
