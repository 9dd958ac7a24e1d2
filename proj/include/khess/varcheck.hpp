#pragma once

// Finite-difference checks of the energy derivatives, convexity scans along
// segments, and Dirichlet-principle experiments on balls.

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "khess/energy.hpp"
#include "khess/stock_fields.hpp"

namespace khess {

/// u + t v with v = (R^2 - |z|^2) w, so v vanishes on the sphere of radius R.
struct PerturbationFamily {
  PolyField base;
  PolyField direction;
  std::vector<double> steps;

  static PerturbationFamily make(const PolyField& base, const PolyField& w, double R,
                                 std::vector<double> steps = {}) {
    detail::require(base.n() == w.n(), "PerturbationFamily: dimension mismatch");
    return {base, ball_bump(base.n(), R) * w, std::move(steps)};
  }
};

struct ExperimentReport {
  std::string name;
  int k = 0;
  int j = 0;  // derivative order, 0 when not a derivative check
  std::vector<double> steps;
  std::vector<double> energies;
  std::optional<double> analytic;
  std::vector<double> fd;         // finite differences at h, h/2, h/4
  std::vector<double> residuals;  // |fd - analytic| per step, or margins
  double tolerance = 0.0;
  double scale = 1.0;
  std::optional<double> observed_order;
  std::string regime;  // "asymptotic" or "roundoff" for derivative checks
  std::vector<bool> cone_ok;
  std::vector<std::string> notes;
  bool verdict = false;
};

inline nlohmann::json to_json(const ExperimentReport& r) {
  nlohmann::json j = {{"name", r.name},           {"k", r.k},
                      {"j", r.j},                 {"steps", r.steps},
                      {"energies", r.energies},   {"fd", r.fd},
                      {"residuals", r.residuals}, {"tolerance", r.tolerance},
                      {"scale", r.scale},         {"regime", r.regime},
                      {"notes", r.notes},         {"verdict", r.verdict ? "pass" : "fail"}};
  j["analytic"] = r.analytic ? nlohmann::json(*r.analytic) : nlohmann::json(nullptr);
  j["observed_order"] = r.observed_order ? nlohmann::json(*r.observed_order) : nlohmann::json(nullptr);
  std::vector<int> cone(r.cone_ok.begin(), r.cone_ok.end());
  j["cone_ok"] = cone;
  return j;
}

/// Tolerances shared by the experiments; tol_scale multiplies all of them.
struct VarcheckTolerances {
  double quadrature_rel = 5e-3;
  double order_min = 1.8;
  double convexity = 1e-6;
  double cone_slack = 1e-9;
  double tol_scale = 1.0;
};

namespace detail {

inline double factorial_ratio(int a, int b) {
  double r = 1.0;
  for (int i = b + 1; i <= a; ++i) r *= i;
  return r;
}

/// Smallest sigma_j over j = 1..k at every interior node of the samples.
inline double cone_margin(const FieldSamples& u, int k) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& r : u.interior) m = std::min(m, cone_closure_margin(complex_hessian_raw(r.hess), k));
  return m;
}

struct EnergyCurve {
  const FieldSamples& u;
  const FieldSamples& v;
  const Discretization& d;
  int k;
  double magnitude = 0.0;  // largest integrand magnitude seen

  long double operator()(long double t) {
    const EnergyBreakdown e = energy_line(u, &v, t, d, k);
    magnitude = std::max(magnitude, e.magnitude);
    return e.total_ld;
  }
};

/// Central j-th difference sum_m (-1)^m C(j, m) f((j/2 - m) h) / h^j.
template <class F>
double central_difference(F& f, int j, double h) {
  const long double hl = h;
  long double acc = 0.0L;
  for (int m = 0; m <= j; ++m) {
    const long double sign = (m % 2 == 0) ? 1.0L : -1.0L;
    acc += sign * static_cast<long double>(binomial(j, m)) * f((0.5L * j - m) * hl);
  }
  return static_cast<double>(acc / std::pow(hl, j));
}

/// -integral of |v sigma_k(D u..)| style scale: 1 + integral of |integrand|.
inline double analytic_scale(const FieldSamples& v, const std::vector<const FieldSamples*>& args,
                             const Discretization& d, double factor) {
  double acc = 0.0;
  std::vector<HermitianMatrix> hs(args.size());
  for (std::size_t q = 0; q < v.interior.size(); ++q) {
    for (std::size_t a = 0; a < args.size(); ++a)
      hs[a] = HermitianMatrix::symmetrize(complex_hessian_raw(args[a]->interior[q].hess));
    acc += d.rule.interior.weights(q) * std::abs(v.interior[q].value * sigma_k_polarized(hs));
  }
  return 1.0 + std::abs(factor) * acc;
}

/// Compares the j-th central difference at h, h/2, h/4 with the analytic value.
inline ExperimentReport derivative_check(const std::string& name, const FieldSamples& u, const FieldSamples& v,
                                         const Discretization& d, int k, int j, double h, double analytic,
                                         double scale, const VarcheckTolerances& tol) {
  ExperimentReport r;
  r.name = name;
  r.k = k;
  r.j = j;
  r.analytic = analytic;
  r.scale = scale;
  r.tolerance = tol.quadrature_rel * tol.tol_scale * scale;
  EnergyCurve f{u, v, d, k};
  for (double s : {h, h / 2, h / 4}) {
    r.steps.push_back(s);
    r.fd.push_back(central_difference(f, j, s));
    r.residuals.push_back(std::abs(r.fd.back() - analytic));
  }
  r.energies.push_back(static_cast<double>(f(0.0L)));

  // Below this size a step-halving difference is rounding noise, not truncation.
  const double eps = static_cast<double>(std::numeric_limits<long double>::epsilon());
  const double floor = 64.0 * eps * (1.0 + f.magnitude) * std::pow(2.0, j) / std::pow(h / 4, j);
  const double d1 = std::abs(r.fd[0] - r.fd[1]);
  const double d2 = std::abs(r.fd[1] - r.fd[2]);
  bool order_ok = true;
  if (d1 <= floor || d2 <= floor) {
    r.regime = "roundoff";
    r.notes.push_back("step-halving differences at rounding level; truncation error absent");
  } else {
    r.regime = "asymptotic";
    r.observed_order = std::log2(d1 / d2);
    order_ok = *r.observed_order >= tol.order_min;
  }
  r.verdict = r.residuals[0] <= r.tolerance && order_ok;
  return r;
}

}  // namespace detail

/// Caches samples of the base field and direction of a family.
struct FamilySamples {
  FieldSamples u;
  FieldSamples v;
  static FamilySamples of(const PerturbationFamily& fam, const Discretization& d) {
    return {FieldSamples::of(fam.base, d), FieldSamples::of(fam.direction, d)};
  }
};

/// j-th derivative of t -> E(u + t v) at 0 against
/// -((k+1)! / (k+1-j)!) * integral of v sigma_k(D v x (j-1), D u x (k+1-j)).
inline ExperimentReport higher_derivative_check(const FamilySamples& fs, int k, int j, const Discretization& d,
                                                double h = 1e-3, const VarcheckTolerances& tol = {}) {
  detail::check_k(k, d.n());
  detail::require_range(j >= 1 && j <= k + 1, "higher_derivative_check: j must lie in [1, k+1]");
  detail::require(h > 0.0, "higher_derivative_check: step must be positive");
  std::vector<const FieldSamples*> args;
  for (int a = 0; a < j - 1; ++a) args.push_back(&fs.v);
  for (int a = 0; a < k + 1 - j; ++a) args.push_back(&fs.u);
  const double factor = detail::factorial_ratio(k + 1, k + 1 - j);
  const double analytic = factor * polarized_interior(fs.v, args, d);
  const double scale = detail::analytic_scale(fs.v, args, d, factor);
  return detail::derivative_check("derivative_j" + std::to_string(j), fs.u, fs.v, d, k, j, h, analytic, scale,
                                  tol);
}

inline ExperimentReport higher_derivative_check(const PerturbationFamily& fam, int k, int j,
                                                const Discretization& d, double h = 1e-3,
                                                const VarcheckTolerances& tol = {}) {
  return higher_derivative_check(FamilySamples::of(fam, d), k, j, d, h, tol);
}

inline ExperimentReport first_variation_check(const FamilySamples& fs, int k, const Discretization& d,
                                              double h = 1e-3, const VarcheckTolerances& tol = {}) {
  auto r = higher_derivative_check(fs, k, 1, d, h, tol);
  r.name = "first_variation";
  return r;
}

inline ExperimentReport first_variation_check(const PerturbationFamily& fam, int k, const Discretization& d,
                                              double h = 1e-3, const VarcheckTolerances& tol = {}) {
  return first_variation_check(FamilySamples::of(fam, d), k, d, h, tol);
}

/// (k+1) * integral of conj(g) T_{k-1}(D u) g with g_i = v_i.
inline double second_variation_newton(const FamilySamples& fs, int k, const Discretization& d,
                                      double* abs_integral = nullptr) {
  double acc = 0.0, abs_acc = 0.0;
  for (std::size_t q = 0; q < fs.u.interior.size(); ++q) {
    const CMat t = newton_tensor_raw(complex_hessian_raw(fs.u.interior[q].hess), k - 1);
    const CVec g = complex_gradient(fs.v.interior[q].grad);
    const double c = d.rule.interior.weights(q) * (g.adjoint() * t * g).value().real();
    acc += c;
    abs_acc += std::abs(c);
  }
  if (abs_integral) *abs_integral = (k + 1) * abs_acc;
  return (k + 1) * acc;
}

/// Second difference of E along the family against the Newton-tensor form;
/// when D u lies in the k-cone at every node the analytic value must be >= 0.
inline ExperimentReport second_variation_check(const FamilySamples& fs, int k, const Discretization& d,
                                               double h = 1e-3, const VarcheckTolerances& tol = {}) {
  detail::check_k(k, d.n());
  double abs_integral = 0.0;
  const double analytic = second_variation_newton(fs, k, d, &abs_integral);
  auto r = detail::derivative_check("second_variation", fs.u, fs.v, d, k, 2, h, analytic, 1.0 + abs_integral, tol);
  bool in_cone = true;
  for (const auto& node : fs.u.interior) {
    const auto rep = cone_membership(HermitianMatrix::symmetrize(complex_hessian_raw(node.hess)), k);
    if (!rep.in_cone) {
      in_cone = false;
      break;
    }
  }
  r.cone_ok.push_back(in_cone);
  if (in_cone && analytic < -r.tolerance) {
    r.notes.push_back("negative second variation inside the cone");
    r.verdict = false;
  }
  return r;
}

inline ExperimentReport second_variation_check(const PerturbationFamily& fam, int k, const Discretization& d,
                                               double h = 1e-3, const VarcheckTolerances& tol = {}) {
  return second_variation_check(FamilySamples::of(fam, d), k, d, h, tol);
}

/// E((1-t) u0 + t u1) on a uniform grid of t in [0, 1]; second differences must be >= -tol * scale.
inline ExperimentReport convexity_scan(const PolyField& u0, const PolyField& u1, int k, const Discretization& d,
                                       int grid, const VarcheckTolerances& tol = {}) {
  detail::check_k(k, d.n());
  detail::require(grid >= 2, "convexity_scan: grid must have at least two intervals");
  ExperimentReport r;
  r.name = "convexity_scan";
  r.k = k;
  const FieldSamples s0 = FieldSamples::of(u0, d);
  const FieldSamples s1 = FieldSamples::of(u1, d);
  double magnitude = 0.0;
  for (int g = 0; g <= grid; ++g) {
    const double t = static_cast<double>(g) / grid;
    const FieldSamples s = FieldSamples::combine(1.0 - t, s0, t, s1);
    const bool ok = detail::cone_margin(s, k) >= -tol.cone_slack;
    r.steps.push_back(t);
    r.cone_ok.push_back(ok);
    if (!ok) {
      r.notes.push_back("segment exits the cone closure at t = " + std::to_string(t) + "; scan aborted");
      r.verdict = false;
      return r;
    }
    const EnergyBreakdown e = energy(s, d, k);
    magnitude = std::max(magnitude, e.magnitude);
    r.energies.push_back(e.total);
  }
  r.scale = 1.0 + magnitude;
  r.tolerance = tol.convexity * tol.tol_scale * r.scale;
  bool ok = true;
  for (int g = 1; g < grid; ++g) {
    const double second = r.energies[g - 1] - 2.0 * r.energies[g] + r.energies[g + 1];
    r.residuals.push_back(second);
    ok = ok && second >= -r.tolerance;
  }
  r.verdict = ok;
  return r;
}

// ---------------------------------------------------------------------------
// Closed-form degenerate solutions and the Dirichlet principle.

/// Harmonic polynomial on R^{2n} equal to f on the sphere |x| = R.
inline PolyField harmonic_extension_ball(const PolyField& f, double R) {
  detail::require(R > 0.0, "harmonic_extension_ball: radius must be positive");
  const int n = f.n();
  const int N = 2 * n;
  const PolyField r2 = PolyField::abs2(n);
  const PolyField bump = r2 - PolyField::constant(n, R * R);
  PolyField h = f;
  // each pass removes the top degree of the Laplacian; the rest is rounding
  const double floor = 1e-14 * (1.0 + f.max_coeff());
  for (int pass = 0; pass <= f.degree() / 2 + 1; ++pass) {
    const PolyField g = h.laplacian();
    if (g.is_zero() || g.max_coeff() <= floor) break;
    // rounding leaves dust in degrees already cleared; skip it
    int m = g.degree();
    while (m > 0 && g.homogeneous_part(m).max_coeff() <= floor) --m;
    const double c = 2.0 * N + 4.0 * m;
    // q solves (|x|^2 Lap + c) q = g_m with q = sum_j a_j |x|^{2j} Lap^j g_m
    PolyField p = g.homogeneous_part(m);
    PolyField q(n);
    PolyField r2j = PolyField::constant(n, 1.0);
    double alpha = 1.0 / c;
    for (int j = 0; !p.is_zero(); ++j) {
      if (j > 0) alpha = -alpha / (2.0 * j * (N - 2 + 2 * m - 2 * j) + c);
      q += alpha * (r2j * p);
      p = p.laplacian();
      r2j = r2j * r2;
    }
    h -= bump * q;
  }
  if (h.laplacian().max_coeff() > 1e-10 * (1.0 + f.max_coeff()))
    throw std::runtime_error("harmonic_extension_ball: Laplacian did not vanish");
  return h;
}

/// Largest |sigma_k(D u)| over interior nodes.
inline double max_abs_sigma(const FieldSamples& u, int k) {
  double m = 0.0;
  for (const auto& r : u.interior) m = std::max(m, std::abs(detail::sigma_raw(complex_hessian_raw(r.hess), k)));
  return m;
}

/// Competitors u_f + s v for every family and step s. Margins E(u) - E(u_f)
/// must be >= -tol * scale for feasible competitors and nondecreasing in s
/// within a family.
inline ExperimentReport dirichlet_principle_experiment(const PolyField& u_f,
                                                       const std::vector<PerturbationFamily>& families, int k,
                                                       const Discretization& d,
                                                       const VarcheckTolerances& tol = {}) {
  detail::check_k(k, d.n());
  ExperimentReport r;
  r.name = "dirichlet_principle";
  r.k = k;
  const FieldSamples sf = FieldSamples::of(u_f, d);
  const EnergyBreakdown ef = energy(sf, d, k);
  r.scale = 1.0 + ef.magnitude;
  r.tolerance = tol.quadrature_rel * tol.tol_scale * r.scale;
  bool ok = true;
  const double degenerate = max_abs_sigma(sf, k);
  if (degenerate > 1e-9 * r.scale) {
    r.notes.push_back("u_f does not solve sigma_k = 0 at the nodes (max " + std::to_string(degenerate) + ")");
    ok = false;
  }
  r.energies.push_back(ef.total);
  for (std::size_t fi = 0; fi < families.size(); ++fi) {
    const FieldSamples sv = FieldSamples::of(families[fi].direction, d);
    double last = -std::numeric_limits<double>::infinity();
    for (double s : families[fi].steps) {
      const FieldSamples su = FieldSamples::combine(1.0, sf, s, sv);
      const bool feasible = detail::cone_margin(su, k) >= -tol.cone_slack;
      r.steps.push_back(s);
      r.cone_ok.push_back(feasible);
      if (!feasible) {
        r.notes.push_back("family " + std::to_string(fi) + " step " + std::to_string(s) +
                          " leaves the cone closure; skipped");
        r.residuals.push_back(std::numeric_limits<double>::quiet_NaN());
        r.energies.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      const double e = s == 0.0 ? ef.total : energy(su, d, k).total;
      const double margin = e - ef.total;
      r.energies.push_back(e);
      r.residuals.push_back(margin);
      if (margin < -r.tolerance) ok = false;
      if (margin < last - r.tolerance) {
        r.notes.push_back("margins decrease within family " + std::to_string(fi));
        ok = false;
      }
      last = std::max(last, margin);
    }
  }
  r.verdict = ok;
  return r;
}

enum class DescentMethod { Newton, Gradient };

struct MinimizerOptions {
  int iters = 200;
  int max_backtracks = 60;
  double armijo = 1e-4;
  double grad_tol = 1e-10;
  DescentMethod method = DescentMethod::Newton;
};

struct MinimizerResult {
  ExperimentReport report;
  std::vector<double> c;
  double energy = 0.0;
  double energy_f = 0.0;
  int iterations = 0;
};

/// Descent with backtracking on E(u_f + sum c_i b_i). Trial points outside the
/// cone closure are rejected like failed Armijo steps. The Newton direction uses
/// the exact coefficient Hessian and falls back to -g when that is not positive
/// definite.
inline MinimizerResult minimize_over_basis(const PolyField& u_f, const std::vector<PolyField>& basis, int k,
                                           const Discretization& d, std::vector<double> c0,
                                           const MinimizerOptions& opt = {}, const VarcheckTolerances& tol = {}) {
  detail::check_k(k, d.n());
  detail::require(c0.size() == basis.size(), "minimize_over_basis: start vector size mismatch");
  for (const auto& b : basis)
    for (int q = 0; q < d.rule.boundary.size(); ++q)
      detail::require(std::abs(b.eval_real(d.rule.boundary.point(q))) <= 1e-10 * (1.0 + b.max_coeff()),
                      "minimize_over_basis: basis field does not vanish on the boundary");

  const std::size_t m = basis.size();
  const FieldSamples sf = FieldSamples::of(u_f, d);
  std::vector<FieldSamples> sb;
  for (const auto& b : basis) sb.push_back(FieldSamples::of(b, d));
  // complex Hessians of the basis fields, reused by the coefficient Hessian
  std::vector<std::vector<CMat>> db(m);
  for (std::size_t i = 0; i < m; ++i)
    for (const auto& r : sb[i].interior) db[i].push_back(complex_hessian_raw(r.hess));

  auto field = [&](const std::vector<double>& c) {
    FieldSamples s = sf;
    for (std::size_t q = 0; q < s.interior.size(); ++q)
      for (std::size_t i = 0; i < m; ++i) s.interior[q].axpy(c[i], sb[i].interior[q]);
    for (std::size_t q = 0; q < s.boundary.size(); ++q)
      for (std::size_t i = 0; i < m; ++i) s.boundary[q].axpy(c[i], sb[i].boundary[q]);
    return s;
  };
  auto feasible = [&](const FieldSamples& s) { return detail::cone_margin(s, k) >= -tol.cone_slack; };
  // dE/dc_i = -(k+1) integral of b_i sigma_k(D u)
  auto gradient = [&](const FieldSamples& s) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
    for (std::size_t q = 0; q < s.interior.size(); ++q) {
      const double sk = d.rule.interior.weights(q) * detail::sigma_raw(complex_hessian_raw(s.interior[q].hess), k);
      for (std::size_t i = 0; i < m; ++i) g(i) -= (k + 1) * sb[i].interior[q].value * sk;
    }
    return g;
  };
  // d2E/dc_i dc_j = -(k+1) integral of b_i tr(T_{k-1}(D u) D b_j)
  auto hessian = [&](const FieldSamples& s) {
    const auto mi = static_cast<Eigen::Index>(m);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(mi, mi);
    for (std::size_t q = 0; q < s.interior.size(); ++q) {
      const CMat t = newton_tensor_raw(complex_hessian_raw(s.interior[q].hess), k - 1);
      const double w = d.rule.interior.weights(q);
      for (std::size_t j = 0; j < m; ++j) {
        const double lin = (t * db[j][q]).trace().real();
        for (std::size_t i = 0; i < m; ++i) h(i, j) -= (k + 1) * w * sb[i].interior[q].value * lin;
      }
    }
    return Eigen::MatrixXd(0.5 * (h + h.transpose()));
  };

  MinimizerResult res;
  res.report.name = "minimize_over_basis";
  res.report.k = k;
  const EnergyBreakdown ef = energy(sf, d, k);
  res.energy_f = ef.total;
  res.report.scale = 1.0 + ef.magnitude;
  res.report.tolerance = tol.quadrature_rel * tol.tol_scale * res.report.scale;

  std::vector<double> c = std::move(c0);
  FieldSamples s = field(c);
  if (!feasible(s)) throw InfeasibleError("minimize_over_basis: infeasible start (outside the cone closure)");
  double e = energy(s, d, k).total;
  res.report.energies.push_back(e);
  double alpha_gd = 1.0;
  int it = 0;
  for (; it < opt.iters && m > 0; ++it) {
    const Eigen::VectorXd g = gradient(s);
    if (g.norm() <= opt.grad_tol * res.report.scale) break;
    Eigen::VectorXd p = -g;
    bool newton = false;
    if (opt.method == DescentMethod::Newton) {
      const Eigen::LLT<Eigen::MatrixXd> llt(hessian(s));
      if (llt.info() == Eigen::Success) {
        p = llt.solve(-g);
        newton = true;
      }
    }
    const double slope = g.dot(p);  // negative along a descent direction
    double alpha = newton ? 1.0 : alpha_gd;
    bool accepted = false;
    for (int bt = 0; bt < opt.max_backtracks; ++bt, alpha *= 0.5) {
      std::vector<double> trial = c;
      for (std::size_t i = 0; i < m; ++i) trial[i] += alpha * p(static_cast<Eigen::Index>(i));
      FieldSamples st = field(trial);
      if (!feasible(st)) continue;
      const double et = energy(st, d, k).total;
      if (et <= e + opt.armijo * alpha * slope) {
        c = std::move(trial);
        s = std::move(st);
        e = et;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // stalled within rounding of a minimizer is fine; otherwise a genuine failure
      if (g.norm() > 1e-6 * res.report.scale)
        throw std::runtime_error("minimize_over_basis: line search failed after max backtracks");
      break;
    }
    res.report.energies.push_back(e);
    if (!newton) alpha_gd = 2.0 * alpha;
  }
  res.c = c;
  res.energy = e;
  res.iterations = it;
  double cn = 0.0;
  for (double ci : c) cn += ci * ci;
  cn = std::sqrt(cn);
  res.report.residuals = {e - res.energy_f, cn};
  res.report.notes.push_back("residuals = [E(final) - E(u_f), |c|]");
  res.report.notes.push_back(opt.method == DescentMethod::Newton ? "method = newton" : "method = gradient");
  res.report.verdict = e >= res.energy_f - res.report.tolerance && std::abs(e - res.energy_f) <= res.report.tolerance &&
                       cn < 1e-2;
  return res;
}

}  // namespace khess
