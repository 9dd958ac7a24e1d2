#pragma once

// Command suites behind the khess executable. Each command resolves a
// RunConfig, runs its checks and writes <out>/<command>_report.json plus
// <out>/<command>_summary.csv.

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "khess/varcheck.hpp"

namespace khess::cli {

using nlohmann::json;

enum ExitCode : int { kPass = 0, kVerdictFailure = 1, kConfigError = 2, kCalibrationError = 3 };

/// One named field: a stock name or an inline polynomial.
struct FieldSpec {
  std::string label;
  std::optional<PolyField> inline_poly;

  PolyField resolve(int n, double R) const {
    if (inline_poly) {
      detail::require(inline_poly->n() == n, "field '" + label + "': dimension does not match n");
      detail::require(inline_poly->is_real(), "field '" + label + "': polynomial must be real-valued");
      return *inline_poly;
    }
    return stock_field(label, n, R);
  }
};

struct FamilySpec {
  FieldSpec base;
  FieldSpec w;
};

struct RunConfig {
  std::optional<int> n;
  double R = 1.0;
  std::vector<int> k = {1, 2, 3};
  std::uint64_t seed = 42;
  int radial_order = 16;
  int angular_count = 4096;
  int boundary_count = 0;  // 0: same as angular_count
  double tol_scale = 1.0;
  double h = 1e-3;
  int samples = 200;  // random matrices for the algebra suite
  int points = 100;   // random points for pointwise suites
  int competitors = 20;
  int grid = 10;
  int minimizer_iters = 200;
  std::vector<double> minimizer_start = {-0.3, 0.05, 0.05, 0.05, 0.05};
  std::string minimizer_method = "newton";
  std::vector<double> epsilons = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<FieldSpec> fields;
  std::vector<FamilySpec> families;
  std::vector<CMat> matrices;  // extra Hermitian inputs for the algebra suite
  std::optional<int> oracle_n;
  std::string out = "khess_out";
};

inline FieldSpec parse_field(const json& j) {
  if (j.is_string()) return {j.get<std::string>(), std::nullopt};
  detail::require(j.is_object(), "config: a field is a stock name or a polynomial object");
  const std::string label = j.contains("label") ? j.at("label").get<std::string>() : "inline";
  return {label, PolyField::from_json(j)};
}

inline json field_to_json(const FieldSpec& f) {
  if (!f.inline_poly) return f.label;
  json j = f.inline_poly->to_json();
  j["label"] = f.label;
  return j;
}

inline CMat parse_matrix(const json& j) {
  detail::require(j.is_array() && !j.empty(), "config: matrix must be a nonempty array of rows");
  const auto n = static_cast<Eigen::Index>(j.size());
  CMat m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    detail::require(j[r].is_array() && static_cast<Eigen::Index>(j[r].size()) == n, "config: matrix must be square");
    for (Eigen::Index c = 0; c < n; ++c) {
      const json& e = j[r][c];
      if (e.is_number()) m(r, c) = e.get<double>();
      else {
        detail::require(e.is_array() && e.size() == 2, "config: matrix entries are numbers or [re, im]");
        m(r, c) = cplx(e[0].get<double>(), e[1].get<double>());
      }
    }
  }
  return m;
}

inline RunConfig parse_config(const json& j) {
  RunConfig c;
  try {
    for (const auto& [key, val] : j.items()) {
      if (key == "n") c.n = val.get<int>();
      else if (key == "R") c.R = val.get<double>();
      else if (key == "k") c.k = val.is_array() ? val.get<std::vector<int>>() : std::vector<int>{val.get<int>()};
      else if (key == "seed") c.seed = val.get<std::uint64_t>();
      else if (key == "radial_order") c.radial_order = val.get<int>();
      else if (key == "angular_count") c.angular_count = val.get<int>();
      else if (key == "boundary_count") c.boundary_count = val.get<int>();
      else if (key == "tol_scale") c.tol_scale = val.get<double>();
      else if (key == "h") c.h = val.get<double>();
      else if (key == "samples") c.samples = val.get<int>();
      else if (key == "points") c.points = val.get<int>();
      else if (key == "competitors") c.competitors = val.get<int>();
      else if (key == "grid") c.grid = val.get<int>();
      else if (key == "minimizer_iters") c.minimizer_iters = val.get<int>();
      else if (key == "minimizer_start") c.minimizer_start = val.get<std::vector<double>>();
      else if (key == "minimizer_method") c.minimizer_method = val.get<std::string>();
      else if (key == "epsilons") c.epsilons = val.get<std::vector<double>>();
      else if (key == "fields") {
        c.fields.clear();
        for (const auto& f : val) c.fields.push_back(parse_field(f));
      } else if (key == "families") {
        c.families.clear();
        for (const auto& f : val) c.families.push_back({parse_field(f.at("base")), parse_field(f.at("w"))});
      } else if (key == "matrices") {
        for (const auto& m : val) c.matrices.push_back(parse_matrix(m));
      } else if (key == "oracle_n") c.oracle_n = val.get<int>();
      else if (key == "out") c.out = val.get<std::string>();
      else throw ValidationError("config: unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return c;
}

inline void validate(const RunConfig& c) {
  detail::require(!c.n || (*c.n >= 1 && *c.n <= 8), "config: n must lie in [1, 8]");
  detail::require(c.R > 0.0, "config: R must be positive");
  detail::require(!c.k.empty(), "config: k list is empty");
  for (int k : c.k) detail::require(k >= 1, "config: k must be positive");
  detail::require(c.radial_order >= 4, "config: radial_order must be >= 4");
  detail::require(c.angular_count >= 100, "config: angular_count must be >= 100");
  detail::require(c.boundary_count == 0 || c.boundary_count >= 100, "config: boundary_count must be 0 or >= 100");
  detail::require(c.tol_scale > 0.0, "config: tol_scale must be positive");
  detail::require(c.h > 0.0, "config: h must be positive");
  detail::require(c.samples >= 1 && c.points >= 1 && c.competitors >= 0 && c.grid >= 2,
                  "config: sample counts must be positive and grid >= 2");
  detail::require(c.minimizer_method == "newton" || c.minimizer_method == "gradient",
                  "config: minimizer_method must be 'newton' or 'gradient'");
}

inline json to_json(const RunConfig& c, int n) {
  json fields = json::array(), families = json::array(), matrices = json::array();
  for (const auto& f : c.fields) fields.push_back(field_to_json(f));
  for (const auto& f : c.families) families.push_back({{"base", field_to_json(f.base)}, {"w", field_to_json(f.w)}});
  for (const auto& m : c.matrices) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index col = 0; col < m.cols(); ++col) row.push_back({m(r, col).real(), m(r, col).imag()});
      rows.push_back(row);
    }
    matrices.push_back(rows);
  }
  json j = {{"n", n},
            {"R", c.R},
            {"k", c.k},
            {"seed", c.seed},
            {"radial_order", c.radial_order},
            {"angular_count", c.angular_count},
            {"boundary_count", c.boundary_count},
            {"tol_scale", c.tol_scale},
            {"h", c.h},
            {"samples", c.samples},
            {"points", c.points},
            {"competitors", c.competitors},
            {"grid", c.grid},
            {"minimizer_iters", c.minimizer_iters},
            {"minimizer_start", c.minimizer_start},
            {"minimizer_method", c.minimizer_method},
            {"epsilons", c.epsilons},
            {"fields", fields},
            {"families", families},
            {"matrices", matrices},
            {"out", c.out}};
  j["oracle_n"] = c.oracle_n ? json(*c.oracle_n) : json(nullptr);
  return j;
}

// ---------------------------------------------------------------------------
// Check collection.

struct Check {
  std::string check;
  int k = 0;
  int n = 0;
  double value = 0.0;
  double reference = 0.0;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct Outcome {
  std::vector<Check> checks;
  json experiments = json::array();

  /// Records a check; NaN residuals fail.
  void add(const std::string& name, int k, int n, double value, double reference, double residual,
           double tolerance) {
    checks.push_back({name, k, n, value, reference, residual, tolerance, residual <= tolerance});
  }
  void add_flag(const std::string& name, int k, int n, bool ok) {
    checks.push_back({name, k, n, ok ? 1.0 : 0.0, 1.0, ok ? 0.0 : 1.0, 0.0, ok});
  }
  /// value against reference with |value - reference| <= tol.
  void add_close(const std::string& name, int k, int n, double value, double reference, double tol) {
    add(name, k, n, value, reference, std::abs(value - reference), tol);
  }
  void add_experiment(const ExperimentReport& r, int n) {
    json j = khess::to_json(r);
    j["n"] = n;
    experiments.push_back(j);
    add(r.name + (r.j > 0 ? "_j" + std::to_string(r.j) : ""), r.k, n, r.fd.empty() ? 0.0 : r.fd.front(),
        r.analytic.value_or(0.0), r.verdict ? 0.0 : 1.0, 0.0);
  }
  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

inline void write_summary_csv(std::ostream& os, const std::vector<Check>& checks) {
  os << "check,k,n,value,reference,residual,tolerance,pass\n";
  os << std::setprecision(17);
  for (const auto& c : checks)
    os << c.check << ',' << c.k << ',' << c.n << ',' << c.value << ',' << c.reference << ',' << c.residual << ','
       << c.tolerance << ',' << (c.pass ? "true" : "false") << '\n';
}

inline json checks_to_json(const std::vector<Check>& checks) {
  json a = json::array();
  for (const auto& c : checks)
    a.push_back({{"check", c.check},
                 {"k", c.k},
                 {"n", c.n},
                 {"value", c.value},
                 {"reference", c.reference},
                 {"residual", c.residual},
                 {"tolerance", c.tolerance},
                 {"pass", c.pass}});
  return a;
}

// ---------------------------------------------------------------------------
// Shared helpers.

/// Seeded random Hermitian matrix with standard normal entries.
template <class Rng>
HermitianMatrix random_hermitian(int n, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  CMat b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = cplx(g(rng), g(rng));
  return HermitianMatrix::symmetrize(b);
}

/// Random Hermitian matrix shifted along the identity until it lies in the k-cone.
template <class Rng>
HermitianMatrix random_in_cone(int n, int k, Rng& rng) {
  HermitianMatrix a = random_hermitian(n, rng);
  std::uniform_real_distribution<double> extra(0.0, 1.0);
  double shift = 0.0;
  while (!cone_membership(a + shift * HermitianMatrix::identity(n), k).in_cone) shift += 0.25;
  return a + (shift + 0.1 * extra(rng)) * HermitianMatrix::identity(n);
}

inline double spectral_norm(const HermitianMatrix& a) {
  const auto s = spectrum(a).values;
  double m = 0.0;
  for (double v : s) m = std::max(m, std::abs(v));
  return m;
}

inline std::vector<PolyField> resolve_fields(const RunConfig& c, int n) {
  std::vector<PolyField> out;
  if (c.fields.empty())
    for (const auto& name : stock_library_names()) out.push_back(stock_field(name, n, c.R));
  else
    for (const auto& f : c.fields) out.push_back(f.resolve(n, c.R));
  return out;
}

inline std::vector<std::string> field_labels(const RunConfig& c) {
  std::vector<std::string> out;
  if (c.fields.empty()) return stock_library_names();
  for (const auto& f : c.fields) out.push_back(f.label);
  return out;
}

inline QuadratureRule make_rule(const RunConfig& c, int n) {
  return build_ball_quadrature(n, c.radial_order, c.angular_count, c.seed, c.R, c.boundary_count);
}

/// Builds the rule and throws CalibrationError if it misses closed forms.
inline Discretization calibrated(const RunConfig& c, int n, Outcome* out = nullptr) {
  QuadratureRule rule = make_rule(c, n);
  const CalibrationReport cal = calibrate(rule, 6, 5e-3 * c.tol_scale);
  if (out) {
    out->add("calibration_volume", 0, n, cal.volume_rel, 0.0, cal.volume_rel, 5e-3 * c.tol_scale);
    out->add("calibration_area", 0, n, cal.area_rel, 0.0, cal.area_rel, 5e-3 * c.tol_scale);
    out->add("calibration_moments_deg6", 0, n, cal.moment_rel, 0.0, cal.moment_rel, 5e-3 * c.tol_scale);
  }
  if (!cal.pass) {
    std::ostringstream os;
    os << "quadrature calibration failed: volume " << cal.volume_rel << ", area " << cal.area_rel << ", moments "
       << cal.moment_rel;
    throw CalibrationError(os.str());
  }
  return Discretization::make(std::move(rule));
}

inline std::vector<int> valid_ks(const RunConfig& c, int n, json& skipped) {
  std::vector<int> ks;
  for (int k : c.k) {
    if (k <= n) ks.push_back(k);
    else skipped.push_back({{"k", k}, {"n", n}, {"reason", "k exceeds n"}});
  }
  return ks;
}

// ---------------------------------------------------------------------------
// Suites.

/// Algebra identities on random Hermitian matrices of dimension 1..max_n.
inline void algebra_suite(Outcome& out, int max_n, int samples, std::uint64_t seed,
                          const std::vector<CMat>& extra = {}, double tol_scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::vector<HermitianMatrix> mats;
  for (int s = 0; s < samples; ++s) mats.push_back(random_hermitian(1 + s % max_n, rng));
  for (const auto& m : extra) mats.push_back(HermitianMatrix::from_raw(m));

  double trace_res = 0.0, contr_res = 0.0, diag_res = 0.0, tdiag_res = 0.0;
  double oracle_sigma = 0.0, oracle_newton = 0.0, oracle_tk = 0.0;
  for (const auto& a : mats) {
    const int n = a.dim();
    const double scale = 1.0 + spectral_norm(a);
    for (int k = 0; k <= n - 1; ++k) {
      const CMat t = newton_tensor(a, k).matrix();
      const double ref = (n - k) * sigma_k(a, k);
      trace_res = std::max(trace_res, std::abs(t.trace().real() - ref) / std::pow(scale, k));
    }
    for (int k = 1; k <= n; ++k) {
      const CMat t = newton_tensor(a, k - 1).matrix();
      const double lhs = (a.matrix() * t).trace().real() / k;
      contr_res = std::max(contr_res, std::abs(lhs - sigma_k(a, k)) / std::pow(scale, k));
      const std::vector<HermitianMatrix> same(k, a);
      diag_res = std::max(diag_res, std::abs(sigma_k_polarized(same) - sigma_k(a, k)) / std::pow(scale, k));
      if (k <= n - 1) {
        const std::vector<HermitianMatrix> samek(k, a);
        tdiag_res = std::max(tdiag_res, (newton_tensor_polarized(samek).matrix() - newton_tensor(a, k).matrix())
                                                .cwiseAbs()
                                                .maxCoeff() /
                                            std::pow(scale, k));
      }
    }
    if (n <= oracle::kMaxDim) {
      for (int k = 1; k <= n; ++k) {
        std::vector<HermitianMatrix> args;
        double s = 1.0;
        for (int a2 = 0; a2 < k; ++a2) {
          args.push_back(random_hermitian(n, rng));
          s *= 1.0 + spectral_norm(args.back());
        }
        oracle_sigma = std::max(oracle_sigma, std::abs(sigma_k_polarized(args) - oracle::sigma_k_delta(args)) / s);
        if (k <= n - 1) {
          oracle_newton = std::max(oracle_newton, (newton_tensor_polarized(args).matrix() -
                                                   oracle::newton_tensor_delta(args, n))
                                                          .cwiseAbs()
                                                          .maxCoeff() /
                                                      s);
        }
      }
      for (int k = 0; k <= n - 1; ++k) {
        const std::vector<HermitianMatrix> same(k, a);
        oracle_tk = std::max(oracle_tk, (newton_tensor(a, k).matrix() - oracle::newton_tensor_delta(same, n))
                                                .cwiseAbs()
                                                .maxCoeff() /
                                            std::pow(scale, k));
      }
    }
  }
  const double tol = 1e-10 * tol_scale;
  out.add("trace_identity", 0, max_n, trace_res, 0.0, trace_res, tol);
  out.add("contraction_identity", 0, max_n, contr_res, 0.0, contr_res, tol);
  out.add("polarization_diagonal", 0, max_n, diag_res, 0.0, diag_res, tol);
  out.add("newton_polarization_diagonal", 0, max_n, tdiag_res, 0.0, tdiag_res, tol);
  out.add("delta_oracle_sigma", 0, std::min(max_n, oracle::kMaxDim), oracle_sigma, 0.0, oracle_sigma, tol);
  out.add("delta_oracle_newton_polarized", 0, std::min(max_n, oracle::kMaxDim), oracle_newton, 0.0, oracle_newton,
          tol);
  out.add("delta_oracle_newton", 0, std::min(max_n, oracle::kMaxDim), oracle_tk, 0.0, oracle_tk, tol);
}

/// PSD of polarized Newton tensors, concavity of sigma_k^{1/k}, cone nesting,
/// linearization residuals.
inline void cone_suite(Outcome& out, int n, int samples, std::uint64_t seed, double tol_scale = 1.0) {
  std::mt19937_64 rng(seed);
  for (int k = 1; k <= n - 1; ++k) {
    double min_eig = std::numeric_limits<double>::infinity();
    for (int s = 0; s < samples; ++s) {
      std::vector<HermitianMatrix> args;
      for (int a = 0; a < k; ++a) args.push_back(random_in_cone(n, k + 1, rng));
      min_eig = std::min(min_eig, spectrum(newton_tensor_polarized(args)).values.back());
    }
    out.add("newton_polarized_psd", k, n, min_eig, 0.0, std::max(0.0, -min_eig), 1e-10 * tol_scale);
  }
  for (int k = 1; k <= n; ++k) {
    double worst = 0.0;
    bool nesting = true;
    for (int s = 0; s < samples; ++s) {
      const HermitianMatrix a = random_in_cone(n, k, rng), b = random_in_cone(n, k, rng);
      for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const double lhs = std::pow(sigma_k((1 - t) * a + t * b, k), 1.0 / k);
        const double rhs = (1 - t) * std::pow(sigma_k(a, k), 1.0 / k) + t * std::pow(sigma_k(b, k), 1.0 / k);
        worst = std::max(worst, rhs - lhs);
      }
      const HermitianMatrix r = random_hermitian(n, rng);
      if (cone_membership(r, k).in_cone)
        for (int j = 1; j < k; ++j) nesting = nesting && cone_membership(r, j).in_cone;
    }
    out.add("concavity_sigma_root", k, n, worst, 0.0, std::max(0.0, worst), 1e-9 * tol_scale);
    out.add_flag("cone_nesting", k, n, nesting);
  }
  for (int k = 0; k + 1 <= n; ++k) {
    double worst = 0.0;
    for (int s = 0; s < 10; ++s) {
      const HermitianMatrix a = random_hermitian(n, rng);
      const double sc = 1.0 + spectral_norm(a);
      worst = std::max(worst, linearization_residual(a, k, 1e-5) / (sc * sc));
    }
    out.add("linearization_residual", k, n, worst, 0.0, worst, 1e-6 * tol_scale);
  }
}

/// Wirtinger invariants on stock fields at random points.
inline void wirtinger_suite(Outcome& out, const std::vector<PolyField>& fields, int n, int points,
                            std::uint64_t seed, double R, double tol_scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-R, R);
  double herm = 0.0, lap = 0.0;
  for (const auto& f : fields) {
    const PolyField lap_real = f.laplacian();
    for (int s = 0; s < points; ++s) {
      std::vector<double> p(2 * n);
      for (auto& c : p) c = unif(rng);
      const CMat h = complex_hessian_raw(FieldDerivs(f).eval(p).hess);
      herm = std::max(herm, (h - h.adjoint()).cwiseAbs().maxCoeff());
      const double scale = 1.0 + std::abs(lap_real.eval_real(p));
      lap = std::max(lap, std::abs(h.trace().real() - 0.5 * lap_real.eval_real(p)) / scale);
    }
  }
  out.add("complex_hessian_hermitian", 0, n, herm, 0.0, herm, 1e-12 * tol_scale);
  out.add("complex_laplacian_half_real", 0, n, lap, 0.0, lap, 1e-12 * tol_scale);

  bool sym = true;
  for (const auto& f : fields)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          sym = sym && f.dz(i).dzbar(j).dz(k) == f.dz(i).dz(k).dzbar(j);
          sym = sym && f.dz(i).dzbar(j).dzbar(k) == f.dz(i).dzbar(k).dzbar(j);
        }
  out.add_flag("third_derivative_symmetry", 0, n, sym);

  double ph = 0.0;
  for (const auto& f : pluriharmonic_library(n))
    for (const auto& row : complex_hessian_poly(f))
      for (const auto& e : row) ph = std::max(ph, e.max_coeff());
  out.add("pluriharmonic_zero_hessian", 0, n, ph, 0.0, ph, 1e-12 * tol_scale);
}

/// Exact divergences of T_k(D u) for the stock fields.
inline void divergence_free_suite(Outcome& out, const std::vector<PolyField>& fields, int n, int points,
                                  std::uint64_t seed, double R, double tol_scale = 1.0) {
  for (int k = 1; k <= std::min(2, n - 1); ++k) {
    double worst = 0.0;
    for (std::size_t f = 0; f < fields.size(); ++f) {
      const auto r = newton_divergence(fields[f], k, points, seed + f, R);
      worst = std::max({worst, r.barred, r.unbarred});
    }
    out.add("newton_divergence_free", k, n, worst, 0.0, worst, 1e-9 * tol_scale);
  }
}

/// Closed forms of the round sphere of radius R and the pointwise identities.
inline void sphere_geometry_suite(Outcome& out, const std::vector<PolyField>& fields, int n, double R, int points,
                                  std::uint64_t seed, double tol_scale = 1.0) {
  const DomainSpec spec = DomainSpec::ball(n, R);
  std::mt19937_64 rng(seed);
  double gram = 0.0, perp = 0.0, hb = 0.0, h = 0.0, lh = 0.0, lzt = 0.0, hb_rel = 0.0, half = 0.0;
  double tnn = 0.0, rel = 0.0;
  for (int s = 0; s < points; ++s) {
    const auto p = random_sphere_point(n, R, rng);
    const BoundaryPoint b = boundary_point(spec, p);
    CMat all(n, n);
    all << b.frame.Z, b.frame.Zn;
    gram = std::max(gram, (all.adjoint() * all - CMat::Identity(n, n)).cwiseAbs().maxCoeff());
    perp = std::max(perp, (b.frame.Z.adjoint() * b.frame.Zn).cwiseAbs().maxCoeff());
    hb = std::max(hb, std::abs(b.shape.Hb - (2.0 * n - 2.0) / R));
    h = std::max(h, std::abs(b.shape.H - (2.0 * n - 1.0) / R));
    lh = std::max(lh, (b.shape.L_H - CMat::Identity(n - 1, n - 1) / R).cwiseAbs().maxCoeff());
    lzt = std::max(lzt, n > 1 ? b.shape.L_ZT.cwiseAbs().maxCoeff() : 0.0);
    hb_rel = std::max(hb_rel, std::abs(b.shape.Hb - (b.shape.H - b.frame.T.dot(b.shape.A * b.frame.T))));
    half = std::max(half, std::abs(b.shape.L_H.trace().real() - 0.5 * b.shape.Hb));
    for (const auto& f : fields) {
      const FieldJet j = jet(f, p);
      const auto sides = tnn_cross_check(j, b.frame, b.shape);
      const double scale = 1.0 + std::abs(sides.lhs);
      tnn = std::max(tnn, std::abs(sides.lhs - sides.rhs) / scale);
      rel = std::max(rel, laplacian_relation_residual(j, b.frame, b.shape) / scale);
    }
  }
  const double tol = 1e-9 * tol_scale;
  out.add("frame_unitary", 0, n, gram, 0.0, gram, 1e-12 * tol_scale);
  out.add("frame_tangent_perp_normal", 0, n, perp, 0.0, perp, 1e-12 * tol_scale);
  out.add("sphere_Hb", 0, n, hb, 0.0, hb, tol);
  out.add("sphere_H", 0, n, h, 0.0, h, tol);
  out.add("sphere_levi_identity", 0, n, lh, 0.0, lh, tol);
  out.add("sphere_L_ZT_zero", 0, n, lzt, 0.0, lzt, tol);
  out.add("Hb_relation", 0, n, hb_rel, 0.0, hb_rel, 1e-10 * tol_scale);
  out.add("half_trace_relation", 0, n, half, 0.0, half, 1e-10 * tol_scale);
  out.add("tnn_identity", 0, n, tnn, 0.0, tnn, tol);
  out.add("laplacian_relation", 0, n, rel, 0.0, rel, tol);
}

/// Shape-data invariants at every boundary node and divergence-theorem residuals.
inline void rule_geometry_suite(Outcome& out, const Discretization& d, const std::vector<PolyField>& fields,
                                double tol_scale = 1.0) {
  const int n = d.n();
  double hb_rel = 0.0, half = 0.0;
  for (const auto& b : d.geom) {
    hb_rel = std::max(hb_rel, std::abs(b.shape.Hb - (b.shape.H - b.frame.T.dot(b.shape.A * b.frame.T))));
    half = std::max(half, std::abs(b.shape.L_H.trace().real() - 0.5 * b.shape.Hb));
  }
  out.add("node_Hb_relation", 0, n, hb_rel, 0.0, hb_rel, 1e-10 * tol_scale);
  out.add("node_half_trace_relation", 0, n, half, 0.0, half, 1e-10 * tol_scale);
  if (fields.size() < 2) return;
  for (int k = 0; k <= n - 1; ++k) {
    const auto r = verify_divergence_identity(d.domain, d.rule, PolyField::constant(n, 1.0),
                                              stock_field("x:1", n, d.rule.R) * stock_field("x:1", n, d.rule.R),
                                              fields[0], k);
    out.add("divergence_theorem_x1sq", k, n, std::abs(r.lhs), std::abs(r.rhs), r.residual,
            5e-3 * tol_scale * r.scale);
    const auto r2 = verify_divergence_identity(d.domain, d.rule, stock_field("x:1", n, d.rule.R),
                                               stock_field("x:1", n, d.rule.R) * fields[0], fields[1], k);
    out.add("divergence_theorem_fields", k, n, std::abs(r2.lhs), std::abs(r2.rhs), r2.residual,
            5e-3 * tol_scale * r2.scale);
  }
}

/// Integral of |z|^2 over the ball of radius R in C^n.
inline double ball_r2_integral(int n, double R) {
  return unit_sphere_area(n) * std::pow(R, 2 * n + 2) / (2.0 * n + 2.0);
}

inline void energy_suite(Outcome& out, const Discretization& d, const std::vector<PolyField>& fields,
                         const std::vector<std::string>& labels, const std::vector<int>& ks, double tol_scale,
                         const std::filesystem::path* density_dir) {
  const int n = d.n();
  const double R = d.rule.R;
  for (int k : ks) {
    double gap = 0.0, e3 = 0.0, gauge = 0.0;
    for (std::size_t f = 0; f < fields.size(); ++f) {
      const FieldSamples s = FieldSamples::of(fields[f], d);
      const EnergyBreakdown e = energy(s, d, k);
      gap = std::max(gap, e.route_gap / (1.0 + e.magnitude));
      json j = khess::to_json(e);
      j["field"] = labels[f];
      j["n"] = n;
      if (k == 2) {
        const double simplified = energy3_simplified(s, d);
        j["e3_simplified"] = simplified;
        e3 = std::max({e3, std::abs(simplified - e.total) / (1.0 + std::abs(e.total)),
                       std::abs(simplified - e.total_q) / (1.0 + std::abs(e.total_q))});
      }
      out.experiments.push_back(j);
      if (f == 0 && density_dir) {
        std::ofstream os(*density_dir / ("boundary_density_k" + std::to_string(k) + ".csv"));
        write_csv(os, boundary_density_report(s, d, k));
      }
    }
    gauge = std::abs(energy(PolyField::constant(n, 2.5), d, k).total);
    out.add("route_equivalence", k, n, gap, 0.0, gap, 1e-9 * tol_scale);
    if (k == 2) out.add("e3_route_agreement", k, n, e3, 0.0, e3, 5e-3 * tol_scale);
    out.add("constant_gauge", k, n, gauge, 0.0, gauge, 1e-12 * tol_scale);

    // k = 1 density is u_nu / 2 exactly
    if (k == 1) {
      double worst = 0.0;
      const FieldSamples s = FieldSamples::of(fields[0], d);
      for (std::size_t q = 0; q < s.boundary.size(); ++q) {
        const FieldJet j = to_field_jet(s.boundary[q]);
        worst = std::max(worst, std::abs(qk_density(j, d.geom[q].frame, d.geom[q].shape, 1) -
                                         0.5 * normal_derivative(j, d.geom[q].frame)));
      }
      out.add("q1_density_half_unu", 1, n, worst, 0.0, worst, 1e-14 * tol_scale);
    }
  }

  // Closed forms for u = |z|^2 on the ball of radius R.
  const PolyField u = PolyField::abs2(n);
  const FieldSamples su = FieldSamples::of(u, d);
  const double r2 = ball_r2_integral(n, R);
  for (int k : ks) {
    // sigma_k(2I) = C(n,k) 2^k
    const double ref_int = -detail::binomial(n, k) * std::pow(2.0, k) * r2;
    const double val = interior_term(su, d, k);
    out.add_close("abs2_interior_closed_form", k, n, val, ref_int, 5e-3 * tol_scale * std::abs(ref_int));
  }
  if (std::find(ks.begin(), ks.end(), 1) != ks.end()) {
    // half the Dirichlet integral: 2 * integral of r^2
    const double ref = 2.0 * r2;
    out.add_close("abs2_E2_closed_form", 1, n, energy(su, d, 1).total, ref, 5e-3 * tol_scale * ref);
  }
  if (std::find(ks.begin(), ks.end(), 2) != ks.end() && n >= 2) {
    // -3 * R^2 * (2R)^2 * (n-1)/R * Area(S_R)
    const double area = unit_sphere_area(n) * std::pow(R, 2 * n - 1);
    const double ref = -3.0 * R * R * 4.0 * R * R * (n - 1.0) / R * area;
    out.add_close("abs2_S3_closed_form", 2, n, s_i_term(su, d, 3, 2), ref, 5e-3 * tol_scale * std::abs(ref));
  }
}

/// Default perturbation families for the variation suite.
inline std::vector<FamilySpec> default_families() {
  return {{{"abs2", {}}, {"const:1", {}}},
          {{"abs2*abs2", {}}, {"x:1", {}}},
          {{"abs2", {}}, {"x:1", {}}}};
}

inline void variation_suite(Outcome& out, const Discretization& d, const std::vector<PerturbationFamily>& fams,
                            const std::vector<int>& ks, double h, double tol_scale) {
  const int n = d.n();
  VarcheckTolerances tol;
  tol.tol_scale = tol_scale;
  for (const auto& fam : fams) {
    const FamilySamples fs = FamilySamples::of(fam, d);
    for (int k : ks) {
      out.add_experiment(first_variation_check(fs, k, d, h, tol), n);
      out.add_experiment(second_variation_check(fs, k, d, h, tol), n);
      for (int j = 3; j <= k + 1; ++j) out.add_experiment(higher_derivative_check(fs, k, j, d, h, tol), n);
    }
  }
}

/// Random w with (1 - |z|^2) w feasible for k = 1, i.e. nonnegative Laplacian.
inline std::vector<PerturbationFamily> random_feasible_competitors(const PolyField& u_f, const Discretization& d,
                                                                   int count, std::uint64_t seed, int k,
                                                                   double slack) {
  const int n = d.n();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> lead(0.2, 1.0), coef(-0.3, 0.3);
  std::vector<PerturbationFamily> out;
  const FieldSamples sf = FieldSamples::of(u_f, d);
  for (int attempt = 0; static_cast<int>(out.size()) < count && attempt < 50 * (count + 1); ++attempt) {
    PolyField w = PolyField::constant(n, -lead(rng));
    for (int v = 0; v < 2 * n; ++v) w += coef(rng) * PolyField::coord(n, v);
    auto fam = PerturbationFamily::make(u_f, w, d.rule.R, {1.0});
    const FieldSamples su = FieldSamples::combine(1.0, sf, 1.0, FieldSamples::of(fam.direction, d));
    if (detail::cone_margin(su, k) >= -slack) out.push_back(std::move(fam));
  }
  return out;
}

inline void dirichlet_suite(Outcome& out, const Discretization& d, const RunConfig& c, const std::vector<int>& ks) {
  const int n = d.n();
  const double R = d.rule.R;
  VarcheckTolerances tol;
  tol.tol_scale = c.tol_scale;

  // (a) k = 1 with boundary data x_1^2
  if (std::find(ks.begin(), ks.end(), 1) != ks.end()) {
    const PolyField x1 = PolyField::x(n, 0);
    const PolyField u_f = harmonic_extension_ball(x1 * x1, R);
    out.add("harmonic_extension_laplacian", 1, n, u_f.laplacian().max_coeff(), 0.0, u_f.laplacian().max_coeff(),
            1e-12);
    auto comps = random_feasible_competitors(u_f, d, c.competitors, c.seed, 1, tol.cone_slack);
    out.add("feasible_competitor_count", 1, n, static_cast<double>(comps.size()), c.competitors,
            std::abs(static_cast<double>(comps.size()) - c.competitors), 0.0);
    out.add_experiment(dirichlet_principle_experiment(u_f, comps, 1, d, tol), n);

    std::vector<PolyField> basis;
    const PolyField bump = ball_bump(n, R);
    basis.push_back(bump);
    for (int v = 0; v < 2 * n; ++v) basis.push_back(bump * PolyField::coord(n, v));
    std::vector<double> start = c.minimizer_start;
    start.resize(basis.size(), 0.05);
    MinimizerOptions opt;
    opt.iters = c.minimizer_iters;
    opt.method = c.minimizer_method == "gradient" ? DescentMethod::Gradient : DescentMethod::Newton;
    const auto m = minimize_over_basis(u_f, basis, 1, d, start, opt, tol);
    json j = khess::to_json(m.report);
    j["n"] = n;
    j["c"] = m.c;
    j["iterations"] = m.iterations;
    out.experiments.push_back(j);
    double cn = 0.0;
    for (double ci : m.c) cn += ci * ci;
    out.add("minimizer_coefficient_norm", 1, n, std::sqrt(cn), 0.0, std::sqrt(cn), 1e-2);
    out.add("minimizer_energy_gap", 1, n, m.energy, m.energy_f, std::abs(m.energy - m.energy_f), m.report.tolerance);
  }

  // (b) pluriharmonic u_f = Re z_1^2 with the eps (|z|^2 - R^2) family
  const PolyField u_f = stock_field("re:2", n, R);
  const PolyField up = -1.0 * ball_bump(n, R);  // |z|^2 - R^2
  std::mt19937_64 rng(c.seed + 1);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int k : ks) {
    PerturbationFamily fam{u_f, up, c.epsilons};
    out.add_experiment(dirichlet_principle_experiment(u_f, {fam}, k, d, tol), n);
    out.add_experiment(convexity_scan(u_f, u_f + c.epsilons.back() * up, k, d, c.grid, tol), n);

    // criticality: first variation at u_f vanishes for random boundary-vanishing directions
    const FieldSamples sf = FieldSamples::of(u_f, d);
    double worst = 0.0;
    for (int s = 0; s < c.competitors; ++s) {
      PolyField w = PolyField::constant(n, g(rng));
      for (int v = 0; v < 2 * n; ++v) w += g(rng) * PolyField::coord(n, v);
      const FieldSamples sv = FieldSamples::of(ball_bump(n, R) * w, d);
      std::vector<const FieldSamples*> args(k, &sf);
      worst = std::max(worst, std::abs((k + 1) * polarized_interior(sv, args, d)));
    }
    out.add("criticality_first_variation", k, n, worst, 0.0, worst, 5e-3 * c.tol_scale);
  }
}

// ---------------------------------------------------------------------------
// Command driver.

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline int default_n(const std::string& command) { return command == "identities" ? 3 : 2; }

/// Runs one command and writes its report; returns the process exit code.
/// Errors are reported on `err`.
inline int run_command(const std::string& command, const RunConfig& cfg, std::ostream& err = std::cerr) {
  try {
    validate(cfg);
    const int n = cfg.n.value_or(default_n(command));
    Outcome out;
    json skipped = json::array();
    const auto ks = valid_ks(cfg, n, skipped);
    const std::filesystem::path dir(cfg.out);
    std::filesystem::create_directories(dir);

    if (command == "identities") {
      if (cfg.oracle_n && *cfg.oracle_n > oracle::kMaxDim)
        throw OracleLimitError("delta oracle limit: requested n = " + std::to_string(*cfg.oracle_n) +
                               ", maximum is " + std::to_string(oracle::kMaxDim));
      const auto fields = resolve_fields(cfg, n);
      algebra_suite(out, n, cfg.samples, cfg.seed, cfg.matrices, cfg.tol_scale);
      cone_suite(out, n, cfg.points, cfg.seed + 1, cfg.tol_scale);
      wirtinger_suite(out, fields, n, cfg.points, cfg.seed + 2, cfg.R, cfg.tol_scale);
      divergence_free_suite(out, fields, n, cfg.points, cfg.seed + 3, cfg.R, cfg.tol_scale);
    } else if (command == "geometry") {
      const auto fields = resolve_fields(cfg, n);
      const Discretization d = calibrated(cfg, n, &out);
      sphere_geometry_suite(out, fields, n, cfg.R, cfg.points, cfg.seed, cfg.tol_scale);
      rule_geometry_suite(out, d, fields, cfg.tol_scale);
    } else if (command == "energy") {
      const auto fields = resolve_fields(cfg, n);
      const Discretization d = calibrated(cfg, n, &out);
      energy_suite(out, d, fields, field_labels(cfg), ks, cfg.tol_scale, &dir);
    } else if (command == "variation") {
      const Discretization d = calibrated(cfg, n, &out);
      std::vector<PerturbationFamily> fams;
      for (const auto& f : cfg.families.empty() ? default_families() : cfg.families)
        fams.push_back(PerturbationFamily::make(f.base.resolve(n, cfg.R), f.w.resolve(n, cfg.R), cfg.R));
      variation_suite(out, d, fams, ks, cfg.h, cfg.tol_scale);
    } else if (command == "dirichlet") {
      const Discretization d = calibrated(cfg, n, &out);
      dirichlet_suite(out, d, cfg, ks);
    } else {
      throw ValidationError("unknown command '" + command + "'");
    }

    const bool pass = out.all_pass();
    json report = {{"header", {{"tool", "khess"}, {"command", command}, {"timestamp", utc_timestamp()}}},
                   {"config", to_json(cfg, n)},
                   {"skipped", skipped},
                   {"checks", checks_to_json(out.checks)},
                   {"experiments", out.experiments},
                   {"verdict", pass ? "pass" : "fail"}};
    std::ofstream(dir / (command + "_report.json")) << report.dump(2) << '\n';
    std::ofstream csv(dir / (command + "_summary.csv"));
    write_summary_csv(csv, out.checks);
    for (const auto& c : out.checks)
      if (!c.pass) err << "FAIL " << command << ": " << c.check << " k=" << c.k << " n=" << c.n
                       << " residual=" << c.residual << " tolerance=" << c.tolerance << '\n';
    return pass ? kPass : kVerdictFailure;
  } catch (const CalibrationError& e) {
    err << "calibration error: " << e.what() << '\n';
    return kCalibrationError;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return kConfigError;
  } catch (const OracleLimitError& e) {
    err << "oracle limit: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::out_of_range& e) {
    err << "out of range: " << e.what() << '\n';
    return kConfigError;
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << '\n';
    return kVerdictFailure;
  }
}

}  // namespace khess::cli
