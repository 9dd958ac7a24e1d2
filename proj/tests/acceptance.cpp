// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   acceptance [scratch_dir]

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>

#include "khess/cli.hpp"

using namespace khess;
using namespace khess::cli;
namespace fs = std::filesystem;

namespace {

constexpr double pi = std::numbers::pi;

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

/// First failing check of an outcome, or the empty string.
std::string first_failure(const Outcome& o) {
  for (const auto& c : o.checks)
    if (!c.pass) return c.check + " k=" + std::to_string(c.k) + " n=" + std::to_string(c.n) +
                        " residual=" + fmt(c.residual) + " tol=" + fmt(c.tolerance);
  return "";
}

double worst_residual(const Outcome& o) {
  double w = 0.0;
  for (const auto& c : o.checks) w = std::max(w, c.residual);
  return w;
}

struct Result {
  bool pass;
  std::string detail;
};

Discretization default_disc(int n) {
  RunConfig c;
  return calibrated(c, n);
}

Result criterion1() {
  Stopwatch sw;
  Outcome o;
  algebra_suite(o, 6, 200, 42);
  const double t = sw.seconds();
  const std::string f = first_failure(o);
  const bool ok = f.empty() && t < 10.0;
  return {ok, "200 matrices n<=6, worst residual " + fmt(worst_residual(o)) + ", " + fmt(t) + " s" +
                  (f.empty() ? "" : "; " + f)};
}

Result criterion2() {
  Stopwatch sw;
  double worst = 0.0;
  int cases = 0;
  for (int n : {2, 3})
    for (int k : {1, 2}) {
      if (k > n - 1) continue;  // T_k of an n x n matrix vanishes identically for k >= n
      for (std::size_t f = 0; f < stock_library_names().size(); ++f) {
        const auto r = newton_divergence(stock_field(stock_library_names()[f], n), k, 100, 1000 + f);
        worst = std::max({worst, r.barred, r.unbarred});
        ++cases;
      }
    }
  const double t = sw.seconds();
  return {worst <= 1e-9 && t < 30.0,
          std::to_string(cases) + " (field, n, k) cases, worst divergence " + fmt(worst) + ", " + fmt(t) + " s"};
}

Result criterion3() {
  Outcome o;
  for (int n : {2, 3}) {
    std::vector<PolyField> fields;
    for (const auto& name : stock_library_names()) fields.push_back(stock_field(name, n));
    sphere_geometry_suite(o, fields, n, 1.0, 100, 7);
  }
  const std::string f = first_failure(o);
  return {f.empty(), "n in {2,3}, 100 points, worst residual " + fmt(worst_residual(o)) +
                         (f.empty() ? "" : "; " + f)};
}

Result criterion4() {
  RunConfig c;
  const QuadratureRule rule = make_rule(c, 2);
  const CalibrationReport cal = calibrate(rule, 6, 5e-3);
  const Discretization d = Discretization::make(rule);
  std::vector<PolyField> fields;
  for (const auto& name : stock_library_names()) fields.push_back(stock_field(name, 2));
  Outcome o;
  rule_geometry_suite(o, d, fields);
  double div = 0.0;
  for (const auto& ch : o.checks)
    if (ch.check.rfind("divergence_theorem", 0) == 0) div = std::max(div, ch.residual / ch.tolerance * 5e-3);
  const std::string f = first_failure(o);
  return {cal.pass && f.empty(), "volume " + fmt(cal.volume_rel) + ", area " + fmt(cal.area_rel) +
                                     ", moments<=6 " + fmt(cal.moment_rel) + ", divergence residual/scale " +
                                     fmt(div) + (f.empty() ? "" : "; " + f)};
}

Result criterion5() {
  double gap = 0.0, e3 = 0.0;
  for (int n : {2, 3}) {
    const Discretization d = default_disc(n);
    for (const auto& name : stock_library_names()) {
      const FieldSamples s = FieldSamples::of(stock_field(name, n), d);
      for (int k = 1; k <= n; ++k) {
        const EnergyBreakdown e = energy(s, d, k);
        gap = std::max(gap, e.route_gap);
        if (k == 2) {
          const double simplified = energy3_simplified(s, d);
          // pluriharmonic fields have zero energy, so relative means against the term magnitude
          const double denom = std::max({std::abs(e.total), std::abs(e.total_q), e.magnitude});
          e3 = std::max({e3, std::abs(simplified - e.total) / denom, std::abs(simplified - e.total_q) / denom});
        }
      }
    }
  }
  return {gap <= 1e-9 && e3 <= 5e-3,
          "max |S-route - Q-route| " + fmt(gap) + ", max relative k=2 simplified-route gap " + fmt(e3)};
}

Result criterion6() {
  const Discretization d = default_disc(2);
  const PolyField u = PolyField::abs2(2);
  const double e2 = energy(u, d, 1).total;
  const double interior = interior_term(u, d, 1);
  const double ref_e2 = 2.0 * pi * pi / 3.0, ref_int = -2.0 * pi * pi / 3.0;
  const double rel_e2 = std::abs(e2 - ref_e2) / ref_e2;
  const double rel_int = std::abs(interior - ref_int) / std::abs(ref_int);
  const bool ok_e2 = rel_e2 <= 5e-3, ok_int = rel_int <= 5e-3;
  return {ok_e2 && ok_int, "E_2(|z|^2) = " + fmt(e2) + " vs " + fmt(ref_e2) + (ok_e2 ? " ok" : " MISS") +
                               "; interior = " + fmt(interior) + " vs " + fmt(ref_int) + (ok_int ? " ok" : " MISS") +
                               " (rel " + fmt(rel_int) + ")"};
}

Result criterion7() {
  Stopwatch sw;
  Outcome o;
  int experiments = 0;
  for (int n : {2, 3}) {
    const Discretization d = default_disc(n);
    std::vector<PerturbationFamily> fams;
    for (const auto& f : default_families())
      fams.push_back(PerturbationFamily::make(f.base.resolve(n, 1.0), f.w.resolve(n, 1.0), 1.0));
    std::vector<int> ks;
    for (int k : {1, 2, 3})
      if (k <= n) ks.push_back(k);
    const std::size_t before = o.checks.size();
    variation_suite(o, d, fams, ks, 1e-3, 1.0);
    experiments += static_cast<int>(o.checks.size() - before);
  }
  const double t = sw.seconds();
  const std::string f = first_failure(o);
  return {f.empty() && t < 120.0, std::to_string(experiments) + " derivative checks (k<=3, n in {2,3}), " + fmt(t) +
                                      " s" + (f.empty() ? "" : "; " + f)};
}

Result criterion8() {
  Outcome o;
  for (int n : {2, 3}) {
    RunConfig c;
    c.n = n;
    const Discretization d = calibrated(c, n);
    std::vector<int> ks;
    for (int k : {1, 2, 3})
      if (k <= n) ks.push_back(k);
    dirichlet_suite(o, d, c, ks);
  }
  double cn = -1.0;
  for (const auto& ch : o.checks)
    if (ch.check == "minimizer_coefficient_norm") cn = std::max(cn, ch.value);
  const std::string f = first_failure(o);
  return {f.empty(), std::to_string(o.checks.size()) + " checks, minimizer |c| " + fmt(cn) +
                         (f.empty() ? "" : "; " + f)};
}

std::string report_without_header(const fs::path& p) {
  std::ifstream is(p);
  json j = json::parse(is);
  j.erase("header");
  return j.dump();
}

std::string file_bytes(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

Result criterion9(const fs::path& base) {
  const std::vector<std::string> commands{"identities", "geometry", "energy", "variation", "dirichlet"};
  const fs::path dir = base / "determinism";
  fs::create_directories(dir);
  const fs::path cfg = dir / "config.json";
  std::ofstream(cfg) << json{{"seed", 42}, {"out", (dir / "out").string()}}.dump(2) << '\n';
  std::string mismatched;
  for (const auto& cmd : commands) {
    std::string runs[2], csv[2];
    for (int r = 0; r < 2; ++r) {
      const std::string line =
          std::string("\"") + KHESS_CLI_PATH + "\" " + cmd + " --config \"" + cfg.string() + "\" > /dev/null 2>&1";
      const int status = std::system(line.c_str());
      if (status == -1) return {false, "could not launch the CLI"};
      runs[r] = report_without_header(dir / "out" / (cmd + "_report.json"));
      csv[r] = file_bytes(dir / "out" / (cmd + "_summary.csv"));
    }
    if (runs[0] != runs[1] || csv[0] != csv[1]) mismatched += " " + cmd;
  }
  return {mismatched.empty(), mismatched.empty() ? "5 commands x 2 runs, reports identical outside the header"
                                                 : "reports differ for" + mismatched};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path base = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_runs");
  fs::create_directories(base);
  bool all = true;
  auto run = [&](int id, auto&& f) {
    Result r{false, ""};
    try {
      r = f();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    all = all && r.pass;
    std::cout << (r.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << r.detail << std::endl;
  };
  run(1, criterion1);
  run(2, criterion2);
  run(3, criterion3);
  run(4, criterion4);
  run(5, criterion5);
  run(6, criterion6);
  run(7, criterion7);
  run(8, criterion8);
  run(9, [&] { return criterion9(base); });
  return all ? 0 : 1;
}
