#pragma once

// Named library of polynomial test fields.
//
//   abs2, abs4          |z|^2, |z|^4
//   re:a1,..,am         Re z^a (missing exponents are zero), im:.. likewise
//   x:j, y:j            real coordinates, j one-based
//   const:c             constant c
//   bump:<name>         (R^2 - |z|^2) * <name>
//   random:<seed>       real polynomial of degree <= 4 with 8 seeded monomials
//   <a>*<b>             product of two names (left-associative, no parentheses)

#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "khess/polyfield.hpp"

namespace khess {

/// z^a for a multi-index a of length n.
inline PolyField holomorphic_monomial(int n, const std::vector<int>& a) {
  detail::require(static_cast<int>(a.size()) == n, "holomorphic_monomial: multi-index length mismatch");
  PolyField p = PolyField::constant(n, 1.0);
  for (int j = 0; j < n; ++j) p = p * PolyField::z(n, j).pow(a[j]);
  return p;
}

/// R^2 - |z|^2, which vanishes on the sphere of radius R.
inline PolyField ball_bump(int n, double R) {
  return PolyField::constant(n, R * R) - PolyField::abs2(n);
}

inline PolyField random_real_poly(int n, unsigned long long seed, int max_degree = 4, int monomials = 8) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> var(0, 2 * n - 1);
  std::uniform_int_distribution<int> deg(0, max_degree);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  PolyField p(n);
  for (int m = 0; m < monomials; ++m) {
    Exponent e(2 * n, 0);
    const int d = deg(rng);
    for (int s = 0; s < d; ++s) ++e[var(rng)];
    p.add_term(e, coef(rng));
  }
  return p;
}

namespace detail {

inline std::vector<int> parse_index_list(const std::string& s, int n, const std::string& name) {
  std::vector<int> a;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      require(used == item.size() && v >= 0, "stock field '" + name + "': bad exponent");
      a.push_back(v);
    } catch (const std::logic_error&) {
      throw ValidationError("stock field '" + name + "': bad exponent list");
    }
  }
  require(!a.empty() && static_cast<int>(a.size()) <= n,
          "stock field '" + name + "': exponent list must have 1..n entries");
  a.resize(n, 0);
  return a;
}

inline int parse_coord_index(const std::string& s, int n, const std::string& name) {
  try {
    std::size_t used = 0;
    const int j = std::stoi(s, &used);
    require(used == s.size() && j >= 1 && j <= n, "stock field '" + name + "': index must lie in 1..n");
    return j - 1;
  } catch (const std::logic_error&) {
    throw ValidationError("stock field '" + name + "': bad coordinate index");
  }
}

}  // namespace detail

inline PolyField stock_field(const std::string& name, int n, double R = 1.0) {
  if (const auto star = name.rfind('*'); star != std::string::npos)
    return stock_field(name.substr(0, star), n, R) * stock_field(name.substr(star + 1), n, R);
  if (name == "abs2") return PolyField::abs2(n);
  if (name == "abs4") return PolyField::abs2(n).pow(2);
  const auto colon = name.find(':');
  detail::require(colon != std::string::npos, "unknown stock field '" + name + "'");
  const std::string head = name.substr(0, colon);
  const std::string arg = name.substr(colon + 1);
  if (head == "bump") return ball_bump(n, R) * stock_field(arg, n, R);
  if (head == "re") return holomorphic_monomial(n, detail::parse_index_list(arg, n, name)).real_part();
  if (head == "im") return holomorphic_monomial(n, detail::parse_index_list(arg, n, name)).imag_part();
  if (head == "x") return PolyField::x(n, detail::parse_coord_index(arg, n, name));
  if (head == "y") return PolyField::y(n, detail::parse_coord_index(arg, n, name));
  if (head == "const") {
    try {
      return PolyField::constant(n, std::stod(arg));
    } catch (const std::logic_error&) {
      throw ValidationError("stock field '" + name + "': bad constant");
    }
  }
  if (head == "random") {
    try {
      return random_real_poly(n, std::stoull(arg));
    } catch (const std::logic_error&) {
      throw ValidationError("stock field '" + name + "': bad seed");
    }
  }
  throw ValidationError("unknown stock field '" + name + "'");
}

/// The ten fields every suite sweeps over.
inline std::vector<std::string> stock_library_names() {
  return {"abs2",    "abs4",     "re:2",         "im:1,1",   "re:3,1",
          "x:1",     "bump:x:1", "abs2*re:1,1",  "random:7", "random:11"};
}

/// Pluriharmonic members: real and imaginary parts of holomorphic monomials up to degree 4.
inline std::vector<PolyField> pluriharmonic_library(int n) {
  std::vector<PolyField> out;
  std::vector<int> a(n, 0);
  auto rec = [&](auto&& self, int pos, int left) -> void {
    if (pos == n) {
      const PolyField m = holomorphic_monomial(n, a);
      out.push_back(m.real_part());
      if (!m.imag_part().is_zero()) out.push_back(m.imag_part());
      return;
    }
    for (int e = 0; e <= left; ++e) {
      a[pos] = e;
      self(self, pos + 1, left - e);
    }
    a[pos] = 0;
  };
  rec(rec, 0, 4);
  return out;
}

}  // namespace khess
