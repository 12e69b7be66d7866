#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace emsched {

/// Affine expression over variable ids: constant + sum(coeff * var).
/// Terms are kept sorted by variable id with unique ids.
struct AffineExpr {
  double constant = 0.0;
  std::vector<std::pair<int, double>> terms;

  AffineExpr() = default;
  explicit AffineExpr(double c) : constant(c) {}

  static AffineExpr variable(int id, double coeff = 1.0) {
    AffineExpr e;
    if (coeff != 0.0) e.terms.emplace_back(id, coeff);
    return e;
  }

  void add_term(int id, double coeff);
  AffineExpr& operator+=(const AffineExpr& o);
  AffineExpr& operator-=(const AffineExpr& o);
  AffineExpr& operator*=(double k);
  AffineExpr& operator+=(double c) { constant += c; return *this; }
  AffineExpr& operator-=(double c) { constant -= c; return *this; }

  friend AffineExpr operator+(AffineExpr a, const AffineExpr& b) { a += b; return a; }
  friend AffineExpr operator-(AffineExpr a, const AffineExpr& b) { a -= b; return a; }
  friend AffineExpr operator*(AffineExpr a, double k) { a *= k; return a; }
  friend AffineExpr operator*(double k, AffineExpr a) { a *= k; return a; }
  friend AffineExpr operator-(AffineExpr a) { a *= -1.0; return a; }

  bool is_constant() const { return terms.empty(); }
  double value(std::span<const double> assignment) const;
};

/// One component of an uncertain parameter family, identified by an index
/// into the ambiguity registry of the problem being built.
struct UncertainTerm {
  int component;      // uncertainty component id
  AffineExpr coeff;   // decision-dependent coefficient multiplying the component
};

/// det(x) + sum_k coeff_k(x) * omega_k
struct UncertainAffine {
  AffineExpr det;
  std::vector<UncertainTerm> unc;
};

/// ||lhs_norm(x)||_2 <= rhs(x)
struct ConeConstraint {
  std::vector<AffineExpr> lhs_norm;
  AffineExpr rhs;
  std::string family;
};

enum class DrccKind { single_le, single_ge, double_sided };

/// A distributionally robust chance constraint prior to reformulation.
/// single_le:  inf P[ body(x, w) <= hi(x) ] >= 1 - eps
/// single_ge:  inf P[ body(x, w) >= lo(x) ] >= 1 - eps
/// double:     inf P[ lo(x) <= body(x, w) <= hi(x) ] >= 1 - eps
struct DrccSpec {
  DrccKind kind = DrccKind::single_le;
  UncertainAffine body;
  AffineExpr lo;
  AffineExpr hi;
  double eps = 0.1;
  std::string family;
};

}  // namespace emsched
