#include "emsched/expr.hpp"

#include <algorithm>
#include <cmath>

namespace emsched {

void AffineExpr::add_term(int id, double coeff) {
  if (coeff == 0.0) return;
  auto it = std::lower_bound(terms.begin(), terms.end(), id,
                             [](const auto& p, int v) { return p.first < v; });
  if (it != terms.end() && it->first == id) {
    it->second += coeff;
    if (it->second == 0.0) terms.erase(it);
  } else {
    terms.insert(it, {id, coeff});
  }
}

AffineExpr& AffineExpr::operator+=(const AffineExpr& o) {
  constant += o.constant;
  for (const auto& [id, c] : o.terms) add_term(id, c);
  return *this;
}

AffineExpr& AffineExpr::operator-=(const AffineExpr& o) {
  constant -= o.constant;
  for (const auto& [id, c] : o.terms) add_term(id, -c);
  return *this;
}

AffineExpr& AffineExpr::operator*=(double k) {
  if (k == 0.0) {
    constant = 0.0;
    terms.clear();
    return *this;
  }
  constant *= k;
  for (auto& [id, c] : terms) c *= k;
  return *this;
}

double AffineExpr::value(std::span<const double> assignment) const {
  double v = constant;
  for (const auto& [id, c] : terms) v += c * assignment[static_cast<size_t>(id)];
  return v;
}

}  // namespace emsched
