#include "emsched/reformulation.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include "emsched/ambiguity.hpp"

namespace emsched {

double single_margin(double eps) {
  if (eps <= 0.0 || eps >= 1.0) throw std::invalid_argument("eps out of (0,1)");
  static std::mutex mu;
  static std::map<double, double> cache;
  std::lock_guard lk(mu);
  auto it = cache.find(eps);
  if (it != cache.end()) return it->second;
  double v = std::sqrt((1.0 - eps) / eps);
  cache.emplace(eps, v);
  return v;
}

std::vector<AffineExpr> scaled_rows(const UncertainAffine& body,
                                    const Eigen::MatrixXd& cov) {
  // merge duplicate components
  std::map<int, AffineExpr> merged;
  for (const auto& u : body.unc) {
    auto [it, fresh] = merged.try_emplace(u.component, u.coeff);
    if (!fresh) it->second += u.coeff;
  }
  std::vector<int> comps;
  for (const auto& [c, _] : merged) comps.push_back(c);
  const int k = static_cast<int>(comps.size());
  if (k == 0) return {};

  Eigen::MatrixXd sub(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) sub(i, j) = cov(comps[i], comps[j]);
  Eigen::MatrixXd S = sqrt_psd(sub);

  std::vector<AffineExpr> rows;
  for (int i = 0; i < k; ++i) {
    AffineExpr row;
    for (int j = 0; j < k; ++j) {
      if (S(i, j) == 0.0) continue;
      AffineExpr c = merged[comps[j]];
      c *= S(i, j);
      row += c;
    }
    if (!row.terms.empty() || row.constant != 0.0) rows.push_back(std::move(row));
  }
  return rows;
}

void reform_single(Model& m, const DrccSpec& spec, const Eigen::MatrixXd& cov) {
  if (spec.kind == DrccKind::double_sided)
    throw std::invalid_argument("reform_single: double-sided spec");
  std::vector<AffineExpr> rows = scaled_rows(spec.body, cov);
  const bool le = spec.kind == DrccKind::single_le;
  if (rows.empty()) {
    if (le)
      m.add_range(spec.body.det - spec.hi, -kInf, 0.0, spec.family);
    else
      m.add_range(spec.body.det - spec.lo, 0.0, kInf, spec.family);
    return;
  }
  double margin = single_margin(spec.eps);
  for (auto& r : rows) r *= margin;
  AffineExpr rhs = le ? spec.hi - spec.body.det : spec.body.det - spec.lo;
  m.add_cone({std::move(rows), std::move(rhs), spec.family});
}

void reform_double(Model& m, const DrccSpec& spec, const Eigen::MatrixXd& cov,
                   DoubleMode mode) {
  if (spec.kind != DrccKind::double_sided)
    throw std::invalid_argument("reform_double: spec is single-sided");
  std::vector<AffineExpr> rows = scaled_rows(spec.body, cov);
  if (rows.empty()) {
    m.add_range(spec.body.det - spec.lo, 0.0, kInf, spec.family);
    m.add_range(spec.body.det - spec.hi, -kInf, 0.0, spec.family);
    return;
  }
  if (mode == DoubleMode::bonferroni) {
    double margin = single_margin(spec.eps / 2.0);
    std::vector<AffineExpr> up = rows;
    for (auto& r : up) r *= margin;
    m.add_cone({std::move(up), spec.hi - spec.body.det, spec.family});
    for (auto& r : rows) r *= margin;
    m.add_cone({std::move(rows), spec.body.det - spec.lo, spec.family});
    return;
  }
  // exact mode: with c the band center, h the half width and d = det - c,
  // feasibility of
  //   |d - z| <= w,  ||(z, Sigma^{1/2} coeff)|| <= sqrt(eps) (h - w)
  // over auxiliaries (z, w) is equivalent to the worst-case band probability
  // being at least 1 - eps.
  AffineExpr c = spec.lo + spec.hi;
  c *= 0.5;
  AffineExpr h = spec.hi - spec.lo;
  h *= 0.5;
  int z = m.add_var(spec.family + ":z", -kInf, kInf);
  int w = m.add_var(spec.family + ":w", 0.0, kInf);
  AffineExpr d = spec.body.det - c;
  AffineExpr dz = d;
  dz.add_term(z, -1.0);
  AffineExpr dzw = dz;
  dzw.add_term(w, -1.0);
  m.add_range(dzw, -kInf, 0.0, spec.family);  // d - z <= w
  dz *= -1.0;
  dz.add_term(w, -1.0);
  m.add_range(dz, -kInf, 0.0, spec.family);  // z - d <= w
  double se = std::sqrt(spec.eps);
  AffineExpr rhs = h;
  rhs.add_term(w, -1.0);
  rhs *= se;
  std::vector<AffineExpr> lhs;
  AffineExpr ze;
  ze.add_term(z, 1.0);
  lhs.push_back(std::move(ze));
  for (auto& r : rows) lhs.push_back(std::move(r));
  m.add_cone({std::move(lhs), std::move(rhs), spec.family});
}

ClosedObjective close_expectation(const UncertainObjective& obj,
                                  const Eigen::MatrixXd& cov) {
  ClosedObjective out;
  out.linear = obj.linear;  // E[linear uncertainty] = 0 by the zero-mean model
  for (const auto& q : obj.quads) {
    // E[w (det + c'omega)^2] = w det^2 + w c' Sigma c; decision-dependent
    // uncertainty coefficients would make the closure cubic, reject them.
    Eigen::VectorXd coeff = Eigen::VectorXd::Zero(cov.rows());
    for (const auto& u : q.expr.unc) {
      if (!u.coeff.is_constant())
        throw std::invalid_argument(
            "close_expectation: decision-dependent quadratic uncertainty");
      coeff[u.component] += u.coeff.constant;
    }
    out.variance_constant += q.weight * coeff.dot(cov * coeff);
    out.quads.push_back({q.weight, q.expr.det});
  }
  return out;
}

}  // namespace emsched
