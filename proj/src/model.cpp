#include "emsched/model.hpp"

#include <cmath>
#include <sstream>

namespace emsched {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::iteration_limit: return "iteration_limit";
  }
  return "?";
}

int Model::add_var(std::string name, double lb, double ub, bool binary) {
  vars_.push_back({std::move(name), lb, ub, binary});
  return static_cast<int>(vars_.size()) - 1;
}

void Model::fix_var(int id, double value) {
  vars_[static_cast<size_t>(id)].lb = value;
  vars_[static_cast<size_t>(id)].ub = value;
}

std::vector<int> Model::binary_ids() const {
  std::vector<int> ids;
  for (size_t i = 0; i < vars_.size(); ++i)
    if (vars_[i].binary && vars_[i].lb != vars_[i].ub) ids.push_back(static_cast<int>(i));
  return ids;
}

double Model::feasibility_violation(std::span<const double> a) const {
  double worst = 0.0;
  for (size_t i = 0; i < vars_.size(); ++i) {
    worst = std::max(worst, vars_[i].lb - a[i]);
    worst = std::max(worst, a[i] - vars_[i].ub);
  }
  for (const auto& c : linear_) {
    double v = c.expr.value(a);
    if (std::isfinite(c.lo)) worst = std::max(worst, c.lo - v);
    if (std::isfinite(c.hi)) worst = std::max(worst, v - c.hi);
  }
  for (const auto& c : cones_) {
    double n2 = 0.0;
    for (const auto& e : c.lhs_norm) {
      double v = e.value(a);
      n2 += v * v;
    }
    worst = std::max(worst, std::sqrt(n2) - c.rhs.value(a));
  }
  return worst;
}

double Model::objective_value(std::span<const double> a) const {
  double v = obj_linear_.value(a);
  for (const auto& q : quads_) {
    double e = q.expr.value(a);
    v += q.weight * e * e;
  }
  return v;
}

namespace {
void print_expr(std::ostream& os, const AffineExpr& e, const std::vector<Variable>& vars) {
  bool first = true;
  for (const auto& [id, c] : e.terms) {
    if (!first) os << (c >= 0 ? " + " : " - ");
    else if (c < 0) os << "-";
    first = false;
    double ac = std::abs(c);
    if (ac != 1.0) os << ac << "*";
    os << vars[static_cast<size_t>(id)].name;
  }
  if (e.constant != 0.0 || first) {
    if (!first) os << (e.constant >= 0 ? " + " : " - ");
    os << std::abs(e.constant);
    if (first && e.constant < 0) os << " (neg)";
  }
}
}  // namespace

std::string Model::dump() const {
  std::ostringstream os;
  os << (sense_ == Sense::minimize ? "minimize" : "maximize") << "\n  ";
  print_expr(os, obj_linear_, vars_);
  for (const auto& q : quads_) {
    os << " + " << q.weight << "*(";
    print_expr(os, q.expr, vars_);
    os << ")^2";
  }
  os << "\nvariables (" << vars_.size() << ")\n";
  for (const auto& v : vars_) {
    os << "  " << v.name << " in [" << v.lb << ", " << v.ub << "]";
    if (v.binary) os << " binary";
    os << "\n";
  }
  os << "linear (" << linear_.size() << ")\n";
  for (const auto& c : linear_) {
    os << "  " << c.lo << " <= ";
    print_expr(os, c.expr, vars_);
    os << " <= " << c.hi;
    if (!c.family.empty()) os << "   [" << c.family << "]";
    os << "\n";
  }
  os << "cones (" << cones_.size() << ")\n";
  for (const auto& c : cones_) {
    os << "  ||(";
    for (size_t k = 0; k < c.lhs_norm.size(); ++k) {
      if (k) os << ", ";
      print_expr(os, c.lhs_norm[k], vars_);
    }
    os << ")|| <= ";
    print_expr(os, c.rhs, vars_);
    if (!c.family.empty()) os << "   [" << c.family << "]";
    os << "\n";
  }
  return os.str();
}

}  // namespace emsched
