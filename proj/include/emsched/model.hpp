#pragma once

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "emsched/expr.hpp"

namespace emsched {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { minimize, maximize };

enum class SolveStatus { optimal, infeasible, unbounded, iteration_limit };

struct Variable {
  std::string name;
  double lb = -kInf;
  double ub = kInf;
  bool binary = false;
};

/// lo <= expr <= hi (either bound may be infinite; lo == hi is an equality)
struct LinearConstraint {
  AffineExpr expr;
  double lo = -kInf;
  double hi = kInf;
  std::string family;
};

/// weight * (expr)^2 added to the objective; weight must be >= 0 so the
/// quadratic part stays convex.
struct QuadObjTerm {
  double weight = 0.0;
  AffineExpr expr;
};

struct SolveResult {
  SolveStatus status = SolveStatus::iteration_limit;
  double objective = 0.0;
  std::vector<double> assignment;
  double gap = kInf;
  /// On infeasible results, the constraint family flagged by the certificate.
  std::string blame;
  /// Branch-and-bound statistics (0 for continuous solves).
  int nodes = 0;
  int relaxation_failures = 0;
};

const char* to_string(SolveStatus s);

/// A mixed-integer second-order-cone model. Immutable once handed to the
/// solver; builders populate it and then call solve.
class Model {
 public:
  int add_var(std::string name, double lb, double ub, bool binary = false);
  void fix_var(int id, double value);

  void add_linear(LinearConstraint c) { linear_.push_back(std::move(c)); }
  void add_range(AffineExpr e, double lo, double hi, std::string family = {}) {
    linear_.push_back({std::move(e), lo, hi, std::move(family)});
  }
  void add_cone(ConeConstraint c) { cones_.push_back(std::move(c)); }

  void set_sense(Sense s) { sense_ = s; }
  Sense sense() const { return sense_; }
  void set_objective(AffineExpr e) { obj_linear_ = std::move(e); }
  void add_objective(const AffineExpr& e) { obj_linear_ += e; }
  void add_quad_objective(double weight, AffineExpr e) {
    if (weight != 0.0) quads_.push_back({weight, std::move(e)});
  }
  void add_objective_constant(double c) { obj_linear_.constant += c; }

  /// Partial assignment used to seed branch-and-bound. Entries violating the
  /// variable's bounds are ignored with a warning.
  void set_hint(std::map<int, double> hint) { hint_ = std::move(hint); }
  const std::map<int, double>& hint() const { return hint_; }

  size_t num_vars() const { return vars_.size(); }
  const std::vector<Variable>& vars() const { return vars_; }
  const std::vector<LinearConstraint>& linear() const { return linear_; }
  const std::vector<ConeConstraint>& cones() const { return cones_; }
  const std::vector<QuadObjTerm>& quads() const { return quads_; }
  const AffineExpr& objective_linear() const { return obj_linear_; }

  std::vector<int> binary_ids() const;

  /// Max violation of any constraint or bound at the assignment.
  double feasibility_violation(std::span<const double> assignment) const;
  double objective_value(std::span<const double> assignment) const;

  /// Human-readable listing of variables and constraints for debugging.
  std::string dump() const;

  Variable& var(int id) { return vars_[static_cast<size_t>(id)]; }
  const Variable& var(int id) const { return vars_[static_cast<size_t>(id)]; }

 private:
  std::vector<Variable> vars_;
  std::vector<LinearConstraint> linear_;
  std::vector<ConeConstraint> cones_;
  std::vector<QuadObjTerm> quads_;
  AffineExpr obj_linear_;
  Sense sense_ = Sense::minimize;
  std::map<int, double> hint_;
};

}  // namespace emsched
