#pragma once

#include <Eigen/Dense>

#include "emsched/model.hpp"

namespace emsched {

enum class DoubleMode { exact, bonferroni };

/// Cantelli margin sqrt((1-eps)/eps), cached per eps.
double single_margin(double eps);

/// Rows of Sigma^{1/2} * unc_coeff(x). cov is indexed by component id;
/// duplicate components in the body are merged first. All-zero rows are
/// dropped, so a zero covariance yields an empty vector.
std::vector<AffineExpr> scaled_rows(const UncertainAffine& body,
                                    const Eigen::MatrixXd& cov);

/// Emit the exact single-sided reformulation into the model. With zero
/// covariance this degenerates to the plain linear inequality.
void reform_single(Model& m, const DrccSpec& spec, const Eigen::MatrixXd& cov);

/// Emit a double-sided reformulation. `bonferroni` splits the risk budget
/// eps/2 per side; `exact` emits the tight conic system (never more
/// conservative than bonferroni).
void reform_double(Model& m, const DrccSpec& spec, const Eigen::MatrixXd& cov,
                   DoubleMode mode);

struct UncertainQuadTerm {
  double weight = 0.0;
  UncertainAffine expr;
};

/// Objective with affine and quadratic dependence on zero-mean uncertainty.
struct UncertainObjective {
  AffineExpr linear;                     // deterministic part
  std::vector<UncertainTerm> linear_unc;  // vanishes under expectation
  std::vector<UncertainQuadTerm> quads;
};

struct ClosedObjective {
  AffineExpr linear;
  std::vector<QuadObjTerm> quads;
  /// Decision-independent variance contribution, recorded separately so
  /// objectives with and without it can be compared.
  double variance_constant = 0.0;
};

/// Worst-case (= plain, for mean-covariance sets) expectation closure.
/// Quadratic terms must have decision-independent uncertainty coefficients.
ClosedObjective close_expectation(const UncertainObjective& obj,
                                  const Eigen::MatrixXd& cov);

}  // namespace emsched
