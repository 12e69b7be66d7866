#pragma once

#include <Eigen/Sparse>
#include <Eigen/Dense>
#include <vector>

namespace emsched::socp {

/// Conic program in standard form:
///   min c'x  s.t.  A x = b,  G x + s = h,  s in K,
/// K = R+^nonneg x SOC(q_1) x ... x SOC(q_k).
struct StandardForm {
  Eigen::SparseMatrix<double> A;  // p x n
  Eigen::SparseMatrix<double> G;  // m x n
  Eigen::VectorXd c, b, h;
  int nonneg = 0;
  std::vector<int> soc_dims;

  int n() const { return static_cast<int>(c.size()); }
  int p() const { return static_cast<int>(b.size()); }
  int m() const { return static_cast<int>(h.size()); }
};

enum class IpmStatus { optimal, primal_infeasible, dual_infeasible, iteration_limit };

struct IpmResult {
  IpmStatus status = IpmStatus::iteration_limit;
  Eigen::VectorXd x;  // primal point (or certificate for dual_infeasible)
  Eigen::VectorXd z;  // dual cone multipliers (certificate for primal_infeasible)
  Eigen::VectorXd y;
  double pobj = 0.0;
  double dobj = 0.0;
  double gap = 0.0;
  int iterations = 0;
};

struct IpmSettings {
  double feastol = 1e-8;
  double abstol = 1e-9;
  double reltol = 1e-9;
  int max_iter = 200;
};

/// Homogeneous self-dual primal-dual interior point method with
/// Nesterov-Todd scaling and Mehrotra predictor-corrector.
IpmResult solve(const StandardForm& sf, const IpmSettings& settings = {});

}  // namespace emsched::socp
