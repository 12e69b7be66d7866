#pragma once

#include <stdexcept>
#include <string>

#include "emsched/model.hpp"
#include "emsched/socp.hpp"

namespace emsched {

/// Thrown by layer solvers on an infeasible model; carries the constraint
/// family flagged by the infeasibility certificate.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& layer, const std::string& blame)
      : std::runtime_error(layer + " infeasible" +
                           (blame.empty() ? "" : " (" + blame + ")")),
        layer_(layer),
        blame_(blame) {}
  const std::string& layer() const { return layer_; }
  const std::string& blame() const { return blame_; }

 private:
  std::string layer_;
  std::string blame_;
};

struct SolverOptions {
  double feastol = 1e-8;
  double mip_gap = 1e-6;
  int max_nodes = 100000;
  int ipm_max_iter = 200;
};

/// Translate the model into conic standard form. Fixed variables are
/// substituted out; quadratic objective terms become epigraph SOC rows.
socp::StandardForm to_standard_form(const Model& model,
                                    std::vector<int>* var_index = nullptr,
                                    double* obj_offset = nullptr,
                                    std::vector<std::string>* row_family = nullptr);

/// Continuous relaxation solve (binaries treated as [lb, ub] box).
SolveResult solve_continuous(const Model& model, const SolverOptions& opt = {});

/// Full solve; dispatches to best-first branch and bound when unfixed
/// binaries remain. The model hint, if any, seeds the incumbent.
SolveResult solve(const Model& model, const SolverOptions& opt = {});

}  // namespace emsched
