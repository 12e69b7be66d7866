#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "emsched/cs_layer.hpp"
#include "emsched/ev_layer.hpp"
#include "emsched/retailer_layer.hpp"

namespace emsched {

/// One row of the convergence trace; written out verbatim as trace.csv.
struct IterationRecord {
  int iteration = 0;  // outer iteration, 1-based
  std::string layer;  // "ev", "cs" or "retailer"
  double objective = 0.0;
  double delta = 0.0;  // |objective - previous objective of the same layer|
  double seconds = 0.0;
};

struct CoordinatorOptions {
  double eps_ev = 0.10;
  double eps_cs = 0.10;
  double eps_re = 0.10;
  DoubleMode mode = DoubleMode::exact;
  EvStrategy strategy = EvStrategy::sequential;
  double damping = 0.5;
  bool ignore_pv_correlation = false;
};

struct EcosystemSolution {
  EvSchedule ev;
  CsDispatch cs;
  RetailerResult retailer;
  EvPrices ev_prices;            // prices the schedules were solved against
  Eigen::MatrixXd retail_prices;  // T x R, damped prices offered to the CSs
  std::vector<IterationRecord> trace;
  bool converged = false;
  int outer_iterations = 0;
};

/// Damped price step: damping = 1 jumps straight to the best response,
/// damping = 0 never moves.
Eigen::MatrixXd price_update(const Eigen::MatrixXd& previous,
                             const Eigen::MatrixXd& best_response,
                             double damping);

/// Full day-ahead negotiation. Throws InfeasibleError (with the loop
/// position appended to the layer name) if any layer is infeasible; returns
/// converged = false with the last iterate if the loop budgets run out.
EcosystemSolution run_day_ahead(const Scenario& s,
                                const CoordinatorOptions& opt);

}  // namespace emsched
