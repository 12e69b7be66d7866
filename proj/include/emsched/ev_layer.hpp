#pragma once

#include <Eigen/Dense>

#include "emsched/model.hpp"
#include "emsched/reformulation.hpp"
#include "emsched/scenario.hpp"

namespace emsched {

/// Prices seen by EVs, all $/kWh. Per-(t, station) tables plus the
/// nearest-station prices per (t, ev) used by the preference constraints.
struct EvPrices {
  Eigen::MatrixXd g2v;       // T x S, rho+
  Eigen::MatrixXd v2g;       // T x S, rho-
  Eigen::MatrixXd agg;       // T x S, rho^AG (parameter for the CS layer)
  Eigen::MatrixXd g2v_near;  // T x E, rho^+ at the nearest CS
  Eigen::MatrixXd v2g_near;  // T x E
};

struct EvSchedule {
  std::vector<Eigen::MatrixXd> xplus;   // per EV, T x S, kW
  std::vector<Eigen::MatrixXd> xminus;  // per EV, T x S, kW
  std::vector<Eigen::MatrixXd> gamma;   // per EV, T x S, 0/1
  std::vector<Eigen::MatrixXd> pi;      // per EV, T x S, 0/1
  std::vector<Eigen::MatrixXd> cum;     // per EV, T x S, A_{t,e,i}
  Eigen::MatrixXd soc_mean;             // E x T, end-of-hour mean SOC
  std::vector<double> per_ev_objective;
  double objective = 0.0;
};

enum class EvStrategy { joint, sequential };

/// Variable ids for one EV inside a build, used to read the solution back.
struct EvVarMap {
  // indexed [t][i]
  std::vector<std::vector<int>> xp, xm, gam, pi, cum;
};

struct EvBuildOptions {
  double eps_ev = 0.05;
  DoubleMode mode = DoubleMode::exact;
  /// Relative branch-and-bound gap. The coordinator loosens this to keep a
  /// warm-started schedule from flipping between near-tied optima while the
  /// price loop converges.
  double mip_gap = 1e-6;
  /// A-hat per EV (T x S cumulative at the nearest CS), previous iterate;
  /// empty means zero.
  std::vector<Eigen::MatrixXd> prev_cum;
  /// Remaining charger slots per (t, station); empty means full capacity.
  Eigen::MatrixXi residual_chargers;
};

/// Build the scheduling problem for the given subset of EVs (joint coupling
/// constraints included when the subset has more than one EV).
Model build_ev_problem(const Scenario& s, const EvPrices& prices,
                       const EvBuildOptions& opt, const std::vector<int>& evs,
                       std::vector<EvVarMap>* maps);

/// Mean-SOC expression builder shared with validation (replay recomputes the
/// same trajectory from realized initial SOC).
double ev_travel_soc(const Scenario& s, int ev, int t,
                     const Eigen::MatrixXd& gamma, const Eigen::MatrixXd& pi);

EvSchedule solve_ev_layer(const Scenario& s, const EvPrices& prices,
                          const EvBuildOptions& opt, EvStrategy strategy,
                          const EvSchedule* warm = nullptr);

}  // namespace emsched
