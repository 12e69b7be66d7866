#pragma once

#include <Eigen/Dense>
#include <vector>

#include "emsched/model.hpp"
#include "emsched/reformulation.hpp"
#include "emsched/scenario.hpp"

namespace emsched {

/// Linearized distribution network state. Node and line matrices are T x N
/// and T x L, indexed by position in Network::nodes / Network::lines.
struct PowerFlowState {
  Eigen::MatrixXd dv;      // voltage magnitude deviation
  Eigen::MatrixXd dtheta;  // angle deviation, rad
  Eigen::MatrixXd p_flow;  // active flow from -> to, kW
  Eigen::MatrixXd q_flow;  // reactive flow from -> to, kVar
  Eigen::MatrixXd dv_hat;  // lossless baseline the flow model is linearized at
};

struct RetailerResult {
  Eigen::MatrixXd price;  // T x R, $/kWh offered to stations
  Eigen::MatrixXd p_wm;   // T x R, wholesale purchase, kW
  Eigen::MatrixXd q_wm;   // T x R, kVar
  PowerFlowState flow;
  double objective = 0.0;
};

struct RetailerVarMap {
  // indexed [t][r] / [t][node] / [t][line]
  std::vector<std::vector<int>> price, p_wm, q_wm;
  std::vector<std::vector<int>> dv, dtheta;
  std::vector<std::vector<int>> p_flow, q_flow;
};

/// Reactive demand of stations as a fixed power factor on the active
/// purchase (default 0.95 lagging).
double reactive_factor(double power_factor = 0.95);

/// Voltage deviations from the lossless decoupled flow: susceptance-only
/// Laplacian solved against nodal reactive injections (T x N, positive =
/// injection). Slack deviation is 0; nodal residual is at solver precision.
Eigen::MatrixXd lossless_baseline(const Network& net,
                                  const Eigen::MatrixXd& injections);

/// cs_yre holds the station purchases per retailer (T x S each), fixed here.
/// dv_hat is the lossless baseline the (1 + dv_hat) flow factor uses.
Model build_retailer_problem(const Scenario& s,
                             const std::vector<Eigen::MatrixXd>& cs_yre,
                             double eps_re, const Eigen::MatrixXd& dv_hat,
                             RetailerVarMap* map,
                             DoubleMode mode = DoubleMode::exact);

RetailerResult solve_retailer_layer(const Scenario& s,
                                    const std::vector<Eigen::MatrixXd>& cs_yre,
                                    double eps_re,
                                    DoubleMode mode = DoubleMode::exact);

}  // namespace emsched
