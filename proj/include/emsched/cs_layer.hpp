#pragma once

#include <Eigen/Dense>

#include "emsched/ev_layer.hpp"
#include "emsched/model.hpp"
#include "emsched/reformulation.hpp"
#include "emsched/scenario.hpp"

namespace emsched {

/// Dispatch of every charging station. Matrices are T x S (virtual station
/// columns stay zero); y_re and beta carry one matrix per retailer.
struct CsDispatch {
  std::vector<Eigen::MatrixXd> y_re;   // kW bought from retailer r
  std::vector<Eigen::MatrixXd> beta;   // retailer selection, 0/1
  Eigen::MatrixXd y_gu;                // CGU output, kW
  Eigen::MatrixXd y_pv;                // scheduled PV use, kW
  Eigen::MatrixXd y_ch, y_dis;         // ESS charging/discharging, kW
  Eigen::MatrixXd psi;                 // ESS mode, 0/1
  Eigen::MatrixXd rho_minus;           // V2G price paid to EVs, $/kWh
  Eigen::MatrixXd agg_price;           // aggregator resale price, $/kWh
  std::vector<double> per_cs_objective;
  double objective = 0.0;
};

struct CsBuildOptions {
  double eps_cs = 0.05;
  DoubleMode mode = DoubleMode::exact;
  /// Drop the cross-hour PV covariance (the ramp constraint then treats
  /// consecutive hours as independent); used by the correlation ablation.
  bool ignore_pv_correlation = false;
};

struct CsVarMap {
  // indexed [t]; y_re/beta additionally [r]
  std::vector<std::vector<int>> y_re, beta;
  std::vector<int> y_gu, y_pv, y_ch, y_dis, psi, rho_minus;
};

/// G2V/V2G prices offered by the stations, derived from retailer prices.
/// `iteration` is 1-based and only documents the loop position; the formula
/// is identical in every iteration.
EvPrices derive_g2v_prices(const Eigen::MatrixXd& retail_prices,
                           const Scenario& s, int iteration);

/// Per-station markup over the cheapest retailer price, spread
/// deterministically over [margin_lo, margin_hi] by station id.
double cs_margin(const Scenario& s, int cs);

/// Single-station problem; the EV schedule enters as fixed parameters.
Model build_cs_problem(const Scenario& s, int cs, const EvSchedule& ev,
                       const EvPrices& ev_prices,
                       const Eigen::MatrixXd& retail_prices,
                       const CsBuildOptions& opt, CsVarMap* map);

CsDispatch solve_cs_layer(const Scenario& s, const EvSchedule& ev,
                          const EvPrices& ev_prices,
                          const Eigen::MatrixXd& retail_prices,
                          const CsBuildOptions& opt);

}  // namespace emsched
