#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

namespace emsched {

struct Horizon {
  int steps = 24;
  double dt_hours = 1.0;
};

enum class TripKind { mandatory, optional1, optional2 };

const char* to_string(TripKind k);
TripKind trip_kind_from_string(const std::string& s);

/// Distances are keyed by hour (trip window membership) and, for the
/// per-station tables, indexed by station position in Scenario::stations
/// (the virtual station included, with its special distance rules).
struct Trip {
  TripKind kind = TripKind::mandatory;
  std::vector<int> window;
  std::map<int, std::vector<double>> origin_to_cs_km;
  std::map<int, std::vector<double>> cs_to_dest_km;
  std::map<int, double> direct_km;
  std::map<int, double> nearest_cs_km;
  std::map<int, double> nearest_roundtrip_km;
};

struct Degradation {
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0, f = 0.0;
};

struct Ev {
  int id = 0;
  double battery_capacity_kwh = 60.0;
  double eta_charge = 0.95;
  double eta_discharge = 0.95;
  double soc_min = 0.1;
  double soc_max = 0.95;
  double soc_target_end = 0.5;
  double soc0_mean = 0.5;
  /// Initial-SOC uncertainty scale; a standard deviation by convention
  /// (the 5% figure is reported without units), squared where a variance
  /// is required.
  double soc0_cov = 0.05;
  double kwh_per_km = 0.17;
  double pref_cost_gain_usd = 5.0;
  double pref_revenue_gain_usd = 2.0;
  double pref_extra_km = 10.0;
  Degradation degradation;
  std::vector<Trip> trips;
};

struct ChargingStation {
  int id = 0;
  int node = -1;
  double charger_kw = 50.0;
  int charger_count = 0;
  double charger_eta = 0.95;
  double cgu_kw = 0.0;
  double cgu_eta = 0.35;
  double pv_kw = 0.0;
  double pv_ramp_min = 0.0;
  double pv_ramp_max = 0.0;
  double ess_kw = 0.0;
  double ess_soc_min = 0.1;
  double ess_soc_max = 0.9;
  double station_kw_cap = 0.0;
  /// G2V markup over the retailer price offered by this station.
  double margin_lo = 0.10;
  double margin_hi = 0.30;
  /// V2G price band as a fraction of the retailer price (60-85% below it).
  double v2g_price_lo = 0.15;
  double v2g_price_hi = 0.40;
  /// Aggregator resale markup over the V2G price.
  double agg_markup = 0.10;
  bool is_virtual = false;
};

struct Retailer {
  int id = 0;
  int node = -1;
  double alpha_lo = 1.0;
  double alpha_hi = 1.0;
};

struct NetworkNode {
  int id = 0;
  double dv_lo = -0.05;
  double dv_hi = 0.05;
  bool is_slack = false;
};

struct NetworkLine {
  int from = 0;
  int to = 0;
  double g = 0.0;
  double b = 0.0;
  double p_lo = -1e6, p_hi = 1e6;
  double q_lo = -1e6, q_hi = 1e6;
};

struct Network {
  std::vector<NetworkNode> nodes;
  std::vector<NetworkLine> lines;
};

struct History {
  std::vector<Eigen::MatrixXd> pv_samples;  // one [day x hour] matrix per CS
  Eigen::MatrixXd price_samples;            // wholesale $/kWh
  std::vector<double> gas_price;            // $/m^3 per hour
  double heat_value = 9.7;                  // kWh/m^3
  double wholesale_markup = 4.5;
};

struct Risk {
  double eps_ev = 0.05;
  double eps_cs = 0.05;
  double eps_re = 0.05;
};

struct LoopLimits {
  int inner = 20;
  int outer = 15;
};

struct Scenario {
  Horizon horizon;
  std::vector<Ev> evs;
  std::vector<ChargingStation> stations;
  std::vector<Retailer> retailers;
  Network network;
  History history;
  Risk risk;
  double balance_slack = 0.0;
  LoopLimits max_iters;
  double convergence_tol = 0.001;

  int virtual_station() const;
};

/// Parse and validate; throws std::runtime_error naming the violated
/// invariant. Inline sample arrays or "csv:..." file references (relative to
/// the scenario file) are both accepted.
Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& s, const std::string& path);
void validate(const Scenario& s);

Scenario generate_synthetic(int evs, int stations, int retailers, unsigned seed);

/// Argmin over real stations of origin_to_cs_km at hour t (ties to the
/// lowest station id). Throws if t is outside the trip window.
int nearest_station(const Trip& trip, int t,
                    const std::vector<ChargingStation>& stations);

}  // namespace emsched
