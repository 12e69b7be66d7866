#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "emsched/coordinator.hpp"
#include "emsched/scenario.hpp"

namespace emsched {

enum class DrawKind { normal, uniform, two_point };

DrawKind draw_kind_from_string(const std::string& s);
const char* to_string(DrawKind k);

/// One sampled day. PV columns follow the station order (the virtual
/// station's column stays at zero), wholesale is per hour.
struct Realization {
  Eigen::VectorXd soc0;       // per EV
  Eigen::MatrixXd pv;         // T x S, kW
  Eigen::VectorXd wholesale;  // T, $/kWh
};

/// Deterministic for a fixed seed. `correlated` draws PV jointly across
/// (t-1, t) from the lagged covariance (normal draws only; the other kinds
/// fall back to independent hours). `eps` places the two_point atoms at the
/// single-sided worst case for that risk level; 0.5 gives symmetric +-sigma.
std::vector<Realization> sample_realizations(const Scenario& s, int n,
                                             DrawKind kind, unsigned seed,
                                             bool correlated,
                                             double eps = 0.5);

/// All uncertain parameters at their forecast means (omega = 0).
Realization nominal_realization(const Scenario& s);

/// Elementwise mean over a batch, for moment-matching checks.
Realization mean_realization(const std::vector<Realization>& rs);

/// Outcome of replaying one realization against a fixed solution.
struct ReplayFlags {
  bool ev = false, cs = false, re = false;  // any violation in the layer
  std::vector<int> violating_evs;           // EVs violating any of their CCs
  std::vector<int> failed_evs;  // mandatory-trip lower-SOC failures
  std::map<std::string, int> violated;  // per CC family, violated instances
};

ReplayFlags replay(const Scenario& s, const EcosystemSolution& sol,
                   const Realization& r);

/// Serial reference and the OpenMP kernel; both return flags in replay
/// order, so every aggregate below is independent of the thread count.
std::vector<ReplayFlags> replay_all_serial(const Scenario& s,
                                           const EcosystemSolution& sol,
                                           const std::vector<Realization>& rs);
std::vector<ReplayFlags> replay_all(const Scenario& s,
                                    const EcosystemSolution& sol,
                                    const std::vector<Realization>& rs,
                                    int threads = 0);

struct WilsonInterval {
  double lo = 0.0, hi = 1.0;
};

/// 95% Wilson score interval for a binomial proportion.
WilsonInterval wilson95(int successes, int n);

struct LayerConfidence {
  double nu_ac = 1.0;
  WilsonInterval wilson;
  int violating_replays = 0;
  int n = 0;
};

struct ValidationReport {
  LayerConfidence ev, cs, re;
  int unique_violating_evs = 0;
  int unique_failed_evs = 0;
  double avg_failed_per_replay = 0.0;
  std::map<std::string, int> family_tallies;
};

ValidationReport summarize(const Scenario& s,
                           const std::vector<ReplayFlags>& flags);

ValidationReport actual_confidence(const Scenario& s,
                                   const EcosystemSolution& sol, int n,
                                   DrawKind kind, unsigned seed,
                                   int threads = 0);

struct TripFailures {
  int unique_evs = 0;
  double per_replay_avg = 0.0;
  std::vector<int> ev_ids;
};

TripFailures trip_failure_count(const Scenario& s,
                                const EcosystemSolution& sol,
                                const std::vector<Realization>& rs,
                                int threads = 0);

/// Zero-variance copy: flat histories at the column means and exact initial
/// SOCs, so every robustness margin collapses and the schedule is the
/// deterministic baseline.
Scenario deterministic_copy(const Scenario& s);

struct AblationResult {
  double rmse_with = 0.0, rmse_without = 0.0;
  int failed_with = 0, failed_without = 0;
};

/// Full pipeline twice (lagged PV covariance honored vs forced to zero),
/// replayed against correlated draws. RMSE is the root mean square of the
/// scheduled-minus-realized PV shortfall, normalized by PV capacity.
AblationResult pv_correlation_ablation(const Scenario& s,
                                       const CoordinatorOptions& copt, int n,
                                       unsigned seed, int threads = 0);

}  // namespace emsched
