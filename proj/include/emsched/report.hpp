#pragma once

#include <string>
#include <vector>

#include "emsched/coordinator.hpp"
#include "emsched/validation.hpp"

namespace emsched {

/// One row of metrics.csv; a sweep emits one per grid point plus one for the
/// deterministic baseline (labelled nu = 0).
struct MetricsRow {
  double nu = 0.0;     // EV/CS confidence level
  double nu_re = 0.0;  // retailer confidence level (capped at 0.90)
  std::string mode = "exact";
  bool feasible = true;
  bool converged = false;
  double ev_objective = 0.0;
  double cs_objective = 0.0;
  double re_objective = 0.0;
  int violating_evs = -1;  // -1 when replay metrics were not computed
  int failed_evs = -1;
  double failed_avg = 0.0;
};

struct ConfidenceRow {
  double nu_th = 0.0;
  std::string layer;
  double nu_ac = 0.0;
  double wilson_lo = 0.0, wilson_hi = 0.0;
  int violating_replays = 0;
  int samples = 0;
};

struct FailedTripsRow {
  std::string label;  // "0.50".."0.95" or "deterministic"
  double nu = 0.0;
  int unique_failed_evs = 0;
  double per_replay_avg = 0.0;
};

// All writers create or truncate the file and throw std::runtime_error on
// IO failure. Formats are documented in the README.
void write_schedule_json(const Scenario& s, const EcosystemSolution& sol,
                         const std::string& path);
void write_trace_csv(const std::vector<IterationRecord>& trace,
                     const std::string& path);
void write_metrics_csv(const std::vector<MetricsRow>& rows,
                       const std::string& path);
void write_confidence_csv(const std::vector<ConfidenceRow>& rows,
                          const std::string& path);
void write_failed_trips_csv(const std::vector<FailedTripsRow>& rows,
                            const std::string& path);
void write_ablation_csv(const AblationResult& r, const std::string& path);
void write_validation_json(const ValidationReport& rep,
                           const std::string& path);

/// Rows for confidence.csv out of one validation report.
std::vector<ConfidenceRow> confidence_rows(double nu_th,
                                           const ValidationReport& rep);

}  // namespace emsched
