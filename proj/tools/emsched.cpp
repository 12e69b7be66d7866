// Day-ahead scheduling for an EV / charging-station / retailer ecosystem:
// generate scenarios, solve, sweep confidence levels, validate schedules by
// Monte Carlo replay, and emit plot-ready reports.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "emsched/coordinator.hpp"
#include "emsched/report.hpp"
#include "emsched/solver.hpp"
#include "emsched/validation.hpp"

namespace fs = std::filesystem;
using namespace emsched;

namespace {

struct Options {
  std::string scenario;
  std::string out = ".";
  double nu_ev = 0.95;
  double nu_cs = 0.95;
  double nu_re = 0.90;
  std::string double_mode = "exact";
  std::string ev_strategy = "sequential";
  std::string kind = "normal";
  double damping = 0.5;
  unsigned seed = 0;
  int samples = 1000;
  std::string grid = "0.5:0.95:0.05";
  int threads = 0;
};

CoordinatorOptions coordinator_options(const Options& o) {
  CoordinatorOptions c;
  c.eps_ev = 1.0 - o.nu_ev;
  c.eps_cs = 1.0 - o.nu_cs;
  c.eps_re = 1.0 - o.nu_re;
  c.mode = o.double_mode == "bonferroni" ? DoubleMode::bonferroni
                                         : DoubleMode::exact;
  c.strategy = o.ev_strategy == "joint" ? EvStrategy::joint
                                        : EvStrategy::sequential;
  c.damping = o.damping;
  return c;
}

std::vector<double> parse_grid(const std::string& g) {
  double lo = 0.0, hi = 0.0, step = 0.0;
  if (std::sscanf(g.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3 ||
      step <= 0.0 || hi < lo)
    throw CLI::ValidationError("--grid", "expected lo:hi:step with step > 0");
  std::vector<double> out;
  for (double v = lo; v <= hi + 1e-9; v += step) out.push_back(v);
  return out;
}

std::string path_in(const Options& o, const char* name) {
  fs::create_directories(o.out);
  return (fs::path(o.out) / name).string();
}

void add_common(CLI::App* cmd, Options& o, bool needs_scenario = true) {
  cmd->add_option("--scenario", o.scenario, "Scenario JSON file")
      ->required(needs_scenario);
  cmd->add_option("--out", o.out, "Output directory")->capture_default_str();
  cmd->add_option("--nu-ev", o.nu_ev, "EV-layer confidence level")
      ->check(CLI::Range(0.0, 1.0))->capture_default_str();
  cmd->add_option("--nu-cs", o.nu_cs, "CS-layer confidence level")
      ->check(CLI::Range(0.0, 1.0))->capture_default_str();
  cmd->add_option("--nu-re", o.nu_re, "Retailer confidence level")
      ->check(CLI::Range(0.0, 1.0))->capture_default_str();
  cmd->add_option("--double-mode", o.double_mode,
                  "Double-sided reformulation: exact|bonferroni")
      ->check(CLI::IsMember({"exact", "bonferroni"}))->capture_default_str();
  cmd->add_option("--ev-strategy", o.ev_strategy,
                  "EV layer decomposition: joint|sequential")
      ->check(CLI::IsMember({"joint", "sequential"}))->capture_default_str();
  cmd->add_option("--damping", o.damping, "Retailer price damping factor")
      ->check(CLI::Range(0.0, 1.0))->capture_default_str();
  cmd->add_option("--seed", o.seed, "Seed for all randomness")
      ->capture_default_str();
  cmd->add_option("--samples", o.samples, "Monte Carlo replay count")
      ->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--kind", o.kind, "Replay draw kind: normal|uniform|two_point")
      ->check(CLI::IsMember({"normal", "uniform", "two_point"}))
      ->capture_default_str();
  cmd->add_option("--threads", o.threads,
                  "Replay threads (0 = machine parallelism)")
      ->capture_default_str();
}

/// Solve one grid point; returns feasible=false row on InfeasibleError.
MetricsRow sweep_point(const Scenario& s, const Options& o, double nu,
                       EcosystemSolution* sol_out) {
  Options po = o;
  po.nu_ev = po.nu_cs = nu;
  po.nu_re = std::min(nu, 0.90);
  MetricsRow row;
  row.nu = nu;
  row.nu_re = po.nu_re;
  row.mode = o.double_mode;
  try {
    EcosystemSolution sol = run_day_ahead(s, coordinator_options(po));
    row.converged = sol.converged;
    row.ev_objective = sol.ev.objective;
    row.cs_objective = sol.cs.objective;
    row.re_objective = sol.retailer.objective;
    if (sol_out) *sol_out = std::move(sol);
  } catch (const InfeasibleError& e) {
    std::fprintf(stderr, "nu=%.2f: %s\n", nu, e.what());
    row.feasible = false;
  }
  return row;
}

int cmd_generate(const Options& o, int evs, int stations, int retailers) {
  Scenario s = generate_synthetic(evs, stations, retailers, o.seed);
  std::string path = o.scenario.empty()
                         ? path_in(o, "scenario.json")
                         : o.scenario;
  save_scenario(s, path);
  std::printf("wrote %s\n", path.c_str());
  return 0;
}

int cmd_solve(const Options& o) {
  Scenario s = load_scenario(o.scenario);
  EcosystemSolution sol = run_day_ahead(s, coordinator_options(o));
  write_schedule_json(s, sol, path_in(o, "schedule.json"));
  write_trace_csv(sol.trace, path_in(o, "trace.csv"));
  if (!sol.converged) {
    std::fprintf(stderr, "price loop did not converge within %d iterations\n",
                 sol.outer_iterations);
    return 3;
  }
  return 0;
}

int cmd_sweep(const Options& o) {
  Scenario s = load_scenario(o.scenario);
  std::vector<MetricsRow> rows;
  std::vector<FailedTripsRow> trips;
  auto rs = sample_realizations(s, o.samples,
                                draw_kind_from_string(o.kind), o.seed,
                                /*correlated=*/true);
  for (double nu : parse_grid(o.grid)) {
    EcosystemSolution sol;
    MetricsRow row = sweep_point(s, o, nu, &sol);
    if (row.feasible) {
      ValidationReport rep = summarize(s, replay_all(s, sol, rs, o.threads));
      row.violating_evs = rep.unique_violating_evs;
      row.failed_evs = rep.unique_failed_evs;
      row.failed_avg = rep.avg_failed_per_replay;
      char label[16];
      std::snprintf(label, sizeof label, "%.2f", nu);
      trips.push_back({label, nu, rep.unique_failed_evs,
                       rep.avg_failed_per_replay});
    }
    rows.push_back(row);
  }
  // deterministic baseline, replayed against the same draws
  {
    Scenario det = deterministic_copy(s);
    Options po = o;
    po.nu_ev = po.nu_cs = po.nu_re = 0.5;  // margins are zero anyway
    EcosystemSolution sol = run_day_ahead(det, coordinator_options(po));
    ValidationReport rep = summarize(s, replay_all(s, sol, rs, o.threads));
    MetricsRow row;
    row.nu = 0.0;
    row.nu_re = 0.0;
    row.mode = "deterministic";
    row.converged = sol.converged;
    row.ev_objective = sol.ev.objective;
    row.cs_objective = sol.cs.objective;
    row.re_objective = sol.retailer.objective;
    row.violating_evs = rep.unique_violating_evs;
    row.failed_evs = rep.unique_failed_evs;
    row.failed_avg = rep.avg_failed_per_replay;
    rows.push_back(row);
    trips.push_back({"deterministic", 0.0, rep.unique_failed_evs,
                     rep.avg_failed_per_replay});
  }
  write_metrics_csv(rows, path_in(o, "metrics.csv"));
  write_failed_trips_csv(trips, path_in(o, "failed_trips.csv"));
  return 0;
}

int cmd_validate(const Options& o) {
  Scenario s = load_scenario(o.scenario);
  std::vector<ConfidenceRow> conf;
  std::vector<FailedTripsRow> trips;
  auto rs = sample_realizations(s, o.samples,
                                draw_kind_from_string(o.kind), o.seed,
                                /*correlated=*/true);
  for (double nu : parse_grid(o.grid)) {
    EcosystemSolution sol;
    MetricsRow row = sweep_point(s, o, nu, &sol);
    if (!row.feasible) continue;
    ValidationReport rep = summarize(s, replay_all(s, sol, rs, o.threads));
    for (auto& r : confidence_rows(nu, rep)) conf.push_back(r);
    char label[16];
    std::snprintf(label, sizeof label, "%.2f", nu);
    trips.push_back({label, nu, rep.unique_failed_evs,
                     rep.avg_failed_per_replay});
  }
  {
    Scenario det = deterministic_copy(s);
    Options po = o;
    po.nu_ev = po.nu_cs = po.nu_re = 0.5;
    EcosystemSolution sol = run_day_ahead(det, coordinator_options(po));
    ValidationReport rep = summarize(s, replay_all(s, sol, rs, o.threads));
    for (auto& r : confidence_rows(0.0, rep)) {
      r.layer = "det_" + r.layer;
      conf.push_back(r);
    }
    trips.push_back({"deterministic", 0.0, rep.unique_failed_evs,
                     rep.avg_failed_per_replay});
  }
  write_confidence_csv(conf, path_in(o, "confidence.csv"));
  write_failed_trips_csv(trips, path_in(o, "failed_trips.csv"));
  return 0;
}

int cmd_report(const Options& o) {
  Scenario s = load_scenario(o.scenario);
  EcosystemSolution sol = run_day_ahead(s, coordinator_options(o));
  write_schedule_json(s, sol, path_in(o, "schedule.json"));
  write_trace_csv(sol.trace, path_in(o, "trace.csv"));

  auto rs = sample_realizations(s, o.samples,
                                draw_kind_from_string(o.kind), o.seed,
                                /*correlated=*/true);
  ValidationReport rep = summarize(s, replay_all(s, sol, rs, o.threads));
  write_validation_json(rep, path_in(o, "validation.json"));
  write_confidence_csv(confidence_rows(o.nu_ev, rep),
                       path_in(o, "confidence.csv"));
  char label[16];
  std::snprintf(label, sizeof label, "%.2f", o.nu_ev);
  write_failed_trips_csv({{label, o.nu_ev, rep.unique_failed_evs,
                           rep.avg_failed_per_replay}},
                         path_in(o, "failed_trips.csv"));

  MetricsRow row;
  row.nu = o.nu_ev;
  row.nu_re = o.nu_re;
  row.mode = o.double_mode;
  row.converged = sol.converged;
  row.ev_objective = sol.ev.objective;
  row.cs_objective = sol.cs.objective;
  row.re_objective = sol.retailer.objective;
  row.violating_evs = rep.unique_violating_evs;
  row.failed_evs = rep.unique_failed_evs;
  row.failed_avg = rep.avg_failed_per_replay;
  write_metrics_csv({row}, path_in(o, "metrics.csv"));

  AblationResult ab = pv_correlation_ablation(s, coordinator_options(o),
                                              o.samples, o.seed, o.threads);
  write_ablation_csv(ab, path_in(o, "ablation.csv"));
  return sol.converged ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Day-ahead DRCC scheduling for an e-mobility ecosystem"};
  app.require_subcommand(1);
  Options o;

  int gen_evs = 20, gen_stations = 3, gen_retailers = 2;
  auto* gen = app.add_subcommand("generate", "Generate a synthetic scenario");
  gen->add_option("--scenario", o.scenario,
                  "Output scenario path (default <out>/scenario.json)");
  gen->add_option("--out", o.out, "Output directory")->capture_default_str();
  gen->add_option("--evs", gen_evs, "Number of EVs")->capture_default_str();
  gen->add_option("--stations", gen_stations, "Number of charging stations")
      ->capture_default_str();
  gen->add_option("--retailers", gen_retailers, "Number of retailers")
      ->capture_default_str();
  gen->add_option("--seed", o.seed, "Seed for all randomness")
      ->capture_default_str();

  auto* solve = app.add_subcommand("solve", "Solve the day-ahead problem");
  add_common(solve, o);
  auto* sweep = app.add_subcommand(
      "sweep", "Solve across a confidence-level grid plus the deterministic "
               "baseline; writes metrics.csv and failed_trips.csv");
  add_common(sweep, o);
  sweep->add_option("--grid", o.grid, "Confidence grid lo:hi:step")
      ->capture_default_str();
  auto* validate = app.add_subcommand(
      "validate", "Monte Carlo replay across the grid; writes confidence.csv "
                  "and failed_trips.csv");
  add_common(validate, o);
  validate->add_option("--grid", o.grid, "Confidence grid lo:hi:step")
      ->capture_default_str();
  auto* report = app.add_subcommand(
      "report", "Solve, validate and run the PV-correlation ablation at one "
                "confidence level; writes the full artifact set");
  add_common(report, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_generate(o, gen_evs, gen_stations, gen_retailers);
    if (solve->parsed()) return cmd_solve(o);
    if (sweep->parsed()) return cmd_sweep(o);
    if (validate->parsed()) return cmd_validate(o);
    if (report->parsed()) return cmd_report(o);
  } catch (const InfeasibleError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
