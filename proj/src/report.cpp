#include "emsched/report.hpp"

#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

namespace emsched {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path);
  return f;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

json matrix(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index t = 0; t < m.rows(); ++t) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(t, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vec(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

}  // namespace

void write_schedule_json(const Scenario& s, const EcosystemSolution& sol,
                         const std::string& path) {
  const int T = s.horizon.steps;
  const int S = static_cast<int>(s.stations.size());
  const int R = static_cast<int>(s.retailers.size());
  const int vs = s.virtual_station();

  ordered_json doc;
  doc["horizon"] = {{"steps", T}, {"dt_hours", s.horizon.dt_hours}};
  doc["converged"] = sol.converged;
  doc["outer_iterations"] = sol.outer_iterations;
  doc["objectives"] = {{"ev", sol.ev.objective},
                       {"cs", sol.cs.objective},
                       {"retailer", sol.retailer.objective}};
  doc["retail_prices"] = matrix(sol.retail_prices);

  ordered_json evs = ordered_json::array();
  for (size_t e = 0; e < s.evs.size(); ++e) {
    ordered_json ev;
    ev["id"] = s.evs[e].id;
    ev["objective"] = sol.ev.per_ev_objective[e];
    ordered_json hours = ordered_json::array();
    for (int t = 0; t < T; ++t) {
      int station = -1;
      double xp = 0.0, xm = 0.0;
      for (int i = 0; i < S; ++i) {
        if (sol.ev.gamma[e](t, i) + sol.ev.pi[e](t, i) > 0.5) station = i;
        xp += sol.ev.xplus[e](t, i);
        xm += sol.ev.xminus[e](t, i);
      }
      ordered_json h;
      h["t"] = t;
      h["station"] = station;
      h["virtual"] = station == vs;
      h["x_plus_kw"] = xp;
      h["x_minus_kw"] = xm;
      h["soc_mean"] = sol.ev.soc_mean(static_cast<Eigen::Index>(e), t);
      hours.push_back(std::move(h));
    }
    ev["hours"] = std::move(hours);
    evs.push_back(std::move(ev));
  }
  doc["evs"] = std::move(evs);

  ordered_json stations = ordered_json::array();
  for (int i = 0; i < S; ++i) {
    if (s.stations[static_cast<size_t>(i)].is_virtual) continue;
    ordered_json st;
    st["id"] = s.stations[static_cast<size_t>(i)].id;
    json yre = json::array();
    for (int t = 0; t < T; ++t) {
      json per_r = json::array();
      for (int r = 0; r < R; ++r)
        per_r.push_back(sol.cs.y_re[static_cast<size_t>(r)](t, i));
      yre.push_back(std::move(per_r));
    }
    st["y_re_kw"] = std::move(yre);
    st["y_gu_kw"] = vec(sol.cs.y_gu.col(i));
    st["y_pv_kw"] = vec(sol.cs.y_pv.col(i));
    st["y_ch_kw"] = vec(sol.cs.y_ch.col(i));
    st["y_dis_kw"] = vec(sol.cs.y_dis.col(i));
    st["v2g_price"] = vec(sol.cs.rho_minus.col(i));
    stations.push_back(std::move(st));
  }
  doc["stations"] = std::move(stations);

  ordered_json re;
  re["price"] = matrix(sol.retailer.price);
  re["p_wm_kw"] = matrix(sol.retailer.p_wm);
  re["q_wm_kvar"] = matrix(sol.retailer.q_wm);
  re["objective"] = sol.retailer.objective;
  doc["retailer"] = std::move(re);

  auto f = open_out(path);
  f << doc.dump(2) << "\n";
}

void write_trace_csv(const std::vector<IterationRecord>& trace,
                     const std::string& path) {
  auto f = open_out(path);
  // wall-clock timings stay out of the file so identical runs stay
  // byte-identical
  f << "iteration,layer,objective,delta\n";
  for (const auto& r : trace)
    f << r.iteration << "," << r.layer << "," << num(r.objective) << ","
      << num(r.delta) << "\n";
}

void write_metrics_csv(const std::vector<MetricsRow>& rows,
                       const std::string& path) {
  auto f = open_out(path);
  f << "nu,nu_re,mode,feasible,converged,ev_objective,cs_objective,"
       "re_objective,violating_evs,failed_evs,failed_avg\n";
  for (const auto& r : rows)
    f << num(r.nu) << "," << num(r.nu_re) << "," << r.mode << ","
      << (r.feasible ? 1 : 0) << "," << (r.converged ? 1 : 0) << ","
      << num(r.ev_objective) << "," << num(r.cs_objective) << ","
      << num(r.re_objective) << "," << r.violating_evs << "," << r.failed_evs
      << "," << num(r.failed_avg) << "\n";
}

void write_confidence_csv(const std::vector<ConfidenceRow>& rows,
                          const std::string& path) {
  auto f = open_out(path);
  f << "nu_th,layer,nu_ac,wilson_lo,wilson_hi,violating_replays,samples\n";
  for (const auto& r : rows)
    f << num(r.nu_th) << "," << r.layer << "," << num(r.nu_ac) << ","
      << num(r.wilson_lo) << "," << num(r.wilson_hi) << ","
      << r.violating_replays << "," << r.samples << "\n";
}

void write_failed_trips_csv(const std::vector<FailedTripsRow>& rows,
                            const std::string& path) {
  auto f = open_out(path);
  f << "label,nu,unique_failed_evs,per_replay_avg\n";
  for (const auto& r : rows)
    f << r.label << "," << num(r.nu) << "," << r.unique_failed_evs << ","
      << num(r.per_replay_avg) << "\n";
}

void write_ablation_csv(const AblationResult& r, const std::string& path) {
  auto f = open_out(path);
  f << "rmse_with,rmse_without,failed_with,failed_without\n";
  f << num(r.rmse_with) << "," << num(r.rmse_without) << "," << r.failed_with
    << "," << r.failed_without << "\n";
}

void write_validation_json(const ValidationReport& rep,
                           const std::string& path) {
  ordered_json doc;
  auto layer = [](const LayerConfidence& lc) {
    ordered_json j;
    j["nu_ac"] = lc.nu_ac;
    j["wilson_lo"] = lc.wilson.lo;
    j["wilson_hi"] = lc.wilson.hi;
    j["violating_replays"] = lc.violating_replays;
    j["samples"] = lc.n;
    return j;
  };
  doc["ev"] = layer(rep.ev);
  doc["cs"] = layer(rep.cs);
  doc["retailer"] = layer(rep.re);
  doc["unique_violating_evs"] = rep.unique_violating_evs;
  doc["unique_failed_evs"] = rep.unique_failed_evs;
  doc["avg_failed_per_replay"] = rep.avg_failed_per_replay;
  ordered_json fams;
  for (const auto& [fam, c] : rep.family_tallies) fams[fam] = c;
  doc["violated_families"] = std::move(fams);
  auto f = open_out(path);
  f << doc.dump(2) << "\n";
}

std::vector<ConfidenceRow> confidence_rows(double nu_th,
                                           const ValidationReport& rep) {
  auto row = [&](const char* name, const LayerConfidence& lc) {
    ConfidenceRow r;
    r.nu_th = nu_th;
    r.layer = name;
    r.nu_ac = lc.nu_ac;
    r.wilson_lo = lc.wilson.lo;
    r.wilson_hi = lc.wilson.hi;
    r.violating_replays = lc.violating_replays;
    r.samples = lc.n;
    return r;
  };
  return {row("ev", rep.ev), row("cs", rep.cs), row("retailer", rep.re)};
}

}  // namespace emsched
