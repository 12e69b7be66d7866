#include "emsched/ev_layer.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "emsched/solver.hpp"

namespace emsched {

namespace {

const Trip* trip_at(const Ev& ev, int t) {
  for (const auto& tr : ev.trips)
    for (int h : tr.window)
      if (h == t) return &tr;
  return nullptr;
}

std::string vname(const char* kind, int e, int t, int i) {
  return std::string(kind) + ":" + std::to_string(e) + ":" + std::to_string(t) +
         ":" + std::to_string(i);
}

}  // namespace

double ev_travel_soc(const Scenario& s, int ev_id, int t,
                     const Eigen::MatrixXd& gamma, const Eigen::MatrixXd& pi) {
  const Ev& ev = s.evs[static_cast<size_t>(ev_id)];
  const int S = static_cast<int>(s.stations.size());
  double acc = 0.0;
  for (int tau = 0; tau <= t; ++tau) {
    const Trip* tr = trip_at(ev, tau);
    if (!tr) continue;
    const auto& o = tr->origin_to_cs_km.at(tau);
    const auto& d = tr->cs_to_dest_km.at(tau);
    double sel = 0.0, km = 0.0;
    for (int i = 0; i < S; ++i) {
      double gp = gamma(tau, i) + pi(tau, i);
      sel += gp;
      km += (o[static_cast<size_t>(i)] + d[static_cast<size_t>(i)]) * gp;
    }
    if (tr->kind == TripKind::mandatory) km += tr->direct_km.at(tau) * (1.0 - sel);
    acc += km * ev.kwh_per_km / ev.battery_capacity_kwh;
  }
  return acc;
}

Model build_ev_problem(const Scenario& s, const EvPrices& prices,
                       const EvBuildOptions& opt, const std::vector<int>& evs,
                       std::vector<EvVarMap>* maps) {
  const int T = s.horizon.steps;
  const double dt = s.horizon.dt_hours;
  const int S = static_cast<int>(s.stations.size());
  const int vs = s.virtual_station();
  const int K = static_cast<int>(evs.size());
  const bool has_residual = opt.residual_chargers.size() > 0;

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(K, K);
  for (int k = 0; k < K; ++k) {
    double sd = s.evs[static_cast<size_t>(evs[static_cast<size_t>(k)])].soc0_cov;
    cov(k, k) = sd * sd;
  }

  Model m;
  m.set_sense(Sense::minimize);
  UncertainObjective uobj;

  std::vector<EvVarMap> vmaps(static_cast<size_t>(K));
  // charger occupancy per (t, real station), for the joint coupling constraint
  std::vector<std::vector<AffineExpr>> used(
      static_cast<size_t>(T), std::vector<AffineExpr>(static_cast<size_t>(S)));

  for (int k = 0; k < K; ++k) {
    const int eid = evs[static_cast<size_t>(k)];
    const Ev& ev = s.evs[static_cast<size_t>(eid)];
    const double cap = ev.battery_capacity_kwh;
    EvVarMap& vm = vmaps[static_cast<size_t>(k)];
    auto grid = [&] { return std::vector<std::vector<int>>(
        static_cast<size_t>(T), std::vector<int>(static_cast<size_t>(S), -1)); };
    vm.xp = grid(); vm.xm = grid(); vm.gam = grid(); vm.pi = grid(); vm.cum = grid();

    // main decision block: for t, for i: X+, X-, Gamma, Pi
    for (int t = 0; t < T; ++t) {
      const Trip* tr = trip_at(ev, t);
      for (int i = 0; i < S; ++i) {
        const ChargingStation& st = s.stations[static_cast<size_t>(i)];
        bool cand = tr != nullptr;
        if (cand && i != vs) {
          const auto& o = tr->origin_to_cs_km.at(t);
          const auto& d = tr->cs_to_dest_km.at(t);
          double od = o[static_cast<size_t>(i)] + d[static_cast<size_t>(i)];
          // route preference (3l)/(3m): stations too far off the nearest
          // round trip can never be selected, so fix them out up front
          if (od > tr->nearest_roundtrip_km.at(t) + ev.pref_extra_km + 1e-9)
            cand = false;
          if (has_residual && opt.residual_chargers(t, i) <= 0) cand = false;
        }
        bool can_power = cand && i != vs;
        double pmax = can_power ? st.charger_kw : 0.0;
        vm.xp[t][i] = m.add_var(vname("xp", eid, t, i), 0.0, pmax);
        vm.xm[t][i] = m.add_var(vname("xm", eid, t, i), 0.0, pmax);
        int g = m.add_var(vname("gam", eid, t, i), 0.0, 1.0, true);
        int p = m.add_var(vname("pi", eid, t, i), 0.0, 1.0, true);
        if (!cand) m.fix_var(g, 0.0);
        if (!cand || i == vs) m.fix_var(p, 0.0);  // VCS Gamma means "skip"
        vm.gam[t][i] = g;
        vm.pi[t][i] = p;
        if (can_power) {
          m.add_range(AffineExpr::variable(vm.xp[t][i]) -
                          st.charger_kw * AffineExpr::variable(g),
                      -kInf, 0.0, "ev:chglim");
          m.add_range(AffineExpr::variable(vm.xm[t][i]) -
                          st.charger_kw * AffineExpr::variable(p),
                      -kInf, 0.0, "ev:dislim");
          used[static_cast<size_t>(t)][static_cast<size_t>(i)] +=
              AffineExpr::variable(g) + AffineExpr::variable(p);
        }
      }
    }
    // cumulative per-station net charge A (SOC units)
    for (int t = 0; t < T; ++t)
      for (int i = 0; i < S; ++i) {
        vm.cum[t][i] = m.add_var(vname("cum", eid, t, i), -kInf, kInf);
        if (i == vs) {
          m.fix_var(vm.cum[t][i], 0.0);
          continue;
        }
        AffineExpr bal = AffineExpr::variable(vm.cum[t][i]);
        if (t > 0) bal -= AffineExpr::variable(vm.cum[t - 1][i]);
        bal -= AffineExpr::variable(vm.xp[t][i], ev.eta_charge * dt / cap);
        bal += AffineExpr::variable(vm.xm[t][i], dt / (ev.eta_discharge * cap));
        m.add_range(std::move(bal), 0.0, 0.0, "ev:cum");
      }

    AffineExpr travel;  // cumulative mean SOC spent on driving
    double cum_zeta = 0.0;  // direct-route SOC of the mandatory trips so far
    for (int t = 0; t < T; ++t) {
      const Trip* tr = trip_at(ev, t);
      AffineExpr sel;
      if (tr) {
        const auto& o = tr->origin_to_cs_km.at(t);
        const auto& d = tr->cs_to_dest_km.at(t);
        AffineExpr km;
        for (int i = 0; i < S; ++i) {
          AffineExpr gp = AffineExpr::variable(vm.gam[t][i]) +
                          AffineExpr::variable(vm.pi[t][i]);
          sel += gp;
          gp *= o[static_cast<size_t>(i)] + d[static_cast<size_t>(i)];
          km += gp;
        }
        if (tr->kind == TripKind::mandatory) {
          double zeta = tr->direct_km.at(t);
          km += zeta * (AffineExpr(1.0) - sel);
          cum_zeta += zeta * ev.kwh_per_km / cap;
        }
        km *= ev.kwh_per_km / cap;
        travel += km;
        // exactly one selection (the VCS covers "drive by / skip")
        m.add_range(sel, 1.0, 1.0, "ev:select");
      }

      AffineExpr soc(ev.soc0_mean);
      for (int i = 0; i < S; ++i) soc += AffineExpr::variable(vm.cum[t][i]);
      soc -= travel;

      // SOC band (3d); terminal target (3e) on the last hour
      DrccSpec band;
      band.kind = DrccKind::double_sided;
      band.body.det = soc;
      band.body.unc = {{k, AffineExpr(-1.0)}};
      band.lo = AffineExpr(ev.soc_min);
      band.hi = AffineExpr(ev.soc_max);
      band.eps = opt.eps_ev;
      band.family = "ev:soc";
      reform_double(m, band, cov, opt.mode);
      if (t == T - 1) {
        band.lo = AffineExpr(ev.soc_target_end);
        band.family = "ev:socend";
        reform_double(m, band, cov, opt.mode);
      }

      // economic preference constraints against the nearest station
      if (tr) {
        int near = nearest_station(*tr, t, s.stations);
        double ohat_soc = tr->nearest_cs_km.at(t) * ev.kwh_per_km / cap;
        double ahat = opt.prev_cum.empty()
                          ? 0.0
                          : opt.prev_cum[static_cast<size_t>(eid)](t, near);
        double ref = ev.soc0_mean + ahat - ohat_soc;
        double rp = prices.g2v_near(t, eid);
        double rm = prices.v2g_near(t, eid);
        for (int i = 0; i < S; ++i) {
          if (i == vs) continue;
          const Variable& gv = m.var(vm.gam[t][i]);
          if (gv.lb == gv.ub) continue;  // fixed out by route preference
          // charging preference (3j)
          DrccSpec cp;
          cp.kind = DrccKind::single_le;
          cp.body.det =
              AffineExpr::variable(vm.xp[t][i], prices.g2v(t, i) * dt);
          cp.body.det.add_term(vm.gam[t][i],
                               -(ev.pref_cost_gain_usd + rp * cap * ref));
          cp.body.det += AffineExpr(-rp * cap * cum_zeta);
          cp.body.det.add_term(vm.gam[t][i], rp * cap * cum_zeta);
          cp.body.unc = {{k, AffineExpr::variable(vm.gam[t][i], rp * cap)}};
          cp.hi = AffineExpr(0.0);
          cp.eps = opt.eps_ev;
          cp.family = "ev:pref+";
          reform_single(m, cp, cov);
          // discharging preference (3k)
          DrccSpec dp;
          dp.kind = DrccKind::single_ge;
          dp.body.det =
              AffineExpr::variable(vm.xm[t][i], prices.v2g(t, i) * dt);
          dp.body.det.add_term(vm.pi[t][i],
                               -(ev.pref_revenue_gain_usd + rm * cap * ref));
          dp.body.det += AffineExpr(rm * cap * cum_zeta);
          dp.body.det.add_term(vm.pi[t][i], -rm * cap * cum_zeta);
          dp.body.unc = {{k, AffineExpr::variable(vm.pi[t][i], rm * cap)}};
          dp.lo = AffineExpr(0.0);
          dp.eps = opt.eps_ev;
          dp.family = "ev:pref-";
          reform_single(m, dp, cov);
        }
      }

      // objective: energy trades, linear wear and the two quadratic terms
      const Degradation& dg = ev.degradation;
      AffineExpr xm_sum;
      for (int i = 0; i < S; ++i) {
        if (i == vs) continue;
        uobj.linear.add_term(vm.xp[t][i], (prices.g2v(t, i) + dg.c) * dt);
        uobj.linear.add_term(vm.xm[t][i], -(prices.v2g(t, i) + dg.d) * dt);
        xm_sum += AffineExpr::variable(vm.xm[t][i]);
      }
      UncertainQuadTerm wear;
      wear.weight = dg.b;
      wear.expr.det = soc - dg.a * sel;
      wear.expr.unc = {{k, AffineExpr(-1.0)}};
      uobj.quads.push_back(std::move(wear));
      uobj.quads.push_back({dg.f, {xm_sum, {}}});
    }
  }

  // charger-count coupling (3i); real stations only, the VCS is fictitious
  if (K > 1) {
    for (int t = 0; t < T; ++t)
      for (int i = 0; i < S; ++i) {
        if (i == vs) continue;
        AffineExpr& u = used[static_cast<size_t>(t)][static_cast<size_t>(i)];
        if (u.terms.empty()) continue;
        double navail = has_residual
                            ? static_cast<double>(opt.residual_chargers(t, i))
                            : static_cast<double>(
                                  s.stations[static_cast<size_t>(i)].charger_count);
        m.add_range(std::move(u), -kInf, navail, "ev:chargers");
      }
  }

  ClosedObjective closed = close_expectation(uobj, cov);
  m.set_objective(std::move(closed.linear));
  for (auto& q : closed.quads) m.add_quad_objective(q.weight, std::move(q.expr));
  m.add_objective_constant(closed.variance_constant);

  if (maps) *maps = std::move(vmaps);
  return m;
}

namespace {

double per_ev_cost(const Scenario& s, const EvPrices& prices, int eid,
                   const EvSchedule& sch) {
  const Ev& ev = s.evs[static_cast<size_t>(eid)];
  const Degradation& dg = ev.degradation;
  const int T = s.horizon.steps;
  const double dt = s.horizon.dt_hours;
  const int S = static_cast<int>(s.stations.size());
  const int vs = s.virtual_station();
  const size_t e = static_cast<size_t>(eid);
  double cost = dg.b * ev.soc0_cov * ev.soc0_cov * T;
  for (int t = 0; t < T; ++t) {
    double sel = 0.0, xm_sum = 0.0;
    for (int i = 0; i < S; ++i) {
      sel += sch.gamma[e](t, i) + sch.pi[e](t, i);
      if (i == vs) continue;
      cost += (prices.g2v(t, i) + dg.c) * sch.xplus[e](t, i) * dt;
      cost -= (prices.v2g(t, i) + dg.d) * sch.xminus[e](t, i) * dt;
      xm_sum += sch.xminus[e](t, i);
    }
    double dev = sch.soc_mean(eid, t) - dg.a * sel;
    cost += dg.b * dev * dev + dg.f * xm_sum * xm_sum;
  }
  return cost;
}

void extract(const Scenario& s, const std::vector<int>& evs,
             const std::vector<EvVarMap>& maps, const SolveResult& r,
             EvSchedule& out) {
  const int T = s.horizon.steps;
  const int S = static_cast<int>(s.stations.size());
  for (size_t k = 0; k < evs.size(); ++k) {
    const size_t e = static_cast<size_t>(evs[k]);
    for (int t = 0; t < T; ++t)
      for (int i = 0; i < S; ++i) {
        const EvVarMap& vm = maps[k];
        auto val = [&](int id) { return r.assignment[static_cast<size_t>(id)]; };
        out.xplus[e](t, i) = val(vm.xp[t][i]);
        out.xminus[e](t, i) = val(vm.xm[t][i]);
        out.gamma[e](t, i) = std::round(val(vm.gam[t][i]));
        out.pi[e](t, i) = std::round(val(vm.pi[t][i]));
        out.cum[e](t, i) = val(vm.cum[t][i]);
      }
    for (int t = 0; t < T; ++t) {
      double soc = s.evs[e].soc0_mean - ev_travel_soc(s, static_cast<int>(e), t,
                                                      out.gamma[e], out.pi[e]);
      for (int i = 0; i < S; ++i) soc += out.cum[e](t, i);
      out.soc_mean(static_cast<Eigen::Index>(e), t) = soc;
    }
  }
}

void apply_hint(Model& m, const std::vector<int>& evs,
                const std::vector<EvVarMap>& maps, const EvSchedule& warm) {
  const int T = static_cast<int>(maps[0].gam.size());
  std::map<int, double> hint;
  for (size_t k = 0; k < evs.size(); ++k) {
    const size_t e = static_cast<size_t>(evs[k]);
    if (warm.gamma.size() <= e || warm.gamma[e].size() == 0) continue;
    for (int t = 0; t < T; ++t)
      for (size_t i = 0; i < maps[k].gam[t].size(); ++i) {
        hint[maps[k].gam[t][i]] = warm.gamma[e](t, static_cast<Eigen::Index>(i));
        hint[maps[k].pi[t][i]] = warm.pi[e](t, static_cast<Eigen::Index>(i));
      }
  }
  m.set_hint(std::move(hint));
}

}  // namespace

EvSchedule solve_ev_layer(const Scenario& s, const EvPrices& prices,
                          const EvBuildOptions& opt, EvStrategy strategy,
                          const EvSchedule* warm) {
  const int T = s.horizon.steps;
  const int S = static_cast<int>(s.stations.size());
  const int E = static_cast<int>(s.evs.size());
  const int vs = s.virtual_station();

  EvSchedule out;
  auto zeros = [&] {
    return std::vector<Eigen::MatrixXd>(static_cast<size_t>(E),
                                        Eigen::MatrixXd::Zero(T, S));
  };
  out.xplus = zeros(); out.xminus = zeros();
  out.gamma = zeros(); out.pi = zeros(); out.cum = zeros();
  out.soc_mean = Eigen::MatrixXd::Zero(E, T);
  out.per_ev_objective.assign(static_cast<size_t>(E), 0.0);

  SolverOptions sopt;
  sopt.mip_gap = opt.mip_gap;
  auto run = [&](const std::vector<int>& group, const EvBuildOptions& o) {
    std::vector<EvVarMap> maps;
    Model m = build_ev_problem(s, prices, o, group, &maps);
    if (warm && !warm->gamma.empty()) apply_hint(m, group, maps, *warm);
    SolveResult r = solve(m, sopt);
    if (r.status == SolveStatus::infeasible)
      throw InfeasibleError("ev layer", r.blame);
    if (r.status != SolveStatus::optimal)
      throw std::runtime_error("ev layer: solver returned " +
                               std::string(to_string(r.status)));
    extract(s, group, maps, r, out);
  };

  if (strategy == EvStrategy::joint) {
    std::vector<int> all(static_cast<size_t>(E));
    std::iota(all.begin(), all.end(), 0);
    run(all, opt);
  } else {
    Eigen::MatrixXi residual = opt.residual_chargers;
    if (residual.size() == 0) {
      residual = Eigen::MatrixXi::Zero(T, S);
      for (int t = 0; t < T; ++t)
        for (int i = 0; i < S; ++i)
          residual(t, i) = s.stations[static_cast<size_t>(i)].charger_count;
    }
    for (int e = 0; e < E; ++e) {
      EvBuildOptions o = opt;
      o.residual_chargers = residual;
      run({e}, o);
      const size_t eu = static_cast<size_t>(e);
      for (int t = 0; t < T; ++t)
        for (int i = 0; i < S; ++i) {
          if (i == vs) continue;
          if (out.gamma[eu](t, i) + out.pi[eu](t, i) > 0.5)
            residual(t, i) = std::max(0, residual(t, i) - 1);
        }
    }
  }

  for (int e = 0; e < E; ++e) {
    out.per_ev_objective[static_cast<size_t>(e)] = per_ev_cost(s, prices, e, out);
    out.objective += out.per_ev_objective[static_cast<size_t>(e)];
  }
  return out;
}

}  // namespace emsched
