#include "emsched/cs_layer.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "emsched/ambiguity.hpp"
#include "emsched/solver.hpp"

namespace emsched {

namespace {

double cheapest_price(const Eigen::MatrixXd& retail, int t) {
  return retail.row(t).minCoeff();
}

}  // namespace

double cs_margin(const Scenario& s, int cs) {
  const ChargingStation& st = s.stations[static_cast<size_t>(cs)];
  int n_real = 0;
  for (const auto& c : s.stations)
    if (!c.is_virtual) ++n_real;
  if (n_real <= 1) return 0.5 * (st.margin_lo + st.margin_hi);
  double f = static_cast<double>(st.id) / static_cast<double>(n_real - 1);
  return st.margin_lo + (st.margin_hi - st.margin_lo) * f;
}

EvPrices derive_g2v_prices(const Eigen::MatrixXd& retail_prices,
                           const Scenario& s, int iteration) {
  (void)iteration;  // same rule every loop pass; kept for the call sites
  const int T = s.horizon.steps;
  const int S = static_cast<int>(s.stations.size());
  const int E = static_cast<int>(s.evs.size());
  EvPrices p;
  p.g2v = Eigen::MatrixXd::Zero(T, S);
  p.v2g = Eigen::MatrixXd::Zero(T, S);
  p.agg = Eigen::MatrixXd::Zero(T, S);
  p.g2v_near = Eigen::MatrixXd::Zero(T, E);
  p.v2g_near = Eigen::MatrixXd::Zero(T, E);
  for (int i = 0; i < S; ++i) {
    const ChargingStation& st = s.stations[static_cast<size_t>(i)];
    if (st.is_virtual) continue;
    double margin = cs_margin(s, i);
    for (int t = 0; t < T; ++t) {
      double base = cheapest_price(retail_prices, t);
      p.g2v(t, i) = base * (1.0 + margin);
      // the station's optimum sits at the lower edge of the V2G band
      p.v2g(t, i) = base * st.v2g_price_lo;
      p.agg(t, i) = p.v2g(t, i) * (1.0 + st.agg_markup);
    }
  }
  for (int e = 0; e < E; ++e)
    for (const auto& tr : s.evs[static_cast<size_t>(e)].trips)
      for (int t : tr.window) {
        int near = nearest_station(tr, t, s.stations);
        p.g2v_near(t, e) = p.g2v(t, near);
        p.v2g_near(t, e) = p.v2g(t, near);
      }
  return p;
}

Model build_cs_problem(const Scenario& s, int cs, const EvSchedule& ev,
                       const EvPrices& ev_prices,
                       const Eigen::MatrixXd& retail_prices,
                       const CsBuildOptions& opt, CsVarMap* map) {
  const ChargingStation& st = s.stations[static_cast<size_t>(cs)];
  if (st.is_virtual)
    throw std::invalid_argument("build_cs_problem: virtual station");
  const int T = s.horizon.steps;
  const double dt = s.horizon.dt_hours;
  const int R = static_cast<int>(s.retailers.size());
  const std::string si = std::to_string(cs);

  // aggregated EV demand at this station (fixed parameters)
  Eigen::VectorXd xp = Eigen::VectorXd::Zero(T), xm = Eigen::VectorXd::Zero(T);
  for (const auto& m : ev.xplus) xp += m.col(cs);
  for (const auto& m : ev.xminus) xm += m.col(cs);

  Moments pv = estimate_moments(s.history.pv_samples[static_cast<size_t>(cs)]);
  if (opt.ignore_pv_correlation)
    pv.cov = Eigen::MatrixXd(pv.cov.diagonal().asDiagonal());

  Model m;
  m.set_sense(Sense::maximize);
  CsVarMap vm;
  vm.y_re.assign(static_cast<size_t>(T), {});
  vm.beta.assign(static_cast<size_t>(T), {});

  for (int t = 0; t < T; ++t) {
    const std::string ts = std::to_string(t);
    for (int r = 0; r < R; ++r) {
      vm.y_re[static_cast<size_t>(t)].push_back(
          m.add_var("yre:" + si + ":" + ts + ":" + std::to_string(r), 0.0, kInf));
      vm.beta[static_cast<size_t>(t)].push_back(
          m.add_var("beta:" + si + ":" + ts + ":" + std::to_string(r), 0.0, 1.0,
                    true));
    }
    vm.y_gu.push_back(m.add_var("ygu:" + si + ":" + ts, 0.0, st.cgu_kw));
    // scheduled PV cannot exceed the forecast mean (curtailment only)
    vm.y_pv.push_back(
        m.add_var("ypv:" + si + ":" + ts, 0.0, std::max(0.0, pv.mean[t])));
    vm.y_ch.push_back(m.add_var("ych:" + si + ":" + ts, 0.0, st.ess_kw));
    vm.y_dis.push_back(m.add_var("ydis:" + si + ":" + ts, 0.0, st.ess_kw));
    vm.psi.push_back(m.add_var("psi:" + si + ":" + ts, 0.0, 1.0, true));
    double base = cheapest_price(retail_prices, t);
    vm.rho_minus.push_back(m.add_var("rho-:" + si + ":" + ts,
                                     base * st.v2g_price_lo,
                                     base * st.v2g_price_hi));
  }

  AffineExpr obj;
  for (int t = 0; t < T; ++t) {
    const size_t tu = static_cast<size_t>(t);
    // power balance (4b), single-sided with slack; PV error enters as -xi_t
    AffineExpr supply = AffineExpr::variable(vm.y_pv[tu]) +
                        AffineExpr::variable(vm.y_gu[tu]) +
                        AffineExpr::variable(vm.y_dis[tu]);
    for (int r = 0; r < R; ++r)
      supply += AffineExpr::variable(vm.y_re[tu][static_cast<size_t>(r)]);
    supply += xm[t] + s.balance_slack;
    supply -= (xm[t] + xp[t]) / st.charger_eta;
    supply -= AffineExpr::variable(vm.y_ch[tu]);
    DrccSpec bal;
    bal.kind = DrccKind::single_ge;
    bal.body.det = supply;
    bal.body.unc = {{t, AffineExpr(-1.0)}};
    bal.lo = AffineExpr(0.0);
    bal.eps = opt.eps_cs;
    bal.family = "cs:balance:" + si + ":" + std::to_string(t);
    reform_single(m, bal, pv.cov);

    // PV capacity band (4d)
    DrccSpec cap;
    cap.kind = DrccKind::double_sided;
    cap.body.det = AffineExpr::variable(vm.y_pv[tu]);
    cap.body.unc = {{t, AffineExpr(-1.0)}};
    cap.lo = AffineExpr(0.0);
    cap.hi = AffineExpr(st.pv_kw);
    cap.eps = opt.eps_cs;
    cap.family = "cs:pv:" + si;
    reform_double(m, cap, pv.cov, opt.mode);

    // PV ramp band (4e); the lagged pair (xi_t, xi_{t-1}) picks the 2x2
    // sub-covariance out of the full matrix
    if (t >= 1) {
      DrccSpec ramp;
      ramp.kind = DrccKind::double_sided;
      ramp.body.det = (AffineExpr::variable(vm.y_pv[tu]) -
                       AffineExpr::variable(vm.y_pv[tu - 1])) *
                      (1.0 / dt);
      ramp.body.unc = {{t, AffineExpr(-1.0 / dt)}, {t - 1, AffineExpr(1.0 / dt)}};
      ramp.lo = AffineExpr(st.pv_ramp_min);
      ramp.hi = AffineExpr(st.pv_ramp_max);
      ramp.eps = opt.eps_cs;
      ramp.family = "cs:ramp:" + si;
      reform_double(m, ramp, pv.cov, opt.mode);
    }

    // retailer purchase bound (4f) and exclusive selection (4g)
    AffineExpr bsum;
    for (int r = 0; r < R; ++r) {
      const size_t ru = static_cast<size_t>(r);
      m.add_range(AffineExpr::variable(vm.y_re[tu][ru]) -
                      st.station_kw_cap * AffineExpr::variable(vm.beta[tu][ru]),
                  -kInf, 0.0, "cs:relim");
      bsum += AffineExpr::variable(vm.beta[tu][ru]);
    }
    m.add_range(std::move(bsum), -kInf, 1.0, "cs:resel");

    // ESS mode split (4h)/(4i)
    m.add_range(AffineExpr::variable(vm.y_ch[tu]) -
                    st.ess_kw * AffineExpr::variable(vm.psi[tu]),
                -kInf, 0.0, "cs:essch");
    m.add_range(AffineExpr::variable(vm.y_dis[tu]) +
                    st.ess_kw * AffineExpr::variable(vm.psi[tu]),
                -kInf, st.ess_kw, "cs:essdis");

    // objective pieces
    obj += (ev_prices.g2v(t, cs) * xp[t] + ev_prices.agg(t, cs) * xm[t]) * dt;
    for (int r = 0; r < R; ++r)
      obj += AffineExpr::variable(vm.y_re[tu][static_cast<size_t>(r)],
                                  -retail_prices(t, r) * dt);
    obj += AffineExpr::variable(vm.rho_minus[tu], -xm[t] * dt);
    obj += AffineExpr::variable(
        vm.y_gu[tu],
        -s.history.gas_price[tu] * dt / (st.cgu_eta * s.history.heat_value));
  }

  // ESS state of charge (4j): starts at the lower bound, and the paper's
  // running sum begins at the second hour
  const double ess_kwh = st.ess_kw;  // one-hour storage
  AffineExpr soc_sum;
  for (int t = 1; t < T; ++t) {
    const size_t tu = static_cast<size_t>(t);
    soc_sum += (AffineExpr::variable(vm.y_ch[tu]) -
                AffineExpr::variable(vm.y_dis[tu])) *
               (dt / ess_kwh);
    m.add_linear({soc_sum, 0.0, st.ess_soc_max - st.ess_soc_min, "cs:esssoc"});
  }

  m.set_objective(std::move(obj));
  if (map) *map = std::move(vm);
  return m;
}

CsDispatch solve_cs_layer(const Scenario& s, const EvSchedule& ev,
                          const EvPrices& ev_prices,
                          const Eigen::MatrixXd& retail_prices,
                          const CsBuildOptions& opt) {
  const int T = s.horizon.steps;
  const int S = static_cast<int>(s.stations.size());
  const int R = static_cast<int>(s.retailers.size());

  CsDispatch out;
  out.y_re.assign(static_cast<size_t>(R), Eigen::MatrixXd::Zero(T, S));
  out.beta.assign(static_cast<size_t>(R), Eigen::MatrixXd::Zero(T, S));
  out.y_gu = Eigen::MatrixXd::Zero(T, S);
  out.y_pv = Eigen::MatrixXd::Zero(T, S);
  out.y_ch = Eigen::MatrixXd::Zero(T, S);
  out.y_dis = Eigen::MatrixXd::Zero(T, S);
  out.psi = Eigen::MatrixXd::Zero(T, S);
  out.rho_minus = Eigen::MatrixXd::Zero(T, S);
  out.agg_price = Eigen::MatrixXd::Zero(T, S);
  out.per_cs_objective.assign(static_cast<size_t>(S), 0.0);

  for (int i = 0; i < S; ++i) {
    if (s.stations[static_cast<size_t>(i)].is_virtual) continue;
    CsVarMap vm;
    Model m = build_cs_problem(s, i, ev, ev_prices, retail_prices, opt, &vm);
    // Seed the incumbent from the root relaxation. The interior-point
    // relaxation leaves indifferent binaries fractional, so read the
    // selection off the continuous flows instead: pick the retailer that
    // actually supplies power (cheapest one if none does) and set the ESS
    // mode to whichever of charge/discharge is active. The resulting
    // integral point is optimal whenever the relaxation is tight, and the
    // tree then prunes at the root.
    SolveResult relax = solve_continuous(m);
    std::map<int, double> hint;
    for (int t = 0; t < T; ++t) {
      const size_t tu = static_cast<size_t>(t);
      int best = 0;
      for (int r = 1; r < R; ++r)
        if (retail_prices(t, r) < retail_prices(t, best)) best = r;
      if (relax.status == SolveStatus::optimal) {
        double top = 0.0;
        for (int r = 0; r < R; ++r) {
          double flow =
              relax.assignment[static_cast<size_t>(vm.y_re[tu][static_cast<size_t>(r)])];
          if (flow > top + 1e-9) {
            top = flow;
            best = r;
          }
        }
      }
      for (int r = 0; r < R; ++r)
        hint[vm.beta[tu][static_cast<size_t>(r)]] = r == best ? 1.0 : 0.0;
      double ych = 0.0, ydis = 0.0;
      if (relax.status == SolveStatus::optimal) {
        ych = relax.assignment[static_cast<size_t>(vm.y_ch[tu])];
        ydis = relax.assignment[static_cast<size_t>(vm.y_dis[tu])];
      }
      hint[vm.psi[tu]] = ych >= ydis ? 1.0 : 0.0;
    }
    m.set_hint(std::move(hint));
    SolveResult r = solve(m);
    if (r.status == SolveStatus::infeasible)
      throw InfeasibleError("cs layer", r.blame);
    if (r.status != SolveStatus::optimal)
      throw std::runtime_error("cs layer: solver returned " +
                               std::string(to_string(r.status)));
    for (int t = 0; t < T; ++t) {
      const size_t tu = static_cast<size_t>(t);
      auto val = [&](int id) { return r.assignment[static_cast<size_t>(id)]; };
      for (int rr = 0; rr < R; ++rr) {
        out.y_re[static_cast<size_t>(rr)](t, i) =
            val(vm.y_re[tu][static_cast<size_t>(rr)]);
        out.beta[static_cast<size_t>(rr)](t, i) =
            std::round(val(vm.beta[tu][static_cast<size_t>(rr)]));
      }
      out.y_gu(t, i) = val(vm.y_gu[tu]);
      out.y_pv(t, i) = val(vm.y_pv[tu]);
      out.y_ch(t, i) = val(vm.y_ch[tu]);
      out.y_dis(t, i) = val(vm.y_dis[tu]);
      out.psi(t, i) = std::round(val(vm.psi[tu]));
      out.rho_minus(t, i) = val(vm.rho_minus[tu]);
      out.agg_price(t, i) = ev_prices.agg(t, i);
    }
    out.per_cs_objective[static_cast<size_t>(i)] = r.objective;
    out.objective += r.objective;
  }
  return out;
}

}  // namespace emsched
