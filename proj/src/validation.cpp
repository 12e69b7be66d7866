#include "emsched/validation.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

#include "emsched/ambiguity.hpp"
#include "emsched/ev_layer.hpp"

#ifdef EMSCHED_HAVE_OPENMP
#include <omp.h>
#endif

namespace emsched {

namespace {

constexpr double kTol = 1e-6;  // violation slack over the solver feastol

const Trip* trip_at(const Ev& ev, int t) {
  for (const auto& tr : ev.trips)
    for (int h : tr.window)
      if (h == t) return &tr;
  return nullptr;
}

/// One zero-mean draw with standard deviation sigma.
double draw(std::mt19937_64& rng, DrawKind kind, double sigma, double eps) {
  if (sigma <= 0.0) return 0.0;
  switch (kind) {
    case DrawKind::normal: {
      std::normal_distribution<double> d(0.0, sigma);
      return d(rng);
    }
    case DrawKind::uniform: {
      std::uniform_real_distribution<double> d(-1.0, 1.0);
      return std::sqrt(3.0) * sigma * d(rng);
    }
    case DrawKind::two_point: {
      // Worst-case pair for a lower-side chance constraint at risk eps:
      // the rare atom sits far on the negative (shortfall) side.
      std::uniform_real_distribution<double> d(0.0, 1.0);
      double u = d(rng);
      if (u < eps) return -sigma * std::sqrt((1.0 - eps) / eps);
      return sigma * std::sqrt(eps / (1.0 - eps));
    }
  }
  return 0.0;
}

/// Means and variances reused across every replay of a batch.
struct ReplayContext {
  std::vector<Eigen::VectorXd> pv_mean;  // per station
  Eigen::VectorXd wm_mean;
  explicit ReplayContext(const Scenario& s) {
    pv_mean.resize(s.stations.size());
    for (size_t i = 0; i < s.stations.size(); ++i) {
      if (s.stations[i].is_virtual || s.history.pv_samples.size() <= i) {
        pv_mean[i] = Eigen::VectorXd::Zero(s.horizon.steps);
        continue;
      }
      pv_mean[i] = estimate_moments(s.history.pv_samples[i]).mean;
    }
    wm_mean = estimate_moments(s.history.price_samples).mean;
  }
};

ReplayFlags replay_one(const Scenario& s, const EcosystemSolution& sol,
                       const Realization& r, const ReplayContext& ctx) {
  const int T = s.horizon.steps;
  const double dt = s.horizon.dt_hours;
  const int S = static_cast<int>(s.stations.size());
  const int R = static_cast<int>(s.retailers.size());
  const int vs = s.virtual_station();
  ReplayFlags out;

  auto hit = [&](const std::string& fam, bool& layer) {
    ++out.violated[fam];
    layer = true;
  };

  // EV layer: (3d) SOC band, (3e) terminal SOC, (3j)/(3k) preferences
  for (size_t e = 0; e < s.evs.size(); ++e) {
    const Ev& ev = s.evs[e];
    const double cap = ev.battery_capacity_kwh;
    const double delta = r.soc0[static_cast<Eigen::Index>(e)] - ev.soc0_mean;
    bool bad = false, trip_fail = false;
    double cum_zeta = 0.0;
    for (int t = 0; t < T; ++t) {
      double soc = sol.ev.soc_mean(static_cast<Eigen::Index>(e), t) + delta;
      const Trip* tr = trip_at(ev, t);
      if (soc < ev.soc_min - kTol || soc > ev.soc_max + kTol) {
        hit("ev:soc", out.ev);
        bad = true;
        if (soc < ev.soc_min - kTol && tr && tr->kind == TripKind::mandatory)
          trip_fail = true;
      }
      if (t == T - 1 && soc < ev.soc_target_end - kTol) {
        hit("ev:socend", out.ev);
        bad = true;
      }
      if (!tr) continue;
      if (tr->kind == TripKind::mandatory)
        cum_zeta += tr->direct_km.at(t) * ev.kwh_per_km / cap;
      int near = nearest_station(*tr, t, s.stations);
      double ohat = tr->nearest_cs_km.at(t) * ev.kwh_per_km / cap;
      double ahat = sol.ev.cum[e](t, near);
      double ref = r.soc0[static_cast<Eigen::Index>(e)] + ahat - ohat;
      double rp = sol.ev_prices.g2v_near(t, static_cast<int>(e));
      double rm = sol.ev_prices.v2g_near(t, static_cast<int>(e));
      for (int i = 0; i < S; ++i) {
        if (i == vs) continue;
        double g = sol.ev.gamma[e](t, i);
        double pi = sol.ev.pi[e](t, i);
        double lhs_c = sol.ev_prices.g2v(t, i) * sol.ev.xplus[e](t, i) * dt -
                       g * (ev.pref_cost_gain_usd + rp * cap * ref) -
                       rp * cap * cum_zeta * (1.0 - g);
        if (lhs_c > kTol) {
          hit("ev:pref+", out.ev);
          bad = true;
        }
        double lhs_d = sol.ev_prices.v2g(t, i) * sol.ev.xminus[e](t, i) * dt -
                       pi * (ev.pref_revenue_gain_usd + rm * cap * ref) +
                       rm * cap * cum_zeta * (1.0 - pi);
        if (lhs_d < -kTol) {
          hit("ev:pref-", out.ev);
          bad = true;
        }
      }
    }
    if (bad) out.violating_evs.push_back(static_cast<int>(e));
    if (trip_fail) out.failed_evs.push_back(static_cast<int>(e));
  }

  // CS layer: (4b) balance, (4d) PV band, (4e) PV ramp
  for (int i = 0; i < S; ++i) {
    const ChargingStation& st = s.stations[static_cast<size_t>(i)];
    if (st.is_virtual) continue;
    double xi_prev = 0.0;
    for (int t = 0; t < T; ++t) {
      double xp = 0.0, xm = 0.0;
      for (size_t e = 0; e < s.evs.size(); ++e) {
        xp += sol.ev.xplus[e](t, i);
        xm += sol.ev.xminus[e](t, i);
      }
      double yre = 0.0;
      for (int rr = 0; rr < R; ++rr) yre += sol.cs.y_re[static_cast<size_t>(rr)](t, i);
      double xi = r.pv(t, i) - ctx.pv_mean[static_cast<size_t>(i)][t];
      double supply = sol.cs.y_pv(t, i) + sol.cs.y_gu(t, i) +
                      sol.cs.y_dis(t, i) + yre + xm + s.balance_slack -
                      (xm + xp) / st.charger_eta - sol.cs.y_ch(t, i) + xi;
      if (supply < -kTol) hit("cs:balance", out.cs);
      double band = sol.cs.y_pv(t, i) + xi;
      if (band < -kTol || band > st.pv_kw + kTol) hit("cs:pv", out.cs);
      if (t >= 1) {
        double ramp = (sol.cs.y_pv(t, i) - sol.cs.y_pv(t - 1, i) + xi - xi_prev) / dt;
        if (ramp < st.pv_ramp_min - kTol || ramp > st.pv_ramp_max + kTol)
          hit("cs:ramp", out.cs);
      }
      xi_prev = xi;
    }
  }

  // retailer layer: (5k) price band around the realized wholesale deviation
  for (int t = 0; t < T; ++t) {
    double kap = r.wholesale[t] - ctx.wm_mean[t];
    for (int rr = 0; rr < R; ++rr) {
      const Retailer& re = s.retailers[static_cast<size_t>(rr)];
      double v = sol.retailer.price(t, rr) + kap;
      if (v < re.alpha_lo * ctx.wm_mean[t] - kTol ||
          v > re.alpha_hi * ctx.wm_mean[t] + kTol)
        hit("re:price", out.re);
    }
  }
  return out;
}

}  // namespace

DrawKind draw_kind_from_string(const std::string& s) {
  if (s == "normal") return DrawKind::normal;
  if (s == "uniform") return DrawKind::uniform;
  if (s == "two_point") return DrawKind::two_point;
  throw std::invalid_argument("unknown draw kind: " + s);
}

const char* to_string(DrawKind k) {
  switch (k) {
    case DrawKind::normal: return "normal";
    case DrawKind::uniform: return "uniform";
    case DrawKind::two_point: return "two_point";
  }
  return "?";
}

std::vector<Realization> sample_realizations(const Scenario& s, int n,
                                             DrawKind kind, unsigned seed,
                                             bool correlated, double eps) {
  if (n < 1) throw std::invalid_argument("sample_realizations: n < 1");
  const int T = s.horizon.steps;
  const int S = static_cast<int>(s.stations.size());
  const int E = static_cast<int>(s.evs.size());

  // per-station marginal moments, shared by every replay
  std::vector<Moments> pv(static_cast<size_t>(S));
  for (int i = 0; i < S; ++i) {
    if (s.stations[static_cast<size_t>(i)].is_virtual ||
        static_cast<size_t>(i) >= s.history.pv_samples.size())
      continue;
    pv[static_cast<size_t>(i)] =
        estimate_moments(s.history.pv_samples[static_cast<size_t>(i)]);
  }
  Moments wm = estimate_moments(s.history.price_samples);

  std::mt19937_64 rng(seed);
  std::vector<Realization> out(static_cast<size_t>(n));
  for (auto& r : out) {
    r.soc0.resize(E);
    for (int e = 0; e < E; ++e)
      r.soc0[e] = s.evs[static_cast<size_t>(e)].soc0_mean +
                  draw(rng, kind, s.evs[static_cast<size_t>(e)].soc0_cov, eps);
    r.pv = Eigen::MatrixXd::Zero(T, S);
    for (int i = 0; i < S; ++i) {
      if (pv[static_cast<size_t>(i)].mean.size() == 0) continue;
      const Moments& m = pv[static_cast<size_t>(i)];
      double xi_prev = 0.0;
      for (int t = 0; t < T; ++t) {
        double var = std::max(0.0, m.cov(t, t));
        double xi;
        if (correlated && kind == DrawKind::normal && t >= 1) {
          LaggedMoments lm = lagged_moments(
              s.history.pv_samples[static_cast<size_t>(i)], t);
          double var_prev = std::max(0.0, lm.cov_block(1, 1));
          double ups = lm.cov_block(0, 1);
          double slope = var_prev > 0.0 ? ups / var_prev : 0.0;
          double cvar = std::max(0.0, var - slope * ups);
          xi = slope * xi_prev + draw(rng, kind, std::sqrt(cvar), eps);
        } else {
          xi = draw(rng, kind, std::sqrt(var), eps);
        }
        r.pv(t, i) = m.mean[t] + xi;
        xi_prev = xi;
      }
    }
    r.wholesale.resize(T);
    for (int t = 0; t < T; ++t)
      r.wholesale[t] =
          wm.mean[t] + draw(rng, kind, std::sqrt(std::max(0.0, wm.cov(t, t))), eps);
  }
  return out;
}

Realization nominal_realization(const Scenario& s) {
  const int T = s.horizon.steps;
  const int S = static_cast<int>(s.stations.size());
  Realization r;
  r.soc0.resize(static_cast<Eigen::Index>(s.evs.size()));
  for (size_t e = 0; e < s.evs.size(); ++e)
    r.soc0[static_cast<Eigen::Index>(e)] = s.evs[e].soc0_mean;
  r.pv = Eigen::MatrixXd::Zero(T, S);
  for (int i = 0; i < S; ++i) {
    if (s.stations[static_cast<size_t>(i)].is_virtual ||
        static_cast<size_t>(i) >= s.history.pv_samples.size())
      continue;
    r.pv.col(i) = estimate_moments(s.history.pv_samples[static_cast<size_t>(i)]).mean;
  }
  r.wholesale = estimate_moments(s.history.price_samples).mean;
  return r;
}

Realization mean_realization(const std::vector<Realization>& rs) {
  if (rs.empty()) throw std::invalid_argument("mean_realization: empty batch");
  Realization m = rs[0];
  for (size_t k = 1; k < rs.size(); ++k) {
    m.soc0 += rs[k].soc0;
    m.pv += rs[k].pv;
    m.wholesale += rs[k].wholesale;
  }
  double inv = 1.0 / static_cast<double>(rs.size());
  m.soc0 *= inv;
  m.pv *= inv;
  m.wholesale *= inv;
  return m;
}

ReplayFlags replay(const Scenario& s, const EcosystemSolution& sol,
                   const Realization& r) {
  ReplayContext ctx(s);
  return replay_one(s, sol, r, ctx);
}

std::vector<ReplayFlags> replay_all_serial(const Scenario& s,
                                           const EcosystemSolution& sol,
                                           const std::vector<Realization>& rs) {
  ReplayContext ctx(s);
  std::vector<ReplayFlags> out(rs.size());
  for (size_t k = 0; k < rs.size(); ++k) out[k] = replay_one(s, sol, rs[k], ctx);
  return out;
}

std::vector<ReplayFlags> replay_all(const Scenario& s,
                                    const EcosystemSolution& sol,
                                    const std::vector<Realization>& rs,
                                    int threads) {
#ifdef EMSCHED_HAVE_OPENMP
  ReplayContext ctx(s);
  std::vector<ReplayFlags> out(rs.size());
  const int nt = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(static) num_threads(nt)
  for (long k = 0; k < static_cast<long>(rs.size()); ++k)
    out[static_cast<size_t>(k)] =
        replay_one(s, sol, rs[static_cast<size_t>(k)], ctx);
  return out;
#else
  (void)threads;
  return replay_all_serial(s, sol, rs);
#endif
}

WilsonInterval wilson95(int successes, int n) {
  if (n <= 0) return {0.0, 1.0};
  const double z = 1.959963984540054;
  const double z2 = z * z;
  double p = static_cast<double>(successes) / n;
  double denom = 1.0 + z2 / n;
  double center = (p + z2 / (2.0 * n)) / denom;
  double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

ValidationReport summarize(const Scenario& s,
                           const std::vector<ReplayFlags>& flags) {
  (void)s;
  ValidationReport rep;
  const int n = static_cast<int>(flags.size());
  int vev = 0, vcs = 0, vre = 0;
  std::set<int> violating, failed;
  double fail_sum = 0.0;
  for (const auto& f : flags) {
    vev += f.ev;
    vcs += f.cs;
    vre += f.re;
    violating.insert(f.violating_evs.begin(), f.violating_evs.end());
    failed.insert(f.failed_evs.begin(), f.failed_evs.end());
    fail_sum += static_cast<double>(f.failed_evs.size());
    for (const auto& [fam, c] : f.violated) rep.family_tallies[fam] += c;
  }
  auto layer = [&](int v) {
    LayerConfidence lc;
    lc.n = n;
    lc.violating_replays = v;
    lc.nu_ac = n > 0 ? 1.0 - static_cast<double>(v) / n : 1.0;
    lc.wilson = wilson95(n - v, n);
    return lc;
  };
  rep.ev = layer(vev);
  rep.cs = layer(vcs);
  rep.re = layer(vre);
  rep.unique_violating_evs = static_cast<int>(violating.size());
  rep.unique_failed_evs = static_cast<int>(failed.size());
  rep.avg_failed_per_replay = n > 0 ? fail_sum / n : 0.0;
  return rep;
}

ValidationReport actual_confidence(const Scenario& s,
                                   const EcosystemSolution& sol, int n,
                                   DrawKind kind, unsigned seed, int threads) {
  if (n < 100) throw std::invalid_argument("actual_confidence: n < 100");
  auto rs = sample_realizations(s, n, kind, seed, /*correlated=*/true);
  return summarize(s, replay_all(s, sol, rs, threads));
}

TripFailures trip_failure_count(const Scenario& s,
                                const EcosystemSolution& sol,
                                const std::vector<Realization>& rs,
                                int threads) {
  auto flags = replay_all(s, sol, rs, threads);
  std::set<int> failed;
  double fail_sum = 0.0;
  for (const auto& f : flags) {
    failed.insert(f.failed_evs.begin(), f.failed_evs.end());
    fail_sum += static_cast<double>(f.failed_evs.size());
  }
  TripFailures out;
  out.unique_evs = static_cast<int>(failed.size());
  out.per_replay_avg = rs.empty() ? 0.0 : fail_sum / static_cast<double>(rs.size());
  out.ev_ids.assign(failed.begin(), failed.end());
  return out;
}

Scenario deterministic_copy(const Scenario& s) {
  Scenario d = s;
  for (auto& ev : d.evs) ev.soc0_cov = 0.0;
  for (auto& m : d.history.pv_samples) {
    Eigen::RowVectorXd mean = m.colwise().mean();
    m = mean.replicate(2, 1);
  }
  Eigen::RowVectorXd pmean = d.history.price_samples.colwise().mean();
  d.history.price_samples = pmean.replicate(2, 1);
  return d;
}

AblationResult pv_correlation_ablation(const Scenario& s,
                                       const CoordinatorOptions& copt, int n,
                                       unsigned seed, int threads) {
  CoordinatorOptions with = copt, without = copt;
  with.ignore_pv_correlation = false;
  without.ignore_pv_correlation = true;
  EcosystemSolution sol_with = run_day_ahead(s, with);
  EcosystemSolution sol_without = run_day_ahead(s, without);

  auto rs = sample_realizations(s, n, DrawKind::normal, seed, /*correlated=*/true);

  auto rmse = [&](const EcosystemSolution& sol) {
    double sum = 0.0;
    long cnt = 0;
    for (const auto& r : rs)
      for (int i = 0; i < static_cast<int>(s.stations.size()); ++i) {
        const ChargingStation& st = s.stations[static_cast<size_t>(i)];
        if (st.is_virtual || st.pv_kw <= 0.0) continue;
        for (int t = 0; t < s.horizon.steps; ++t) {
          double short_kw = std::max(0.0, sol.cs.y_pv(t, i) - r.pv(t, i));
          double u = short_kw / st.pv_kw;
          sum += u * u;
          ++cnt;
        }
      }
    return cnt > 0 ? std::sqrt(sum / static_cast<double>(cnt)) : 0.0;
  };

  AblationResult out;
  out.rmse_with = rmse(sol_with);
  out.rmse_without = rmse(sol_without);
  out.failed_with = trip_failure_count(s, sol_with, rs, threads).unique_evs;
  out.failed_without = trip_failure_count(s, sol_without, rs, threads).unique_evs;
  return out;
}

}  // namespace emsched
