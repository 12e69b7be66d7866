#include "emsched/coordinator.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "emsched/solver.hpp"

namespace emsched {
namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

void note(std::vector<IterationRecord>& trace, IterationRecord rec) {
  if (std::getenv("EMSCHED_DEBUG"))
    std::fprintf(stderr, "[coordinator] it=%d %-8s obj=%.6f delta=%.3e %.2fs\n",
                 rec.iteration, rec.layer.c_str(), rec.objective, rec.delta,
                 rec.seconds);
  trace.push_back(std::move(rec));
}

[[noreturn]] void rethrow_with_position(const InfeasibleError& e, int outer,
                                        int inner) {
  std::string where = e.layer() + " [outer " + std::to_string(outer);
  if (inner > 0) where += ", inner " + std::to_string(inner);
  where += "]";
  throw InfeasibleError(where, e.blame());
}

}  // namespace

Eigen::MatrixXd price_update(const Eigen::MatrixXd& previous,
                             const Eigen::MatrixXd& best_response,
                             double damping) {
  return damping * best_response + (1.0 - damping) * previous;
}

EcosystemSolution run_day_ahead(const Scenario& s,
                                const CoordinatorOptions& opt) {
  const int T = s.horizon.steps;
  const int R = static_cast<int>(s.retailers.size());
  const double tol = s.convergence_tol;

  // Iteration 1 offers the historical mean wholesale price with the usual
  // retail markup; every later iteration offers the damped best response.
  Eigen::VectorXd wm_mean = s.history.price_samples.colwise().mean();
  Eigen::MatrixXd retail =
      (wm_mean.head(T) * s.history.wholesale_markup).replicate(1, R);

  EvBuildOptions ev_opt;
  ev_opt.eps_ev = opt.eps_ev;
  ev_opt.mode = opt.mode;
  // Hysteresis: keep the warm-started schedule unless a clearly better one
  // exists, so near-tied binary choices stop flipping as prices settle.
  ev_opt.mip_gap = 1e-4;
  CsBuildOptions cs_opt;
  cs_opt.eps_cs = opt.eps_cs;
  cs_opt.mode = opt.mode;
  cs_opt.ignore_pv_correlation = opt.ignore_pv_correlation;

  EcosystemSolution sol;
  sol.retail_prices = retail;

  bool have_ev = false;
  double prev_re = 0.0;
  bool have_re = false;
  bool inner_ok = false;

  for (int outer = 1; outer <= s.max_iters.outer; ++outer) {
    sol.outer_iterations = outer;
    EvPrices prices = derive_g2v_prices(retail, s, outer);

    double prev_cs = 0.0;
    bool have_cs = false;
    inner_ok = false;
    for (int inner = 1; inner <= s.max_iters.inner; ++inner) {
      auto t0 = std::chrono::steady_clock::now();
      EvSchedule ev;
      try {
        ev = solve_ev_layer(s, prices, ev_opt, opt.strategy,
                            have_ev ? &sol.ev : nullptr);
      } catch (const InfeasibleError& e) {
        rethrow_with_position(e, outer, inner);
      }
      note(sol.trace, {outer, "ev", ev.objective,
                           have_ev ? std::abs(ev.objective - sol.ev.objective)
                                   : 0.0,
                           seconds_since(t0)});
      sol.ev = std::move(ev);
      ev_opt.prev_cum = sol.ev.cum;
      have_ev = true;

      t0 = std::chrono::steady_clock::now();
      CsDispatch cs;
      try {
        cs = solve_cs_layer(s, sol.ev, prices, retail, cs_opt);
      } catch (const InfeasibleError& e) {
        rethrow_with_position(e, outer, inner);
      }
      double delta = have_cs ? std::abs(cs.objective - prev_cs) : 0.0;
      note(sol.trace, {outer, "cs", cs.objective, delta,
                           seconds_since(t0)});
      prev_cs = cs.objective;
      sol.cs = std::move(cs);
      sol.ev_prices = prices;
      if (have_cs && delta <= tol) {
        inner_ok = true;
        break;
      }
      have_cs = true;
    }

    auto t0 = std::chrono::steady_clock::now();
    RetailerResult re;
    try {
      re = solve_retailer_layer(s, sol.cs.y_re, opt.eps_re, opt.mode);
    } catch (const InfeasibleError& e) {
      rethrow_with_position(e, outer, 0);
    }
    double delta = have_re ? std::abs(re.objective - prev_re) : 0.0;
    note(sol.trace, {outer, "retailer", re.objective, delta,
                         seconds_since(t0)});
    prev_re = re.objective;
    sol.retailer = std::move(re);
    sol.retail_prices = retail;
    if (have_re && delta <= tol) {
      sol.converged = inner_ok;
      if (sol.converged) return sol;
    }
    have_re = true;
    retail = price_update(retail, sol.retailer.price, opt.damping);
  }
  sol.converged = false;
  return sol;
}

}  // namespace emsched
