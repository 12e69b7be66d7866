#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "emsched/cs_layer.hpp"
#include "emsched/ev_layer.hpp"
#include "emsched/solver.hpp"

using namespace emsched;

namespace {

struct Fixture {
  Scenario s = generate_synthetic(5, 2, 1, 2);
  EvPrices prices;
  Fixture() {
    int T = s.horizon.steps, R = static_cast<int>(s.retailers.size());
    Eigen::VectorXd wm = s.history.price_samples.colwise().mean();
    Eigen::MatrixXd retail =
        (wm.head(T) * s.history.wholesale_markup).replicate(1, R);
    prices = derive_g2v_prices(retail, s, 1);
  }
};

}  // namespace

TEST_CASE("ev layer produces a consistent schedule") {
  Fixture f;
  EvBuildOptions opt;
  opt.eps_ev = 0.1;
  EvSchedule sol = solve_ev_layer(f.s, f.prices, opt, EvStrategy::sequential);

  const int T = f.s.horizon.steps;
  const int S = static_cast<int>(f.s.stations.size());
  const int E = static_cast<int>(f.s.evs.size());
  REQUIRE(static_cast<int>(sol.xplus.size()) == E);
  REQUIRE(sol.soc_mean.rows() == E);
  REQUIRE(sol.soc_mean.cols() == T);
  CHECK(sol.objective ==
        doctest::Approx(std::accumulate(sol.per_ev_objective.begin(),
                                        sol.per_ev_objective.end(), 0.0)));

  int vs = f.s.virtual_station();
  for (int e = 0; e < E; ++e) {
    const Ev& ev = f.s.evs[static_cast<size_t>(e)];
    for (int t = 0; t < T; ++t) {
      // mean SOC honors the physical band (the DRCC band is tighter)
      CHECK(sol.soc_mean(e, t) >= ev.soc_min - 1e-6);
      CHECK(sol.soc_mean(e, t) <= ev.soc_max + 1e-6);
      double sel = 0.0;
      for (int i = 0; i < S; ++i) {
        double g = sol.gamma[static_cast<size_t>(e)](t, i);
        double p = sol.pi[static_cast<size_t>(e)](t, i);
        CHECK(std::min(g, 1.0 - g) < 1e-6);  // integral
        CHECK(std::min(p, 1.0 - p) < 1e-6);
        sel += g + p;
        // power only flows at a selected real station, within charger limits
        double xp = sol.xplus[static_cast<size_t>(e)](t, i);
        double xm = sol.xminus[static_cast<size_t>(e)](t, i);
        CHECK(xp >= -1e-9);
        CHECK(xm >= -1e-9);
        double cap = f.s.stations[static_cast<size_t>(i)].charger_kw;
        if (i == vs) cap = 0.0;
        CHECK(xp <= cap * (g + p) + 1e-6);
        CHECK(xm <= cap * (g + p) + 1e-6);
      }
      CHECK(sel <= 1.0 + 1e-6);  // at most one station per hour
    }
    // terminal mean SOC reaches the target band
    CHECK(sol.soc_mean(e, T - 1) >= ev.soc_target_end - 1e-6);
  }
}

TEST_CASE("joint strategy respects charger capacity") {
  Fixture f;
  EvBuildOptions opt;
  opt.eps_ev = 0.1;
  EvSchedule sol = solve_ev_layer(f.s, f.prices, opt, EvStrategy::joint);

  const int T = f.s.horizon.steps;
  const int S = static_cast<int>(f.s.stations.size());
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < S; ++i) {
      if (f.s.stations[static_cast<size_t>(i)].is_virtual) continue;
      double used = 0.0;
      for (const auto& g : sol.gamma) used += g(t, i);
      for (const auto& p : sol.pi) used += p(t, i);
      CHECK(used <=
            f.s.stations[static_cast<size_t>(i)].charger_count + 1e-6);
    }
}

TEST_CASE("cost is non-decreasing in the confidence level") {
  Fixture f;
  double prev = -1e18;
  for (double eps : {0.5, 0.2, 0.1, 0.05}) {
    EvBuildOptions opt;
    opt.eps_ev = eps;
    EvSchedule sol =
        solve_ev_layer(f.s, f.prices, opt, EvStrategy::sequential);
    CHECK(sol.objective >= prev - 1e-6);
    prev = sol.objective;
  }
}

TEST_CASE("warm start reproduces the cold objective") {
  Fixture f;
  EvBuildOptions opt;
  opt.eps_ev = 0.1;
  EvSchedule cold = solve_ev_layer(f.s, f.prices, opt, EvStrategy::sequential);
  EvSchedule warm =
      solve_ev_layer(f.s, f.prices, opt, EvStrategy::sequential, &cold);
  CHECK(warm.objective == doctest::Approx(cold.objective).epsilon(1e-6));
}

TEST_CASE("travel soc accumulates selected round trips") {
  Fixture f;
  const Ev& ev = f.s.evs[0];
  const int T = f.s.horizon.steps;
  const int S = static_cast<int>(f.s.stations.size());
  Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(T, S);
  Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(T, S);

  // no selection: mandatory trips contribute their direct distance
  const Trip* mand = nullptr;
  for (const auto& tr : ev.trips)
    if (tr.kind == TripKind::mandatory) mand = &tr;
  REQUIRE(mand != nullptr);
  int t = mand->window.front();
  double direct = mand->direct_km.at(t) * ev.kwh_per_km /
                  ev.battery_capacity_kwh;
  CHECK(ev_travel_soc(f.s, 0, t, gamma, pi) >=
        direct - 1e-12);

  // selecting a station swaps in the via-station distance
  int near = nearest_station(*mand, t, f.s.stations);
  gamma(t, near) = 1.0;
  double via = (mand->origin_to_cs_km.at(t)[static_cast<size_t>(near)] +
                mand->cs_to_dest_km.at(t)[static_cast<size_t>(near)]) *
               ev.kwh_per_km / ev.battery_capacity_kwh;
  double got = ev_travel_soc(f.s, 0, t, gamma, pi) -
               ev_travel_soc(f.s, 0, t - 1, gamma, pi);
  CHECK(got == doctest::Approx(via));
}

TEST_CASE("infeasible ev model raises with the blamed family") {
  Fixture f;
  f.s.evs[0].soc_target_end = f.s.evs[0].soc_max;  // no room for uncertainty
  EvBuildOptions opt;
  opt.eps_ev = 0.05;
  CHECK_THROWS_AS(solve_ev_layer(f.s, f.prices, opt, EvStrategy::sequential),
                  InfeasibleError);
}
