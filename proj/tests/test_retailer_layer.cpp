#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "emsched/ambiguity.hpp"
#include "emsched/retailer_layer.hpp"
#include "emsched/solver.hpp"

using namespace emsched;

namespace {

struct Fixture {
  Scenario s = generate_synthetic(5, 2, 2, 2);
  std::vector<Eigen::MatrixXd> yre;
  Fixture() {
    // fixed station purchases: a mild, feasible demand profile
    int T = s.horizon.steps;
    int S = static_cast<int>(s.stations.size());
    for (size_t r = 0; r < s.retailers.size(); ++r) {
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(T, S);
      for (int i = 0; i < S; ++i)
        if (!s.stations[static_cast<size_t>(i)].is_virtual)
          m.col(i).setConstant(20.0 + 5.0 * static_cast<double>(r));
      yre.push_back(m);
    }
  }
};

}  // namespace

TEST_CASE("reactive factor matches the fixed power factor") {
  CHECK(reactive_factor(0.95) ==
        doctest::Approx(std::tan(std::acos(0.95))));
  CHECK(reactive_factor(1.0) == doctest::Approx(0.0));
}

TEST_CASE("lossless baseline solves the decoupled flow") {
  Fixture f;
  int T = f.s.horizon.steps;
  int N = static_cast<int>(f.s.network.nodes.size());
  Eigen::MatrixXd inj = Eigen::MatrixXd::Zero(T, N);
  inj(0, N - 1) = 50.0;
  inj(0, 0) = -50.0;
  Eigen::MatrixXd dv = lossless_baseline(f.s.network, inj);
  REQUIRE(dv.rows() == T);
  REQUIRE(dv.cols() == N);
  // slack node stays at zero deviation
  for (int n = 0; n < N; ++n)
    if (f.s.network.nodes[static_cast<size_t>(n)].is_slack)
      CHECK(dv(0, n) == doctest::Approx(0.0));
  // susceptance-weighted nodal residual vanishes at non-slack nodes
  for (int n = 0; n < N; ++n) {
    if (f.s.network.nodes[static_cast<size_t>(n)].is_slack) continue;
    double res = inj(0, n);
    for (const auto& ln : f.s.network.lines) {
      if (ln.from == f.s.network.nodes[static_cast<size_t>(n)].id)
        res -= ln.b * (dv(0, n) - dv(0, ln.to));
      if (ln.to == f.s.network.nodes[static_cast<size_t>(n)].id)
        res -= ln.b * (dv(0, n) - dv(0, ln.from));
    }
    CHECK(std::abs(res) < 1e-6);
  }
  // an all-zero injection day stays flat
  CHECK(dv.row(1).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("retailer prices stay inside the regulated band") {
  Fixture f;
  RetailerResult r = solve_retailer_layer(f.s, f.yre, 0.10);
  Moments wm = estimate_moments(f.s.history.price_samples);
  const int T = f.s.horizon.steps;
  for (size_t k = 0; k < f.s.retailers.size(); ++k) {
    const Retailer& re = f.s.retailers[k];
    for (int t = 0; t < T; ++t) {
      double p = r.price(t, static_cast<int>(k));
      // robust band: strictly inside the nominal limits when sigma > 0
      CHECK(p >= re.alpha_lo * wm.mean[t] - 1e-9);
      CHECK(p <= re.alpha_hi * wm.mean[t] + 1e-9);
      // wholesale purchase covers the stations' fixed demand
      double demand = f.yre[k].row(t).sum();
      CHECK(r.p_wm(t, static_cast<int>(k)) >= demand - 1e-5);
    }
  }
  CHECK(std::isfinite(r.objective));
}

TEST_CASE("network limits are honored") {
  Fixture f;
  RetailerResult r = solve_retailer_layer(f.s, f.yre, 0.10);
  const int T = f.s.horizon.steps;
  for (int t = 0; t < T; ++t) {
    for (size_t n = 0; n < f.s.network.nodes.size(); ++n) {
      const auto& nd = f.s.network.nodes[n];
      CHECK(r.flow.dv(t, static_cast<int>(n)) >= nd.dv_lo - 1e-6);
      CHECK(r.flow.dv(t, static_cast<int>(n)) <= nd.dv_hi + 1e-6);
    }
    for (size_t l = 0; l < f.s.network.lines.size(); ++l) {
      const auto& ln = f.s.network.lines[l];
      CHECK(r.flow.p_flow(t, static_cast<int>(l)) >= ln.p_lo - 1e-4);
      CHECK(r.flow.p_flow(t, static_cast<int>(l)) <= ln.p_hi + 1e-4);
    }
  }
}

TEST_CASE("tighter price confidence shrinks the usable band") {
  Fixture f;
  // the paper's observation: retailers cannot support very high confidence;
  // the closed-form presolve rejects eps below the attainable level
  Moments wm = estimate_moments(f.s.history.price_samples);
  double worst = 0.0;
  for (size_t k = 0; k < f.s.retailers.size(); ++k) {
    const Retailer& re = f.s.retailers[k];
    for (int t = 0; t < f.s.horizon.steps; ++t) {
      double h = 0.5 * (re.alpha_hi - re.alpha_lo) * wm.mean[t];
      double sigma = std::sqrt(wm.cov(t, t));
      // eps must satisfy sigma <= sqrt(eps) * h
      worst = std::max(worst, sigma * sigma / (h * h));
    }
  }
  double eps_bad = worst * 0.5;  // below the attainable risk level
  if (eps_bad > 1e-6) {
    CHECK_THROWS_AS(solve_retailer_layer(f.s, f.yre, eps_bad),
                    InfeasibleError);
    try {
      solve_retailer_layer(f.s, f.yre, eps_bad);
    } catch (const InfeasibleError& e) {
      CHECK(e.blame() == "re:price");
    }
  }
  // a generous risk budget is feasible
  double eps_ok = std::max(0.1, worst * 4.0);
  if (eps_ok < 1.0) CHECK_NOTHROW(solve_retailer_layer(f.s, f.yre, eps_ok));
}
