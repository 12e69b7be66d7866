#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "emsched/solver.hpp"

using namespace emsched;

TEST_CASE("standard form substitutes fixed variables") {
  Model m;
  int x = m.add_var("x", 0.0, 4.0);
  int y = m.add_var("y", 2.0, 2.0);  // fixed
  m.add_range(AffineExpr::variable(x) + AffineExpr::variable(y), 3.0, 3.0,
              "eq");
  m.set_objective(AffineExpr::variable(x));

  std::vector<int> idx;
  double offset = 0.0;
  socp::StandardForm sf = to_standard_form(m, &idx, &offset);
  CHECK(sf.n() == 1);
  CHECK(idx[static_cast<size_t>(y)] == -1);
  // eq becomes x = 1
  CHECK(sf.b[0] == doctest::Approx(1.0));

  SolveResult r = solve_continuous(m);
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(r.objective == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(r.assignment[static_cast<size_t>(y)] == doctest::Approx(2.0));
}

TEST_CASE("quadratic objective becomes an epigraph cone") {
  // min (x - 3)^2 over x in [0, 10] -> x = 3, obj 0
  Model m;
  int x = m.add_var("x", 0.0, 10.0);
  AffineExpr e = AffineExpr::variable(x);
  e -= 3.0;
  m.add_quad_objective(1.0, e);

  SolveResult r = solve_continuous(m);
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(r.objective == doctest::Approx(0.0).epsilon(1e-5));
  CHECK(r.assignment[static_cast<size_t>(x)] == doctest::Approx(3.0).epsilon(1e-4));
}

TEST_CASE("infeasible model reports the blamed family") {
  Model m;
  int x = m.add_var("x", 0.0, 1.0);
  m.add_range(AffineExpr::variable(x), 2.0, 3.0, "impossible");
  SolveResult r = solve_continuous(m);
  REQUIRE(r.status == SolveStatus::infeasible);
  CHECK(r.blame == "impossible");
}

TEST_CASE("maximize sense round trips through the minimizing core") {
  Model m;
  int x = m.add_var("x", 0.0, 5.0);
  m.set_sense(Sense::maximize);
  m.set_objective(AffineExpr::variable(x, 2.0));
  SolveResult r = solve_continuous(m);
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(r.objective == doctest::Approx(10.0).epsilon(1e-6));
}

namespace {

/// Random MISOCP: distance-to-point objective plus binary activation costs
/// and a knapsack row coupling the binaries.
Model random_misocp(std::mt19937& rng, int nbin) {
  std::uniform_real_distribution<double> u(0.2, 2.0);
  Model m;
  std::vector<int> xs, gs;
  AffineExpr knap;
  for (int i = 0; i < nbin; ++i) {
    int x = m.add_var("x" + std::to_string(i), 0.0, 1.5);
    int g = m.add_var("g" + std::to_string(i), 0.0, 1.0, true);
    xs.push_back(x);
    gs.push_back(g);
    // x_i <= 1.5 g_i: pay the fixed cost to use the continuous capacity
    m.add_range(AffineExpr::variable(x) - AffineExpr::variable(g, 1.5), -kInf,
                0.0, "link");
    m.add_objective(AffineExpr::variable(g, u(rng)));
    AffineExpr dev = AffineExpr::variable(x);
    dev -= u(rng);
    m.add_quad_objective(u(rng), dev);
    knap += AffineExpr::variable(g);
  }
  // at least one but not all binaries on
  m.add_range(knap, 1.0, static_cast<double>(nbin - 1), "knapsack");
  return m;
}

double enumerate_best(const Model& m) {
  std::vector<int> bins = m.binary_ids();
  double best = kInf;
  const int k = static_cast<int>(bins.size());
  for (int mask = 0; mask < (1 << k); ++mask) {
    Model fixed = m;
    for (int i = 0; i < k; ++i)
      fixed.fix_var(bins[static_cast<size_t>(i)], (mask >> i) & 1 ? 1.0 : 0.0);
    SolveResult r = solve_continuous(fixed);
    if (r.status == SolveStatus::optimal && r.objective < best)
      best = r.objective;
  }
  return best;
}

}  // namespace

TEST_CASE("branch and bound matches enumeration on small MISOCPs") {
  std::mt19937 rng(7);
  for (int rep = 0; rep < 10; ++rep) {
    Model m = random_misocp(rng, 4);
    SolveResult bb = solve(m);
    REQUIRE(bb.status == SolveStatus::optimal);
    double ref = enumerate_best(m);
    CHECK(bb.objective == doctest::Approx(ref).epsilon(1e-6));
    // the incumbent must itself be feasible with integral binaries
    CHECK(m.feasibility_violation(bb.assignment) < 1e-6);
    for (int b : m.binary_ids()) {
      double v = bb.assignment[static_cast<size_t>(b)];
      CHECK(std::min(v, 1.0 - v) < 1e-9);
    }
  }
}

TEST_CASE("warm hint seeds the incumbent") {
  std::mt19937 rng(11);
  Model m = random_misocp(rng, 5);
  SolveResult cold = solve(m);
  REQUIRE(cold.status == SolveStatus::optimal);

  std::map<int, double> hint;
  for (int b : m.binary_ids())
    hint[b] = cold.assignment[static_cast<size_t>(b)];
  Model warm = m;
  warm.set_hint(hint);
  SolveResult r = solve(warm);
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(r.objective == doctest::Approx(cold.objective).epsilon(1e-6));
  // seeding with the optimum lets pruning close the tree quickly
  CHECK(r.nodes <= cold.nodes);
}

TEST_CASE("integer infeasibility is detected") {
  Model m;
  int g = m.add_var("g", 0.0, 1.0, true);
  int h = m.add_var("h", 0.0, 1.0, true);
  m.add_range(AffineExpr::variable(g) + AffineExpr::variable(h), 0.5, 0.5,
              "halfsum");
  m.set_objective(AffineExpr::variable(g));
  SolveResult r = solve(m);
  CHECK(r.status == SolveStatus::infeasible);
}
