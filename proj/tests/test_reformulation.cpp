#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "emsched/ambiguity.hpp"
#include "emsched/reformulation.hpp"
#include "emsched/solver.hpp"

using namespace emsched;

TEST_CASE("cantelli margin closed form") {
  CHECK(single_margin(0.5) == doctest::Approx(1.0));
  CHECK(single_margin(0.05) == doctest::Approx(std::sqrt(19.0)));
  CHECK(single_margin(0.1) == doctest::Approx(3.0));
}

TEST_CASE("scaled rows merge duplicate components and drop zeros") {
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(2, 2);
  UncertainAffine body;
  body.unc.push_back({0, AffineExpr(1.0)});
  body.unc.push_back({0, AffineExpr(2.0)});  // same component, merged to 3
  body.unc.push_back({1, AffineExpr(0.0)});
  auto rows = scaled_rows(body, cov);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].constant == doctest::Approx(3.0));

  CHECK(scaled_rows(body, Eigen::MatrixXd::Zero(2, 2)).empty());
}

namespace {

/// max x s.t. inf P[x + w <= hi] >= 1 - eps, w with the given variance.
double max_mean_single(double var, double hi, double eps) {
  Model m;
  int x = m.add_var("x", -100.0, 100.0);
  DrccSpec spec;
  spec.kind = DrccKind::single_le;
  spec.body.det = AffineExpr::variable(x);
  spec.body.unc.push_back({0, AffineExpr(1.0)});
  spec.hi = AffineExpr(hi);
  spec.eps = eps;
  Eigen::MatrixXd cov(1, 1);
  cov << var;
  reform_single(m, spec, cov);
  m.set_sense(Sense::maximize);
  m.set_objective(AffineExpr::variable(x));
  SolveResult r = solve_continuous(m);
  REQUIRE(r.status == SolveStatus::optimal);
  return r.objective;
}

/// Attainable det window of a double-sided DRCC under the given mode.
std::pair<double, double> double_window(double var, double lo, double hi,
                                        double eps, DoubleMode mode) {
  auto bound = [&](Sense sense) {
    Model m;
    int x = m.add_var("x", -100.0, 100.0);
    DrccSpec spec;
    spec.kind = DrccKind::double_sided;
    spec.body.det = AffineExpr::variable(x);
    spec.body.unc.push_back({0, AffineExpr(1.0)});
    spec.lo = AffineExpr(lo);
    spec.hi = AffineExpr(hi);
    spec.eps = eps;
    Eigen::MatrixXd cov(1, 1);
    cov << var;
    reform_double(m, spec, cov, mode);
    m.set_sense(sense);
    m.set_objective(AffineExpr::variable(x));
    SolveResult r = solve_continuous(m);
    if (r.status != SolveStatus::optimal)
      return std::numeric_limits<double>::quiet_NaN();
    return r.objective;
  };
  return {bound(Sense::minimize), bound(Sense::maximize)};
}

}  // namespace

TEST_CASE("single-sided boundary attains exactly 1 - eps worst case") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> uvar(0.01, 2.0);
  std::uniform_real_distribution<double> ueps(0.02, 0.5);
  for (int rep = 0; rep < 20; ++rep) {
    double var = uvar(rng), eps = ueps(rng), hi = uvar(rng);
    double x = max_mean_single(var, hi, eps);
    CHECK(x == doctest::Approx(hi - single_margin(eps) * std::sqrt(var))
                   .epsilon(1e-6));
    double p = worst_case_prob_single(x, var, hi);
    CHECK(p == doctest::Approx(1.0 - eps).epsilon(1e-5));
  }
}

TEST_CASE("zero covariance degenerates to the plain inequality") {
  CHECK(max_mean_single(0.0, 1.5, 0.05) == doctest::Approx(1.5).epsilon(1e-7));
}

TEST_CASE("single_ge mirrors single_le") {
  Model m;
  int x = m.add_var("x", -100.0, 100.0);
  DrccSpec spec;
  spec.kind = DrccKind::single_ge;
  spec.body.det = AffineExpr::variable(x);
  spec.body.unc.push_back({0, AffineExpr(1.0)});
  spec.lo = AffineExpr(0.2);
  spec.eps = 0.1;
  Eigen::MatrixXd cov(1, 1);
  cov << 0.25;
  reform_single(m, spec, cov);
  m.set_objective(AffineExpr::variable(x));
  SolveResult r = solve_continuous(m);
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(r.objective == doctest::Approx(0.2 + 3.0 * 0.5).epsilon(1e-6));
}

TEST_CASE("exact double-sided window contains the bonferroni window") {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::uniform_real_distribution<double> ueps(0.05, 0.4);
  for (int rep = 0; rep < 15; ++rep) {
    double eps = ueps(rng);
    double half = 1.0 + u(rng);
    double sigma = u(rng) * std::sqrt(eps) * half;  // keep the band feasible
    double var = sigma * sigma;
    auto [elo, ehi] = double_window(var, -half, half, eps, DoubleMode::exact);
    auto [blo, bhi] =
        double_window(var, -half, half, eps, DoubleMode::bonferroni);
    REQUIRE(std::isfinite(elo));
    if (!std::isfinite(blo)) continue;  // bonferroni may be outright infeasible
    CHECK(elo <= blo + 1e-6);
    CHECK(ehi >= bhi - 1e-6);
    // oracle: the exact window endpoints still satisfy the chance constraint
    CHECK(worst_case_prob_double(ehi, var, -half, half) >= 1.0 - eps - 1e-4);
  }
}

TEST_CASE("double-sided with zero covariance is the plain band") {
  auto [lo, hi] = double_window(0.0, -1.0, 2.0, 0.05, DoubleMode::exact);
  CHECK(lo == doctest::Approx(-1.0).epsilon(1e-7));
  CHECK(hi == doctest::Approx(2.0).epsilon(1e-7));
}

TEST_CASE("expectation closure adds the variance constant") {
  Eigen::MatrixXd cov(1, 1);
  cov << 0.36;
  UncertainObjective obj;
  obj.linear = AffineExpr(2.0);
  obj.linear_unc.push_back({0, AffineExpr(5.0)});  // vanishes in expectation
  UncertainQuadTerm q;
  q.weight = 3.0;
  q.expr.det = AffineExpr::variable(0);
  q.expr.unc.push_back({0, AffineExpr(1.0)});
  obj.quads.push_back(q);
  ClosedObjective c = close_expectation(obj, cov);
  // E[3 (x + w)^2] = 3 x^2 + 3 var
  CHECK(c.variance_constant == doctest::Approx(3.0 * 0.36));
  REQUIRE(c.quads.size() == 1);
  CHECK(c.quads[0].weight == doctest::Approx(3.0));
  CHECK(c.linear.constant == doctest::Approx(2.0));
}
