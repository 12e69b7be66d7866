#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Sparse>
#include <cmath>
#include <vector>

#include "emsched/socp.hpp"

using namespace emsched::socp;
using Eigen::VectorXd;
using Triplet = Eigen::Triplet<double>;

namespace {

Eigen::SparseMatrix<double> sparse(int rows, int cols,
                                   const std::vector<Triplet>& t) {
  Eigen::SparseMatrix<double> m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

}  // namespace

TEST_CASE("linear program with orthant cone") {
  // min x0 + 2 x1  s.t.  x0 + x1 = 1, x >= 0  ->  x = (1, 0), obj 1
  StandardForm sf;
  sf.c = VectorXd(2);
  sf.c << 1.0, 2.0;
  sf.A = sparse(1, 2, {{0, 0, 1.0}, {0, 1, 1.0}});
  sf.b = VectorXd::Constant(1, 1.0);
  sf.G = sparse(2, 2, {{0, 0, -1.0}, {1, 1, -1.0}});
  sf.h = VectorXd::Zero(2);
  sf.nonneg = 2;

  IpmResult r = solve(sf);
  REQUIRE(r.status == IpmStatus::optimal);
  CHECK(r.pobj == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.x[1] == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("second-order cone with analytic optimum") {
  // min -x0 - x1  s.t.  ||(x0, x1)|| <= 1  ->  x = (1,1)/sqrt(2), obj -sqrt(2)
  StandardForm sf;
  sf.c = VectorXd(2);
  sf.c << -1.0, -1.0;
  sf.A = sparse(0, 2, {});
  sf.b = VectorXd(0);
  // cone row block: h - Gx = (1, x0, x1) in SOC(3)
  sf.G = sparse(3, 2, {{1, 0, -1.0}, {2, 1, -1.0}});
  sf.h = VectorXd::Zero(3);
  sf.h[0] = 1.0;
  sf.nonneg = 0;
  sf.soc_dims = {3};

  IpmResult r = solve(sf);
  REQUIRE(r.status == IpmStatus::optimal);
  CHECK(r.pobj == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-7));
  CHECK(r.x[0] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-5));
  CHECK(r.x[1] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-5));
}

TEST_CASE("mixed orthant and cone blocks") {
  // min x2  s.t.  ||(x0 - 3, x1 - 4)|| <= x2, x0 <= 1, x1 <= 1
  // distance from (1,1) to (3,4) = sqrt(13)
  StandardForm sf;
  sf.c = VectorXd::Zero(3);
  sf.c[2] = 1.0;
  sf.A = sparse(0, 3, {});
  sf.b = VectorXd(0);
  std::vector<Triplet> g = {{0, 0, 1.0},  {1, 1, 1.0},   {2, 2, -1.0},
                            {3, 0, -1.0}, {4, 1, -1.0}};
  sf.G = sparse(5, 3, g);
  sf.h = VectorXd(5);
  sf.h << 1.0, 1.0, 0.0, -3.0, -4.0;
  sf.nonneg = 2;
  sf.soc_dims = {3};

  IpmResult r = solve(sf);
  REQUIRE(r.status == IpmStatus::optimal);
  CHECK(r.pobj == doctest::Approx(std::sqrt(13.0)).epsilon(1e-7));
}

TEST_CASE("primal infeasibility is certified") {
  // x >= 1 and x <= 0
  StandardForm sf;
  sf.c = VectorXd::Constant(1, 1.0);
  sf.A = sparse(0, 1, {});
  sf.b = VectorXd(0);
  sf.G = sparse(2, 1, {{0, 0, -1.0}, {1, 0, 1.0}});
  sf.h = VectorXd(2);
  sf.h << -1.0, 0.0;
  sf.nonneg = 2;

  IpmResult r = solve(sf);
  CHECK(r.status == IpmStatus::primal_infeasible);
}

TEST_CASE("unbounded problem is certified dual infeasible") {
  // min -x  s.t.  x >= 0
  StandardForm sf;
  sf.c = VectorXd::Constant(1, -1.0);
  sf.A = sparse(0, 1, {});
  sf.b = VectorXd(0);
  sf.G = sparse(1, 1, {{0, 0, -1.0}});
  sf.h = VectorXd::Zero(1);
  sf.nonneg = 1;

  IpmResult r = solve(sf);
  CHECK(r.status == IpmStatus::dual_infeasible);
}

TEST_CASE("badly scaled rows survive equilibration") {
  // same LP as above with one row scaled by 1e6 and one by 1e-6
  StandardForm sf;
  sf.c = VectorXd(2);
  sf.c << 1.0, 2.0;
  sf.A = sparse(1, 2, {{0, 0, 1e6}, {0, 1, 1e6}});
  sf.b = VectorXd::Constant(1, 1e6);
  sf.G = sparse(2, 2, {{0, 0, -1e-6}, {1, 1, -1.0}});
  sf.h = VectorXd::Zero(2);
  sf.nonneg = 2;

  IpmResult r = solve(sf);
  REQUIRE(r.status == IpmStatus::optimal);
  CHECK(r.pobj == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("duality gap is reported near zero at the optimum") {
  StandardForm sf;
  sf.c = VectorXd(2);
  sf.c << 1.0, 1.0;
  sf.A = sparse(1, 2, {{0, 0, 1.0}, {0, 1, 2.0}});
  sf.b = VectorXd::Constant(1, 2.0);
  sf.G = sparse(2, 2, {{0, 0, -1.0}, {1, 1, -1.0}});
  sf.h = VectorXd::Zero(2);
  sf.nonneg = 2;

  IpmResult r = solve(sf);
  REQUIRE(r.status == IpmStatus::optimal);
  CHECK(std::abs(r.pobj - r.dobj) < 1e-6);
  CHECK(r.gap < 1e-6);
}
