#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "emsched/validation.hpp"

using namespace emsched;

namespace {

const Scenario& small_scenario() {
  static Scenario s = generate_synthetic(5, 2, 1, 2);
  return s;
}

const EcosystemSolution& solved() {
  static EcosystemSolution sol = [] {
    CoordinatorOptions opt;
    opt.eps_ev = 0.1;
    opt.eps_cs = 0.1;
    opt.eps_re = 0.1;
    return run_day_ahead(small_scenario(), opt);
  }();
  return sol;
}

}  // namespace

TEST_CASE("wilson interval reproduces textbook values") {
  WilsonInterval w = wilson95(90, 100);
  CHECK(w.lo == doctest::Approx(0.8238).epsilon(1e-3));
  CHECK(w.hi == doctest::Approx(0.9442).epsilon(1e-3));
  WilsonInterval all = wilson95(10, 10);
  CHECK(all.hi == doctest::Approx(1.0));
  CHECK(all.lo > 0.6);
  WilsonInterval none = wilson95(0, 10);
  CHECK(none.lo == doctest::Approx(0.0));
}

TEST_CASE("sampling is seed deterministic and moment matched") {
  const Scenario& s = small_scenario();
  auto a = sample_realizations(s, 400, DrawKind::normal, 7, true);
  auto b = sample_realizations(s, 400, DrawKind::normal, 7, true);
  REQUIRE(a.size() == 400);
  CHECK((a[5].pv - b[5].pv).norm() == 0.0);
  CHECK((a[5].soc0 - b[5].soc0).norm() == 0.0);

  Realization mean = mean_realization(a);
  Realization nominal = nominal_realization(s);
  // sample means approach the forecast means (3 sigma / sqrt(n) scale)
  for (int e = 0; e < static_cast<int>(s.evs.size()); ++e) {
    double se = s.evs[static_cast<size_t>(e)].soc0_cov / std::sqrt(400.0);
    CHECK(std::abs(mean.soc0[e] - nominal.soc0[e]) < 4.0 * se + 1e-12);
  }
  CHECK((mean.wholesale - nominal.wholesale).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("two-point draws place the rare atom on the shortfall side") {
  const Scenario& s = small_scenario();
  double eps = 0.1;
  auto rs = sample_realizations(s, 2000, DrawKind::two_point, 3, false, eps);
  Realization nominal = nominal_realization(s);
  int low = 0;
  for (const auto& r : rs)
    if (r.soc0[0] < nominal.soc0[0]) ++low;
  // the shortfall atom carries probability eps
  double frac = static_cast<double>(low) / 2000.0;
  CHECK(frac == doctest::Approx(eps).epsilon(0.35));
  // atoms match the single-sided worst case magnitudes
  double sd = s.evs[0].soc0_cov;
  double lo_atom = nominal.soc0[0] - sd * std::sqrt((1.0 - eps) / eps);
  for (const auto& r : rs)
    if (r.soc0[0] < nominal.soc0[0])
      CHECK(r.soc0[0] == doctest::Approx(lo_atom).epsilon(1e-9));
}

TEST_CASE("nominal replay of a solved day has no violations") {
  const Scenario& s = small_scenario();
  ReplayFlags f = replay(s, solved(), nominal_realization(s));
  CHECK_FALSE(f.ev);
  CHECK_FALSE(f.cs);
  CHECK_FALSE(f.re);
  CHECK(f.violating_evs.empty());
  CHECK(f.failed_evs.empty());
}

TEST_CASE("parallel replay equals the serial reference") {
  const Scenario& s = small_scenario();
  auto rs = sample_realizations(s, 200, DrawKind::normal, 11, true);
  auto serial = replay_all_serial(s, solved(), rs);
  auto par = replay_all(s, solved(), rs, 4);
  REQUIRE(serial.size() == par.size());
  for (size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].ev == par[i].ev);
    CHECK(serial[i].cs == par[i].cs);
    CHECK(serial[i].re == par[i].re);
    CHECK(serial[i].violating_evs == par[i].violating_evs);
    CHECK(serial[i].violated == par[i].violated);
  }
}

TEST_CASE("summary aggregates per-replay layer flags") {
  const Scenario& s = small_scenario();
  auto rs = sample_realizations(s, 300, DrawKind::normal, 13, true);
  auto flags = replay_all_serial(s, solved(), rs);
  ValidationReport rep = summarize(s, flags);
  CHECK(rep.ev.n == 300);
  int ev_viol = 0;
  for (const auto& f : flags)
    if (f.ev) ++ev_viol;
  CHECK(rep.ev.violating_replays == ev_viol);
  CHECK(rep.ev.nu_ac == doctest::Approx(1.0 - ev_viol / 300.0));
  CHECK(rep.ev.wilson.lo <= rep.ev.nu_ac);
  CHECK(rep.ev.wilson.hi >= rep.ev.nu_ac);
  // solved at nu = 0.9: the empirical confidence should clear it
  CHECK(rep.ev.nu_ac >= 0.9 - 0.05);
  CHECK(rep.cs.nu_ac >= 0.9 - 0.05);
  CHECK(rep.re.nu_ac >= 0.9 - 0.05);
}

TEST_CASE("deterministic copy collapses all uncertainty") {
  const Scenario& s = small_scenario();
  Scenario d = deterministic_copy(s);
  for (const auto& ev : d.evs) CHECK(ev.soc0_cov == 0.0);
  // flat histories: every sample day equals the column mean
  for (const auto& m : d.history.pv_samples)
    CHECK((m.row(0) - m.row(1)).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK((d.history.price_samples.row(0) - d.history.price_samples.row(1))
            .cwiseAbs()
            .maxCoeff() == doctest::Approx(0.0));
  // means preserved
  CHECK((d.history.price_samples.colwise().mean() -
         s.history.price_samples.colwise().mean())
            .cwiseAbs()
            .maxCoeff() < 1e-12);
  CHECK_NOTHROW(validate(d));
}

TEST_CASE("draw kind strings round trip") {
  for (DrawKind k : {DrawKind::normal, DrawKind::uniform, DrawKind::two_point})
    CHECK(draw_kind_from_string(to_string(k)) == k);
  CHECK_THROWS(draw_kind_from_string("gaussianish"));
}
