#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <string>

#include "emsched/scenario.hpp"

using namespace emsched;

namespace {

std::string data_dir() {
  const char* d = std::getenv("EMSCHED_DATA");
  REQUIRE(d != nullptr);
  return d;
}

std::string tmp_path(const std::string& name) {
  return "/tmp/emsched_test_" + name;
}

}  // namespace

TEST_CASE("synthetic scenarios validate") {
  Scenario s = generate_synthetic(5, 2, 1, 1);
  CHECK_NOTHROW(validate(s));
  CHECK(s.evs.size() == 5);
  // two real stations plus the virtual one
  CHECK(s.stations.size() == 3);
  CHECK(s.retailers.size() == 1);
  int v = s.virtual_station();
  CHECK(s.stations[static_cast<size_t>(v)].is_virtual);
  CHECK(s.stations[static_cast<size_t>(v)].charger_count == 0);
}

TEST_CASE("generation is seed deterministic") {
  Scenario a = generate_synthetic(4, 2, 1, 9);
  Scenario b = generate_synthetic(4, 2, 1, 9);
  CHECK(a.evs[0].soc0_mean == b.evs[0].soc0_mean);
  CHECK((a.history.price_samples - b.history.price_samples).norm() == 0.0);
  Scenario c = generate_synthetic(4, 2, 1, 10);
  CHECK((a.history.price_samples - c.history.price_samples).norm() != 0.0);
}

TEST_CASE("save and load round trip") {
  Scenario s = generate_synthetic(3, 2, 1, 4);
  std::string path = tmp_path("roundtrip.json");
  save_scenario(s, path);
  Scenario r = load_scenario(path);
  CHECK(r.horizon.steps == s.horizon.steps);
  CHECK(r.evs.size() == s.evs.size());
  CHECK(r.evs[1].soc_target_end == doctest::Approx(s.evs[1].soc_target_end));
  CHECK(r.evs[1].trips.size() == s.evs[1].trips.size());
  CHECK(r.stations.size() == s.stations.size());
  CHECK((r.history.price_samples - s.history.price_samples).norm() <
        1e-12);
  CHECK((r.history.pv_samples[0] - s.history.pv_samples[0]).norm() < 1e-12);
  CHECK(r.network.lines.size() == s.network.lines.size());
  std::remove(path.c_str());
}

TEST_CASE("bundled scenario loads and validates") {
  Scenario s = load_scenario(data_dir() + "/small.scenario.json");
  CHECK(s.evs.size() == 20);
  CHECK(s.stations.size() == 4);  // 3 CSs + VCS
  CHECK(s.retailers.size() == 2);
  CHECK(s.horizon.steps == 24);
}

TEST_CASE("validation names the violated invariant") {
  Scenario s = generate_synthetic(2, 2, 1, 3);

  SUBCASE("bad soc bounds") {
    s.evs[0].soc_min = 0.9;
    s.evs[0].soc_max = 0.2;
    CHECK_THROWS_WITH_AS(validate(s), "scenario: soc bounds",
                         std::runtime_error);
  }
  SUBCASE("missing virtual station") {
    for (auto& cs : s.stations) cs.is_virtual = false;
    CHECK_THROWS_WITH_AS(validate(s), "scenario: no VCS", std::runtime_error);
  }
  SUBCASE("bad risk level") {
    s.risk.eps_ev = 1.5;
    CHECK_THROWS_WITH_AS(validate(s), "scenario: risk eps out of (0,1)",
                         std::runtime_error);
  }
  SUBCASE("short history") {
    s.history.price_samples = s.history.price_samples.topRows(1).eval();
    CHECK_THROWS(validate(s));
  }
}

TEST_CASE("nearest station is the distance argmin over real stations") {
  Scenario s = generate_synthetic(2, 3, 1, 6);
  const Trip& trip = s.evs[0].trips[0];
  int t = trip.window.front();
  int near = nearest_station(trip, t, s.stations);
  const auto& dists = trip.origin_to_cs_km.at(t);
  for (size_t i = 0; i < s.stations.size(); ++i) {
    if (s.stations[i].is_virtual) continue;
    CHECK(dists[static_cast<size_t>(near)] <= dists[i]);
  }
  CHECK_FALSE(s.stations[static_cast<size_t>(near)].is_virtual);
  CHECK_THROWS(nearest_station(trip, -1, s.stations));
}
