#include "emsched/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "../vendor/json.hpp"

namespace emsched {

using nlohmann::json;
namespace fs = std::filesystem;

const char* to_string(TripKind k) {
  switch (k) {
    case TripKind::mandatory: return "mandatory";
    case TripKind::optional1: return "optional1";
    case TripKind::optional2: return "optional2";
  }
  return "?";
}

TripKind trip_kind_from_string(const std::string& s) {
  if (s == "mandatory") return TripKind::mandatory;
  if (s == "optional1") return TripKind::optional1;
  if (s == "optional2") return TripKind::optional2;
  throw std::runtime_error("unknown trip kind: " + s);
}

int Scenario::virtual_station() const {
  for (size_t i = 0; i < stations.size(); ++i)
    if (stations[i].is_virtual) return static_cast<int>(i);
  return -1;
}

int nearest_station(const Trip& trip, int t,
                    const std::vector<ChargingStation>& stations) {
  auto it = trip.origin_to_cs_km.find(t);
  if (it == trip.origin_to_cs_km.end())
    throw std::runtime_error("nearest_station: hour outside trip window");
  int best = -1;
  double bestd = 0.0;
  for (size_t i = 0; i < stations.size(); ++i) {
    if (stations[i].is_virtual) continue;
    double d = it->second[i];
    if (best < 0 || d < bestd) {
      best = static_cast<int>(i);
      bestd = d;
    }
  }
  return best;
}

// ---------------------------------------------------------------- validation

namespace {

void fail(const std::string& what) { throw std::runtime_error("scenario: " + what); }

void check_matrix(const Eigen::MatrixXd& m, int hours, const std::string& what,
                  bool nonneg) {
  if (m.rows() < 2) fail(what + ": fewer than 2 sample days");
  if (m.cols() != hours) fail(what + ": column count != horizon");
  if (nonneg && m.minCoeff() < 0.0) fail(what + ": negative sample");
}

}  // namespace

void validate(const Scenario& s) {
  if (s.horizon.steps < 1) fail("horizon steps");
  if (s.horizon.dt_hours <= 0) fail("horizon dt");
  const int T = s.horizon.steps;
  const size_t S = s.stations.size();

  int vcs = 0;
  for (const auto& cs : s.stations)
    if (cs.is_virtual) {
      ++vcs;
      if (cs.charger_count != 0 || cs.pv_kw != 0 || cs.ess_kw != 0 ||
          cs.cgu_kw != 0 || cs.station_kw_cap != 0)
        fail("VCS must have zero capacities");
      if (cs.node >= 0) fail("VCS must have no network node");
    }
  if (vcs == 0) fail("no VCS");
  if (vcs > 1) fail("multiple VCS");

  for (const auto& e : s.evs) {
    if (e.battery_capacity_kwh <= 0) fail("battery capacity");
    if (e.eta_charge <= 0 || e.eta_charge > 1 || e.eta_discharge <= 0 ||
        e.eta_discharge > 1)
      fail("efficiency out of (0,1]");
    if (e.soc_min > e.soc0_mean || e.soc0_mean > e.soc_max ||
        e.soc_min > e.soc_target_end || e.soc_target_end > e.soc_max)
      fail("soc bounds");
    if (e.soc0_cov < 0) fail("soc0 cov");
    std::set<int> mand;
    int mand_trips = 0;
    for (const auto& tr : e.trips) {
      if (tr.window.empty()) fail("empty trip window");
      if (tr.kind == TripKind::mandatory) {
        ++mand_trips;
        for (int t : tr.window) {
          if (t < 0 || t >= T) fail("trip hour outside horizon");
          if (!mand.insert(t).second) fail("mandatory trip windows overlap");
        }
      }
      for (int t : tr.window) {
        auto io = tr.origin_to_cs_km.find(t);
        auto id = tr.cs_to_dest_km.find(t);
        if (io == tr.origin_to_cs_km.end() || id == tr.cs_to_dest_km.end())
          fail("missing trip distances");
        if (io->second.size() != S || id->second.size() != S)
          fail("trip distance vector size");
        double mn = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < S; ++i) {
          if (io->second[i] < 0 || id->second[i] < 0) fail("negative distance");
          if (!s.stations[i].is_virtual) mn = std::min(mn, io->second[i]);
        }
        if (std::abs(tr.nearest_cs_km.at(t) - mn) > 1e-9)
          fail("nearest_cs_km mismatch");
        size_t v = static_cast<size_t>(s.virtual_station());
        double od = io->second[v] + id->second[v];
        if (tr.kind == TripKind::mandatory) {
          if (std::abs(od - tr.direct_km.at(t)) > 1e-9)
            fail("VCS distance must equal the direct route on mandatory trips");
        } else if (od > 1e-9) {
          fail("VCS distance must be zero on optional trips");
        }
      }
    }
    if (mand_trips != 2) fail("EV must have exactly two mandatory trips");
  }

  for (const auto& r : s.retailers)
    if (!(0 < r.alpha_lo && r.alpha_lo <= r.alpha_hi)) fail("retailer alpha");

  // network: one slack, connected
  int slack = 0;
  for (const auto& n : s.network.nodes)
    if (n.is_slack) ++slack;
  if (slack != 1) fail("network needs exactly one slack node");
  if (!s.network.nodes.empty()) {
    std::map<int, std::vector<int>> adj;
    for (const auto& l : s.network.lines) {
      adj[l.from].push_back(l.to);
      adj[l.to].push_back(l.from);
    }
    std::set<int> seen{s.network.nodes.front().id};
    std::vector<int> stack{s.network.nodes.front().id};
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int v : adj[u])
        if (seen.insert(v).second) stack.push_back(v);
    }
    for (const auto& n : s.network.nodes)
      if (!seen.count(n.id)) fail("network not connected");
  }

  if (s.history.pv_samples.size() != S) fail("pv_samples count != stations");
  for (size_t i = 0; i < S; ++i)
    check_matrix(s.history.pv_samples[i], T, "pv_samples", true);
  check_matrix(s.history.price_samples, T, "price_samples", false);
  if (static_cast<int>(s.history.gas_price.size()) != T) fail("gas_price length");

  for (double e : {s.risk.eps_ev, s.risk.eps_cs, s.risk.eps_re})
    if (e <= 0 || e >= 1) fail("risk eps out of (0,1)");
  if (s.convergence_tol <= 0) fail("convergence tol");
}

// ------------------------------------------------------------ serialization

namespace {

json mat_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd csv_to_mat(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open csv: " + p.string());
  std::string line;
  std::getline(in, line);  // header row, required
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("empty csv: " + p.string());
  Eigen::MatrixXd m(rows.size(), rows[0].size());
  for (size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size())
      throw std::runtime_error("ragged csv: " + p.string());
    for (size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

Eigen::MatrixXd json_to_mat(const json& j, const fs::path& base) {
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s.rfind("csv:", 0) != 0)
      throw std::runtime_error("sample series must be inline or 'csv:path'");
    return csv_to_mat(base / s.substr(4));
  }
  Eigen::MatrixXd m(j.size(), j.empty() ? 0 : j[0].size());
  for (size_t r = 0; r < j.size(); ++r)
    for (size_t c = 0; c < j[r].size(); ++c) m(r, c) = j[r][c].get<double>();
  return m;
}

template <typename T>
json kmap_to_json(const std::map<int, T>& m) {
  json o = json::object();
  for (const auto& [k, v] : m) o[std::to_string(k)] = v;
  return o;
}

json trip_to_json(const Trip& t) {
  json j;
  j["kind"] = to_string(t.kind);
  j["window"] = t.window;
  j["origin_to_cs_km"] = kmap_to_json(t.origin_to_cs_km);
  j["cs_to_dest_km"] = kmap_to_json(t.cs_to_dest_km);
  j["direct_km"] = kmap_to_json(t.direct_km);
  j["nearest_cs_km"] = kmap_to_json(t.nearest_cs_km);
  j["nearest_roundtrip_km"] = kmap_to_json(t.nearest_roundtrip_km);
  return j;
}

Trip trip_from_json(const json& j) {
  Trip t;
  t.kind = trip_kind_from_string(j.at("kind").get<std::string>());
  t.window = j.at("window").get<std::vector<int>>();
  for (auto& [k, v] : j.at("origin_to_cs_km").items())
    t.origin_to_cs_km[std::stoi(k)] = v.get<std::vector<double>>();
  for (auto& [k, v] : j.at("cs_to_dest_km").items())
    t.cs_to_dest_km[std::stoi(k)] = v.get<std::vector<double>>();
  for (auto& [k, v] : j.at("direct_km").items())
    t.direct_km[std::stoi(k)] = v.get<double>();
  for (auto& [k, v] : j.at("nearest_cs_km").items())
    t.nearest_cs_km[std::stoi(k)] = v.get<double>();
  for (auto& [k, v] : j.at("nearest_roundtrip_km").items())
    t.nearest_roundtrip_km[std::stoi(k)] = v.get<double>();
  return t;
}

}  // namespace

void save_scenario(const Scenario& s, const std::string& path) {
  json j;
  j["horizon"] = {{"steps", s.horizon.steps}, {"dt_hours", s.horizon.dt_hours}};
  json evs = json::array();
  for (const auto& e : s.evs) {
    json je;
    je["id"] = e.id;
    je["battery_capacity_kwh"] = e.battery_capacity_kwh;
    je["eta_charge"] = e.eta_charge;
    je["eta_discharge"] = e.eta_discharge;
    je["soc_min"] = e.soc_min;
    je["soc_max"] = e.soc_max;
    je["soc_target_end"] = e.soc_target_end;
    je["soc0_mean"] = e.soc0_mean;
    je["soc0_cov"] = e.soc0_cov;
    je["kwh_per_km"] = e.kwh_per_km;
    je["pref_cost_gain_usd"] = e.pref_cost_gain_usd;
    je["pref_revenue_gain_usd"] = e.pref_revenue_gain_usd;
    je["pref_extra_km"] = e.pref_extra_km;
    je["degradation"] = {{"a", e.degradation.a}, {"b", e.degradation.b},
                         {"c", e.degradation.c}, {"d", e.degradation.d},
                         {"f", e.degradation.f}};
    json trips = json::array();
    for (const auto& t : e.trips) trips.push_back(trip_to_json(t));
    je["trips"] = std::move(trips);
    evs.push_back(std::move(je));
  }
  j["evs"] = std::move(evs);

  json css = json::array();
  for (const auto& c : s.stations) {
    json jc;
    jc["id"] = c.id;
    jc["node"] = c.node;
    jc["charger_kw"] = c.charger_kw;
    jc["charger_count"] = c.charger_count;
    jc["charger_eta"] = c.charger_eta;
    jc["cgu_kw"] = c.cgu_kw;
    jc["cgu_eta"] = c.cgu_eta;
    jc["pv_kw"] = c.pv_kw;
    jc["pv_ramp_min"] = c.pv_ramp_min;
    jc["pv_ramp_max"] = c.pv_ramp_max;
    jc["ess_kw"] = c.ess_kw;
    jc["ess_soc_min"] = c.ess_soc_min;
    jc["ess_soc_max"] = c.ess_soc_max;
    jc["station_kw_cap"] = c.station_kw_cap;
    jc["margin_lo"] = c.margin_lo;
    jc["margin_hi"] = c.margin_hi;
    jc["v2g_price_lo"] = c.v2g_price_lo;
    jc["v2g_price_hi"] = c.v2g_price_hi;
    jc["agg_markup"] = c.agg_markup;
    jc["is_virtual"] = c.is_virtual;
    css.push_back(std::move(jc));
  }
  j["stations"] = std::move(css);

  json rs = json::array();
  for (const auto& r : s.retailers)
    rs.push_back({{"id", r.id}, {"node", r.node}, {"alpha_lo", r.alpha_lo},
                  {"alpha_hi", r.alpha_hi}});
  j["retailers"] = std::move(rs);

  json nodes = json::array(), lines = json::array();
  for (const auto& n : s.network.nodes)
    nodes.push_back({{"id", n.id}, {"dv_lo", n.dv_lo}, {"dv_hi", n.dv_hi},
                     {"is_slack", n.is_slack}});
  for (const auto& l : s.network.lines)
    lines.push_back({{"from", l.from}, {"to", l.to}, {"g", l.g}, {"b", l.b},
                     {"p_lo", l.p_lo}, {"p_hi", l.p_hi}, {"q_lo", l.q_lo},
                     {"q_hi", l.q_hi}});
  j["network"] = {{"nodes", std::move(nodes)}, {"lines", std::move(lines)}};

  json pv = json::array();
  for (const auto& m : s.history.pv_samples) pv.push_back(mat_to_json(m));
  j["history"] = {{"pv_samples", std::move(pv)},
                  {"price_samples", mat_to_json(s.history.price_samples)},
                  {"gas_price", s.history.gas_price},
                  {"heat_value", s.history.heat_value},
                  {"wholesale_markup", s.history.wholesale_markup}};

  j["risk"] = {{"eps_ev", s.risk.eps_ev}, {"eps_cs", s.risk.eps_cs},
               {"eps_re", s.risk.eps_re}, {"balance_slack", s.balance_slack}};
  j["loop"] = {{"inner", s.max_iters.inner}, {"outer", s.max_iters.outer},
               {"convergence_tol", s.convergence_tol}};

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(1) << "\n";
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("parse error in " + path + ": " + e.what());
  }
  fs::path base = fs::path(path).parent_path();

  Scenario s;
  s.horizon.steps = j.at("horizon").at("steps").get<int>();
  s.horizon.dt_hours = j.at("horizon").at("dt_hours").get<double>();

  for (const auto& je : j.at("evs")) {
    Ev e;
    e.id = je.at("id").get<int>();
    e.battery_capacity_kwh = je.at("battery_capacity_kwh").get<double>();
    e.eta_charge = je.at("eta_charge").get<double>();
    e.eta_discharge = je.at("eta_discharge").get<double>();
    e.soc_min = je.at("soc_min").get<double>();
    e.soc_max = je.at("soc_max").get<double>();
    e.soc_target_end = je.at("soc_target_end").get<double>();
    e.soc0_mean = je.at("soc0_mean").get<double>();
    e.soc0_cov = je.at("soc0_cov").get<double>();
    e.kwh_per_km = je.at("kwh_per_km").get<double>();
    e.pref_cost_gain_usd = je.at("pref_cost_gain_usd").get<double>();
    e.pref_revenue_gain_usd = je.at("pref_revenue_gain_usd").get<double>();
    e.pref_extra_km = je.at("pref_extra_km").get<double>();
    const auto& d = je.at("degradation");
    e.degradation = {d.at("a").get<double>(), d.at("b").get<double>(),
                     d.at("c").get<double>(), d.at("d").get<double>(),
                     d.at("f").get<double>()};
    for (const auto& jt : je.at("trips")) e.trips.push_back(trip_from_json(jt));
    s.evs.push_back(std::move(e));
  }

  for (const auto& jc : j.at("stations")) {
    ChargingStation c;
    c.id = jc.at("id").get<int>();
    c.node = jc.at("node").get<int>();
    c.charger_kw = jc.at("charger_kw").get<double>();
    c.charger_count = jc.at("charger_count").get<int>();
    c.charger_eta = jc.at("charger_eta").get<double>();
    c.cgu_kw = jc.at("cgu_kw").get<double>();
    c.cgu_eta = jc.at("cgu_eta").get<double>();
    c.pv_kw = jc.at("pv_kw").get<double>();
    c.pv_ramp_min = jc.at("pv_ramp_min").get<double>();
    c.pv_ramp_max = jc.at("pv_ramp_max").get<double>();
    c.ess_kw = jc.at("ess_kw").get<double>();
    c.ess_soc_min = jc.at("ess_soc_min").get<double>();
    c.ess_soc_max = jc.at("ess_soc_max").get<double>();
    c.station_kw_cap = jc.at("station_kw_cap").get<double>();
    c.margin_lo = jc.at("margin_lo").get<double>();
    c.margin_hi = jc.at("margin_hi").get<double>();
    c.v2g_price_lo = jc.at("v2g_price_lo").get<double>();
    c.v2g_price_hi = jc.at("v2g_price_hi").get<double>();
    c.agg_markup = jc.at("agg_markup").get<double>();
    c.is_virtual = jc.at("is_virtual").get<bool>();
    s.stations.push_back(std::move(c));
  }

  for (const auto& jr : j.at("retailers"))
    s.retailers.push_back({jr.at("id").get<int>(), jr.at("node").get<int>(),
                           jr.at("alpha_lo").get<double>(),
                           jr.at("alpha_hi").get<double>()});

  for (const auto& jn : j.at("network").at("nodes"))
    s.network.nodes.push_back({jn.at("id").get<int>(), jn.at("dv_lo").get<double>(),
                               jn.at("dv_hi").get<double>(),
                               jn.at("is_slack").get<bool>()});
  for (const auto& jl : j.at("network").at("lines"))
    s.network.lines.push_back(
        {jl.at("from").get<int>(), jl.at("to").get<int>(), jl.at("g").get<double>(),
         jl.at("b").get<double>(), jl.at("p_lo").get<double>(),
         jl.at("p_hi").get<double>(), jl.at("q_lo").get<double>(),
         jl.at("q_hi").get<double>()});

  const auto& jh = j.at("history");
  for (const auto& m : jh.at("pv_samples"))
    s.history.pv_samples.push_back(json_to_mat(m, base));
  s.history.price_samples = json_to_mat(jh.at("price_samples"), base);
  s.history.gas_price = jh.at("gas_price").get<std::vector<double>>();
  s.history.heat_value = jh.at("heat_value").get<double>();
  s.history.wholesale_markup = jh.at("wholesale_markup").get<double>();

  const auto& jr = j.at("risk");
  s.risk = {jr.at("eps_ev").get<double>(), jr.at("eps_cs").get<double>(),
            jr.at("eps_re").get<double>()};
  s.balance_slack = jr.at("balance_slack").get<double>();
  const auto& jl = j.at("loop");
  s.max_iters = {jl.at("inner").get<int>(), jl.at("outer").get<int>()};
  s.convergence_tol = jl.at("convergence_tol").get<double>();

  validate(s);
  return s;
}

// ---------------------------------------------------------------- generator

namespace {

struct Pt {
  double x = 0.0, y = 0.0;
};

double manhattan(Pt a, Pt b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }

}  // namespace

Scenario generate_synthetic(int n_evs, int n_stations, int n_retailers,
                            unsigned seed) {
  if (n_evs < 1 || n_stations < 1 || n_retailers < 1)
    throw std::invalid_argument("generate_synthetic: counts must be >= 1");
  std::mt19937 rng(seed);
  auto ureal = [&](double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(rng);
  };
  auto uint_ = [&](int a, int b) {
    return std::uniform_int_distribution<int>(a, b)(rng);
  };
  auto normal = [&](double m, double sd) {
    return std::normal_distribution<double>(m, sd)(rng);
  };
  auto pick = [&](const std::vector<double>& v) {
    return v[static_cast<size_t>(uint_(0, static_cast<int>(v.size()) - 1))];
  };

  Scenario s;
  const int T = 24;
  s.horizon = {T, 1.0};

  // stations on a Manhattan grid city (~20 km square)
  std::vector<Pt> cs_pos;
  for (int i = 0; i < n_stations; ++i) {
    ChargingStation c;
    c.id = i;
    c.node = 1 + i;
    c.charger_kw = 50.0;
    c.charger_count = std::max(2, std::min(30, (n_evs + n_stations - 1) / n_stations));
    c.charger_eta = 0.95;
    c.cgu_kw = 65.0;
    c.cgu_eta = 0.35;
    c.pv_kw = pick({16.0, 19.2, 24.0, 27.2, 32.0});
    c.pv_ramp_min = -0.5 * c.pv_kw;
    c.pv_ramp_max = 0.5 * c.pv_kw;
    c.ess_kw = pick({45.0, 50.0, 65.0, 70.0, 85.0});
    c.station_kw_cap = c.charger_count * c.charger_kw;
    // pricing: a thin G2V handling margin, a V2G buy price close to retail,
    // and a healthy aggregator markup. Station profit then lives mostly on
    // V2G throughput, which shrinks as the confidence level rises.
    c.margin_lo = 0.08;
    c.margin_hi = 0.16;
    c.v2g_price_lo = 0.88;
    c.v2g_price_hi = 0.95;
    c.agg_markup = 0.20;
    s.stations.push_back(c);
    cs_pos.push_back({ureal(0, 20), ureal(0, 20)});
  }
  ChargingStation vcs;
  vcs.id = n_stations;
  vcs.node = -1;
  vcs.charger_count = 0;
  vcs.cgu_kw = 0;
  vcs.pv_kw = 0;
  vcs.pv_ramp_min = vcs.pv_ramp_max = 0;
  vcs.ess_kw = 0;
  vcs.station_kw_cap = 0;
  vcs.is_virtual = true;
  s.stations.push_back(vcs);
  const size_t S = s.stations.size();
  const size_t vi = S - 1;

  for (int r = 0; r < n_retailers; ++r)
    s.retailers.push_back({r, 1 + n_stations + r, 4.4, 4.55});

  // radial feeder: retailers hang off the slack, stations round-robin
  s.network.nodes.push_back({0, 0.0, 0.0, true});
  for (int i = 0; i < n_stations; ++i)
    s.network.nodes.push_back({1 + i, -0.05, 0.05, false});
  for (int r = 0; r < n_retailers; ++r)
    s.network.nodes.push_back({1 + n_stations + r, -0.05, 0.05, false});
  auto line = [&](int a, int b) {
    s.network.lines.push_back({a, b, 500.0, 5000.0, -2000.0, 2000.0, -1000.0, 1000.0});
  };
  for (int r = 0; r < n_retailers; ++r) line(0, 1 + n_stations + r);
  for (int i = 0; i < n_stations; ++i)
    line(1 + n_stations + i % n_retailers, 1 + i);

  // trip hour sampler: ~91% inside the canonical window, the rest adjacent
  auto trip_hour = [&](int wlo, int whi) {
    if (ureal(0, 1) < 0.91) return uint_(wlo, whi);
    return ureal(0, 1) < 0.5 ? std::max(0, wlo - 1) : std::min(T - 1, whi + 1);
  };

  for (int e = 0; e < n_evs; ++e) {
    Ev ev;
    ev.id = e;
    ev.battery_capacity_kwh = pick({40.0, 50.0, 60.0});
    // keep the initial SOC clear of the band edges; the SOC chance
    // constraint applies from the first hour, before any station is reachable
    ev.soc0_mean = ureal(0.32, 0.48);
    ev.soc0_cov = 0.03;
    ev.soc_min = 0.10;
    ev.soc_max = 0.95;
    // a low terminal target leaves the evening discharge leg room to ride
    // near the SOC floor, so the arbitrage volume is set by the margined band
    ev.soc_target_end = ureal(0.10, 0.16);
    ev.kwh_per_km = ureal(0.14, 0.20);
    ev.pref_cost_gain_usd = ureal(8.0, 14.0);
    ev.pref_revenue_gain_usd = ureal(0.5, 1.5);
    ev.pref_extra_km = ureal(8.0, 18.0);
    ev.degradation = {ev.soc_target_end, 0.01, 0.005, 0.005, 1e-4};

    Pt home{ureal(0, 20), ureal(0, 20)};
    Pt work{ureal(0, 20), ureal(0, 20)};
    Pt shop{ureal(0, 20), ureal(0, 20)};
    Pt fun{ureal(0, 20), ureal(0, 20)};

    struct Plan {
      TripKind kind;
      int wlo, whi;
      Pt from, to;
      bool present;
    };
    std::vector<Plan> plans = {
        {TripKind::mandatory, 6, 10, home, work, true},
        {TripKind::optional1, 11, 15, work, shop, ureal(0, 1) < 0.7},
        {TripKind::optional2, 13, 18, work, fun, ureal(0, 1) < 0.5},
        {TripKind::mandatory, 16, 20, work, home, true},
    };
    std::set<int> used;
    for (const auto& p : plans) {
      if (!p.present) continue;
      int h = trip_hour(p.wlo, p.whi);
      for (int guard = 0; used.count(h) && guard < 64; ++guard)
        h = trip_hour(p.wlo, p.whi);
      if (used.count(h)) continue;  // could not place without a clash
      used.insert(h);

      Trip tr;
      tr.kind = p.kind;
      tr.window = {h};
      std::vector<double> o(S, 0.0), d(S, 0.0);
      double zeta = manhattan(p.from, p.to);
      for (int i = 0; i < n_stations; ++i) {
        o[static_cast<size_t>(i)] = manhattan(p.from, cs_pos[static_cast<size_t>(i)]);
        d[static_cast<size_t>(i)] = manhattan(cs_pos[static_cast<size_t>(i)], p.to);
      }
      if (p.kind == TripKind::mandatory) {
        o[vi] = zeta;  // the VCS detour is the direct route itself
        d[vi] = 0.0;
      }
      int near = 0;
      for (int i = 1; i < n_stations; ++i)
        if (o[static_cast<size_t>(i)] < o[static_cast<size_t>(near)]) near = i;
      tr.origin_to_cs_km[h] = o;
      tr.cs_to_dest_km[h] = d;
      tr.direct_km[h] = zeta;
      tr.nearest_cs_km[h] = o[static_cast<size_t>(near)];
      tr.nearest_roundtrip_km[h] =
          o[static_cast<size_t>(near)] + d[static_cast<size_t>(near)];
      ev.trips.push_back(std::move(tr));
    }
    s.evs.push_back(std::move(ev));
  }

  // 100 days of history; PV has an AR(1) weather factor so adjacent hours
  // stay correlated (nonzero lagged cross-covariance)
  const int days = 100;
  for (size_t i = 0; i < S; ++i) {
    Eigen::MatrixXd pv = Eigen::MatrixXd::Zero(days, T);
    double cap = s.stations[i].pv_kw;
    if (cap > 0) {
      for (int dday = 0; dday < days; ++dday) {
        double ar = normal(0.0, 1.0);
        for (int t = 0; t < T; ++t) {
          // persistent weather: lag-one correlation 0.9, unit stationary sd
          ar = 0.9 * ar + 0.436 * normal(0.0, 1.0);
          double bell = std::exp(-0.5 * std::pow((t - 12.5) / 3.0, 2));
          if (bell < 0.02) bell = 0.0;
          double f = std::clamp(0.85 + 0.05 * ar, 0.0, 1.1);
          pv(dday, t) = cap * bell * f;
        }
      }
    }
    s.history.pv_samples.push_back(std::move(pv));
  }
  Eigen::MatrixXd price(days, T);
  for (int dday = 0; dday < days; ++dday)
    for (int t = 0; t < T; ++t) {
      double base = 0.028 + 0.010 * std::exp(-std::pow(t - 18.0, 2) / 8.0) +
                    0.006 * std::exp(-std::pow(t - 8.0, 2) / 6.0);
      price(dday, t) = std::max(0.005, base + normal(0.0, 0.00055));
    }
  s.history.price_samples = std::move(price);
  // priced so the CGU clears above retail tariffs and acts as a peaker
  s.history.gas_price.assign(T, 0.60);

  validate(s);
  return s;
}

}  // namespace emsched
