#include "emsched/retailer_layer.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "emsched/ambiguity.hpp"
#include "emsched/solver.hpp"

namespace emsched {

namespace {

std::map<int, int> node_index(const Network& net) {
  std::map<int, int> idx;
  for (size_t k = 0; k < net.nodes.size(); ++k)
    idx[net.nodes[k].id] = static_cast<int>(k);
  return idx;
}

int slack_index(const Network& net) {
  for (size_t k = 0; k < net.nodes.size(); ++k)
    if (net.nodes[k].is_slack) return static_cast<int>(k);
  throw std::runtime_error("network has no slack node");
}

}  // namespace

double reactive_factor(double power_factor) {
  return std::tan(std::acos(power_factor));
}

Eigen::MatrixXd lossless_baseline(const Network& net,
                                  const Eigen::MatrixXd& injections) {
  const int N = static_cast<int>(net.nodes.size());
  const int T = static_cast<int>(injections.rows());
  if (injections.cols() != N)
    throw std::runtime_error("lossless_baseline: injection shape mismatch");
  auto idx = node_index(net);
  const int slack = slack_index(net);

  // Susceptance-only balance: flow m->n is -b (dV_m - dV_n), the sum of
  // flows out of a node equals its injection. The slack row and column are
  // dropped (its deviation is pinned to zero).
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
  for (const NetworkLine& l : net.lines) {
    int m = idx.at(l.from), n = idx.at(l.to);
    A(m, m) -= l.b;
    A(m, n) += l.b;
    A(n, n) -= l.b;
    A(n, m) += l.b;
  }
  std::vector<int> keep;
  for (int k = 0; k < N; ++k)
    if (k != slack) keep.push_back(k);
  const int M = static_cast<int>(keep.size());
  Eigen::MatrixXd Ar(M, M);
  for (int a = 0; a < M; ++a)
    for (int b = 0; b < M; ++b) Ar(a, b) = A(keep[static_cast<size_t>(a)],
                                             keep[static_cast<size_t>(b)]);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(Ar);
  if (!lu.isInvertible())
    throw std::runtime_error("lossless_baseline: singular network matrix");

  Eigen::MatrixXd dv_hat = Eigen::MatrixXd::Zero(T, N);
  for (int t = 0; t < T; ++t) {
    Eigen::VectorXd rhs(M);
    for (int a = 0; a < M; ++a) rhs[a] = injections(t, keep[static_cast<size_t>(a)]);
    Eigen::VectorXd x = lu.solve(rhs);
    for (int a = 0; a < M; ++a) dv_hat(t, keep[static_cast<size_t>(a)]) = x[a];
  }
  return dv_hat;
}

Model build_retailer_problem(const Scenario& s,
                             const std::vector<Eigen::MatrixXd>& cs_yre,
                             double eps_re, const Eigen::MatrixXd& dv_hat,
                             RetailerVarMap* map, DoubleMode mode) {
  const int T = s.horizon.steps;
  const double dt = s.horizon.dt_hours;
  const int R = static_cast<int>(s.retailers.size());
  const int N = static_cast<int>(s.network.nodes.size());
  const int L = static_cast<int>(s.network.lines.size());
  const double qfac = reactive_factor();
  auto idx = node_index(s.network);
  const int slack = slack_index(s.network);

  Moments wm = estimate_moments(s.history.price_samples);

  // The (5k) band system is separable per hour and retailer: the price
  // variable appears in nothing else. Check its closed-form feasibility up
  // front; the violation is of order 1e-4 against kW-scale rows, which the
  // interior-point method cannot reliably certify inside the full model.
  for (int t = 0; t < T; ++t)
    for (int r = 0; r < R; ++r) {
      const Retailer& re = s.retailers[static_cast<size_t>(r)];
      double h = 0.5 * (re.alpha_hi - re.alpha_lo) * wm.mean[t];
      double sigma = std::sqrt(std::max(0.0, wm.cov(t, t)));
      double cap = mode == DoubleMode::exact
                       ? std::sqrt(eps_re) * h
                       : h / single_margin(eps_re / 2.0);
      if (sigma > cap) throw InfeasibleError("retailer layer", "re:price");
    }

  // fixed station demand per retailer and hour
  Eigen::MatrixXd demand = Eigen::MatrixXd::Zero(T, R);
  for (int r = 0; r < R; ++r) demand.col(r) = cs_yre[static_cast<size_t>(r)].rowwise().sum();

  Model m;
  RetailerVarMap vm;
  vm.price.resize(static_cast<size_t>(T));
  vm.p_wm.resize(static_cast<size_t>(T));
  vm.q_wm.resize(static_cast<size_t>(T));
  vm.dv.resize(static_cast<size_t>(T));
  vm.dtheta.resize(static_cast<size_t>(T));
  vm.p_flow.resize(static_cast<size_t>(T));
  vm.q_flow.resize(static_cast<size_t>(T));

  auto name = [](const char* base, int t, int k) {
    return std::string(base) + ":" + std::to_string(t) + ":" + std::to_string(k);
  };

  for (int t = 0; t < T; ++t) {
    const size_t tu = static_cast<size_t>(t);
    for (int r = 0; r < R; ++r) {
      vm.price[tu].push_back(m.add_var(name("rho", t, r), 0.0, kInf));
      vm.p_wm[tu].push_back(m.add_var(name("pwm", t, r), -kInf, kInf));
      vm.q_wm[tu].push_back(m.add_var(name("qwm", t, r), -kInf, kInf));
    }
    for (int k = 0; k < N; ++k) {
      const NetworkNode& nd = s.network.nodes[static_cast<size_t>(k)];
      double lo = k == slack ? 0.0 : nd.dv_lo;
      double hi = k == slack ? 0.0 : nd.dv_hi;
      vm.dv[tu].push_back(m.add_var(name("dv", t, k), lo, hi));
      vm.dtheta[tu].push_back(m.add_var(name("dth", t, k), k == slack ? 0.0 : -kInf,
                                        k == slack ? 0.0 : kInf));
    }
    for (int l = 0; l < L; ++l) {
      const NetworkLine& ln = s.network.lines[static_cast<size_t>(l)];
      vm.p_flow[tu].push_back(m.add_var(name("pf", t, l), ln.p_lo, ln.p_hi));
      vm.q_flow[tu].push_back(m.add_var(name("qf", t, l), ln.q_lo, ln.q_hi));
    }
  }

  AffineExpr obj;
  for (int t = 0; t < T; ++t) {
    const size_t tu = static_cast<size_t>(t);

    for (int r = 0; r < R; ++r) {
      // (5b)/(5c): wholesale purchase covers the station demand
      m.add_range(AffineExpr::variable(vm.p_wm[tu][static_cast<size_t>(r)]) -
                      AffineExpr(demand(t, r)),
                  0.0, 0.0, "re:pbal");
      m.add_range(AffineExpr::variable(vm.q_wm[tu][static_cast<size_t>(r)]) -
                      AffineExpr(qfac * demand(t, r)),
                  0.0, 0.0, "re:qbal");

      // (5k): offered price within the profit-margin band around the
      // uncertain wholesale price
      DrccSpec spec;
      spec.kind = DrccKind::double_sided;
      spec.body.det = AffineExpr::variable(vm.price[tu][static_cast<size_t>(r)]);
      spec.body.unc.push_back({t, AffineExpr(1.0)});
      const Retailer& re = s.retailers[static_cast<size_t>(r)];
      spec.lo = AffineExpr(re.alpha_lo * wm.mean[t]);
      spec.hi = AffineExpr(re.alpha_hi * wm.mean[t]);
      spec.eps = eps_re;
      spec.family = "re:price";
      reform_double(m, spec, wm.cov, mode);

      obj += dt * demand(t, r) *
                 AffineExpr::variable(vm.price[tu][static_cast<size_t>(r)]) -
             dt * wm.mean[t] *
                 AffineExpr::variable(vm.p_wm[tu][static_cast<size_t>(r)]);
    }

    // (5d)/(5e): flows linearized at the lossless voltage profile
    for (int l = 0; l < L; ++l) {
      const NetworkLine& ln = s.network.lines[static_cast<size_t>(l)];
      int a = idx.at(ln.from), b = idx.at(ln.to);
      double v1 = 1.0 + dv_hat(t, a);
      AffineExpr dvd = AffineExpr::variable(vm.dv[tu][static_cast<size_t>(a)]) -
                       AffineExpr::variable(vm.dv[tu][static_cast<size_t>(b)]);
      AffineExpr dtd =
          AffineExpr::variable(vm.dtheta[tu][static_cast<size_t>(a)]) -
          AffineExpr::variable(vm.dtheta[tu][static_cast<size_t>(b)]);
      m.add_range(AffineExpr::variable(vm.p_flow[tu][static_cast<size_t>(l)]) -
                      ln.g * v1 * dvd + ln.b * dtd,
                  0.0, 0.0, "re:pflow");
      m.add_range(AffineExpr::variable(vm.q_flow[tu][static_cast<size_t>(l)]) +
                      ln.b * v1 * dvd + ln.g * dtd,
                  0.0, 0.0, "re:qflow");
    }

    // nodal balance at every non-slack node; retailers inject their
    // wholesale purchase, stations withdraw what they bought
    for (int k = 0; k < N; ++k) {
      if (k == slack) continue;
      AffineExpr bal_p, bal_q;
      for (int l = 0; l < L; ++l) {
        const NetworkLine& ln = s.network.lines[static_cast<size_t>(l)];
        if (idx.at(ln.from) == k) {
          bal_p += AffineExpr::variable(vm.p_flow[tu][static_cast<size_t>(l)]);
          bal_q += AffineExpr::variable(vm.q_flow[tu][static_cast<size_t>(l)]);
        } else if (idx.at(ln.to) == k) {
          bal_p -= AffineExpr::variable(vm.p_flow[tu][static_cast<size_t>(l)]);
          bal_q -= AffineExpr::variable(vm.q_flow[tu][static_cast<size_t>(l)]);
        }
      }
      int node_id = s.network.nodes[static_cast<size_t>(k)].id;
      for (int r = 0; r < R; ++r)
        if (s.retailers[static_cast<size_t>(r)].node == node_id) {
          bal_p -= AffineExpr::variable(vm.p_wm[tu][static_cast<size_t>(r)]);
          bal_q -= AffineExpr::variable(vm.q_wm[tu][static_cast<size_t>(r)]);
        }
      for (size_t i = 0; i < s.stations.size(); ++i)
        if (!s.stations[i].is_virtual && s.stations[i].node == node_id)
          for (int r = 0; r < R; ++r) {
            bal_p += cs_yre[static_cast<size_t>(r)](t, static_cast<int>(i));
            bal_q += qfac * cs_yre[static_cast<size_t>(r)](t, static_cast<int>(i));
          }
      m.add_range(std::move(bal_p), 0.0, 0.0, "re:nodal-p");
      m.add_range(std::move(bal_q), 0.0, 0.0, "re:nodal-q");
    }
  }

  m.set_sense(Sense::maximize);
  m.set_objective(std::move(obj));
  if (map) *map = std::move(vm);
  return m;
}

RetailerResult solve_retailer_layer(const Scenario& s,
                                    const std::vector<Eigen::MatrixXd>& cs_yre,
                                    double eps_re, DoubleMode mode) {
  const int T = s.horizon.steps;
  const int R = static_cast<int>(s.retailers.size());
  const int N = static_cast<int>(s.network.nodes.size());
  const int L = static_cast<int>(s.network.lines.size());
  const double qfac = reactive_factor();
  auto idx = node_index(s.network);

  // lossless operating point from the reactive injections implied by demand
  Eigen::MatrixXd inj = Eigen::MatrixXd::Zero(T, N);
  for (int r = 0; r < R; ++r) {
    int k = idx.at(s.retailers[static_cast<size_t>(r)].node);
    inj.col(k) += qfac * cs_yre[static_cast<size_t>(r)].rowwise().sum();
  }
  for (size_t i = 0; i < s.stations.size(); ++i) {
    if (s.stations[i].is_virtual) continue;
    int k = idx.at(s.stations[i].node);
    for (int r = 0; r < R; ++r)
      inj.col(k) -= qfac * cs_yre[static_cast<size_t>(r)].col(static_cast<int>(i));
  }
  Eigen::MatrixXd dv_hat = lossless_baseline(s.network, inj);

  RetailerVarMap vm;
  Model m = build_retailer_problem(s, cs_yre, eps_re, dv_hat, &vm, mode);
  SolveResult r = solve_continuous(m);
  if (r.status == SolveStatus::infeasible)
    throw InfeasibleError("retailer layer", r.blame);
  if (r.status != SolveStatus::optimal)
    throw std::runtime_error("retailer layer: solver returned " +
                             std::string(to_string(r.status)));

  RetailerResult out;
  out.price = Eigen::MatrixXd::Zero(T, R);
  out.p_wm = Eigen::MatrixXd::Zero(T, R);
  out.q_wm = Eigen::MatrixXd::Zero(T, R);
  out.flow.dv = Eigen::MatrixXd::Zero(T, N);
  out.flow.dtheta = Eigen::MatrixXd::Zero(T, N);
  out.flow.p_flow = Eigen::MatrixXd::Zero(T, L);
  out.flow.q_flow = Eigen::MatrixXd::Zero(T, L);
  out.flow.dv_hat = dv_hat;
  auto val = [&](int id) { return r.assignment[static_cast<size_t>(id)]; };
  for (int t = 0; t < T; ++t) {
    const size_t tu = static_cast<size_t>(t);
    for (int rr = 0; rr < R; ++rr) {
      out.price(t, rr) = val(vm.price[tu][static_cast<size_t>(rr)]);
      out.p_wm(t, rr) = val(vm.p_wm[tu][static_cast<size_t>(rr)]);
      out.q_wm(t, rr) = val(vm.q_wm[tu][static_cast<size_t>(rr)]);
    }
    for (int k = 0; k < N; ++k) {
      out.flow.dv(t, k) = val(vm.dv[tu][static_cast<size_t>(k)]);
      out.flow.dtheta(t, k) = val(vm.dtheta[tu][static_cast<size_t>(k)]);
    }
    for (int l = 0; l < L; ++l) {
      out.flow.p_flow(t, l) = val(vm.p_flow[tu][static_cast<size_t>(l)]);
      out.flow.q_flow(t, l) = val(vm.q_flow[tu][static_cast<size_t>(l)]);
    }
  }
  out.objective = r.objective;
  return out;
}

}  // namespace emsched
