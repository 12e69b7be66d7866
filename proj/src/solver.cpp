#include "emsched/solver.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <queue>
#include <stdexcept>

namespace emsched {
namespace {

using Eigen::VectorXd;
using Triplet = Eigen::Triplet<double>;

struct RowBuilder {
  std::vector<Triplet> trips;
  std::vector<double> rhs;
  std::vector<std::string> family;
  int rows = 0;

  /// Appends "coeffs . x <= bound" style rows; caller pre-negates for >=.
  void add(const AffineExpr& e, const std::vector<int>& idx, double scale,
           double bound, const std::string& fam) {
    for (const auto& [id, c] : e.terms) {
      int col = idx[static_cast<size_t>(id)];
      if (col >= 0) trips.emplace_back(rows, col, scale * c);
    }
    rhs.push_back(bound);
    family.push_back(fam);
    ++rows;
  }
};

double fixed_part(const AffineExpr& e, const Model& model,
                  const std::vector<int>& idx) {
  double v = e.constant;
  for (const auto& [id, c] : e.terms)
    if (idx[static_cast<size_t>(id)] < 0) v += c * model.var(id).lb;
  return v;
}

}  // namespace

socp::StandardForm to_standard_form(const Model& model, std::vector<int>* var_index,
                                    double* obj_offset,
                                    std::vector<std::string>* row_family) {
  const auto& vars = model.vars();
  std::vector<int> idx(vars.size(), -1);
  int n = 0;
  for (size_t i = 0; i < vars.size(); ++i) {
    if (vars[i].lb == vars[i].ub) continue;  // substituted out
    idx[i] = n++;
  }

  const double sgn = model.sense() == Sense::minimize ? 1.0 : -1.0;

  int n_aux = static_cast<int>(model.quads().size());
  socp::StandardForm sf;
  sf.c = VectorXd::Zero(n + n_aux);
  double offset = sgn * fixed_part(model.objective_linear(), model, idx);
  for (const auto& [id, c] : model.objective_linear().terms) {
    int col = idx[static_cast<size_t>(id)];
    if (col >= 0) sf.c[col] += sgn * c;
  }

  RowBuilder eq, ineq;
  for (const auto& lc : model.linear()) {
    double fp = fixed_part(lc.expr, model, idx);
    if (std::isfinite(lc.lo) && lc.lo == lc.hi) {
      eq.add(lc.expr, idx, 1.0, lc.lo - fp, lc.family);
      continue;
    }
    if (std::isfinite(lc.hi)) ineq.add(lc.expr, idx, 1.0, lc.hi - fp, lc.family);
    if (std::isfinite(lc.lo)) ineq.add(lc.expr, idx, -1.0, fp - lc.lo, lc.family);
  }
  for (size_t i = 0; i < vars.size(); ++i) {
    int col = idx[i];
    if (col < 0) continue;
    if (std::isfinite(vars[i].ub)) {
      ineq.trips.emplace_back(ineq.rows, col, 1.0);
      ineq.rhs.push_back(vars[i].ub);
      ineq.family.push_back("bound:" + vars[i].name);
      ++ineq.rows;
    }
    if (std::isfinite(vars[i].lb)) {
      ineq.trips.emplace_back(ineq.rows, col, -1.0);
      ineq.rhs.push_back(-vars[i].lb);
      ineq.family.push_back("bound:" + vars[i].name);
      ++ineq.rows;
    }
  }

  // SOC blocks appended after the orthant rows
  struct SocRows {
    std::vector<Triplet> trips;  // row-local indices
    std::vector<double> rhs;
    std::string family;
  };
  std::vector<SocRows> socs;

  auto soc_row = [&](SocRows& blk, int local, const AffineExpr& e, double scale) {
    double fp = fixed_part(e, model, idx);
    for (const auto& [id, c] : e.terms) {
      int col = idx[static_cast<size_t>(id)];
      if (col >= 0) blk.trips.emplace_back(local, col, -scale * c);
    }
    blk.rhs.push_back(scale * fp);
  };

  for (const auto& cc : model.cones()) {
    SocRows blk;
    blk.family = cc.family;
    soc_row(blk, 0, cc.rhs, 1.0);
    int local = 1;
    for (const auto& e : cc.lhs_norm) soc_row(blk, local++, e, 1.0);
    socs.push_back(std::move(blk));
  }
  for (size_t q = 0; q < model.quads().size(); ++q) {
    const auto& qt = model.quads()[q];
    double w = sgn * qt.weight;
    if (w < 0.0) throw std::runtime_error("non-convex quadratic objective term");
    int ucol = n + static_cast<int>(q);
    sf.c[ucol] += 1.0;
    // ||(2 sqrt(w) expr, 1-u)|| <= 1+u
    SocRows blk;
    blk.family = "quad_epigraph";
    blk.trips.emplace_back(0, ucol, -1.0);
    blk.rhs.push_back(1.0);
    soc_row(blk, 1, qt.expr, 2.0 * std::sqrt(w));
    blk.trips.emplace_back(2, ucol, 1.0);
    blk.rhs.push_back(1.0);
    socs.push_back(std::move(blk));
  }

  int m = ineq.rows;
  std::vector<Triplet> gtrips = ineq.trips;
  std::vector<double> h = ineq.rhs;
  for (auto& blk : socs) {
    sf.soc_dims.push_back(static_cast<int>(blk.rhs.size()));
    for (const auto& t : blk.trips)
      gtrips.emplace_back(m + t.row(), t.col(), t.value());
    h.insert(h.end(), blk.rhs.begin(), blk.rhs.end());
    m += static_cast<int>(blk.rhs.size());
  }

  sf.nonneg = ineq.rows;
  sf.A.resize(eq.rows, n + n_aux);
  sf.A.setFromTriplets(eq.trips.begin(), eq.trips.end());
  sf.b = Eigen::Map<VectorXd>(eq.rhs.data(), eq.rows);
  sf.G.resize(m, n + n_aux);
  sf.G.setFromTriplets(gtrips.begin(), gtrips.end());
  sf.h = Eigen::Map<VectorXd>(h.data(), m);

  if (var_index) *var_index = idx;
  if (obj_offset) *obj_offset = offset;
  if (row_family) {
    row_family->clear();
    row_family->insert(row_family->end(), eq.family.begin(), eq.family.end());
    row_family->insert(row_family->end(), ineq.family.begin(), ineq.family.end());
    for (const auto& blk : socs) row_family->push_back(blk.family);
  }
  return sf;
}

SolveResult solve_continuous(const Model& model, const SolverOptions& opt) {
  std::vector<int> idx;
  double offset = 0.0;
  std::vector<std::string> fams;
  socp::StandardForm sf = to_standard_form(model, &idx, &offset, &fams);

  SolveResult res;
  const double sgn = model.sense() == Sense::minimize ? 1.0 : -1.0;

  auto fill_assignment = [&](const VectorXd& x) {
    res.assignment.resize(model.num_vars());
    for (size_t i = 0; i < model.num_vars(); ++i) {
      int col = idx[i];
      res.assignment[i] = col >= 0 ? x[col] : model.var(static_cast<int>(i)).lb;
    }
  };

  if (sf.n() == 0) {
    // everything fixed; just check feasibility
    std::vector<double> a(model.num_vars());
    for (size_t i = 0; i < model.num_vars(); ++i)
      a[i] = model.var(static_cast<int>(i)).lb;
    if (model.feasibility_violation(a) > 1e-7) {
      res.status = SolveStatus::infeasible;
      return res;
    }
    res.status = SolveStatus::optimal;
    res.assignment = std::move(a);
    res.objective = model.objective_value(res.assignment);
    res.gap = 0.0;
    return res;
  }

  socp::IpmSettings ipm;
  ipm.feastol = opt.feastol;
  ipm.max_iter = opt.ipm_max_iter;
  socp::IpmResult r = socp::solve(sf, ipm);

  switch (r.status) {
    case socp::IpmStatus::optimal:
      res.status = SolveStatus::optimal;
      fill_assignment(r.x);
      res.objective = sgn * (r.pobj + offset);
      res.gap = r.gap;
      break;
    case socp::IpmStatus::primal_infeasible: {
      res.status = SolveStatus::infeasible;
      // certificate weight points at the binding family
      double best = 0.0;
      int p = sf.p();
      for (int i = 0; i < p; ++i)
        if (std::abs(r.y[i]) > best) {
          best = std::abs(r.y[i]);
          res.blame = fams[static_cast<size_t>(i)];
        }
      for (int i = 0; i < sf.nonneg; ++i)
        if (std::abs(r.z[i]) > best) {
          best = std::abs(r.z[i]);
          res.blame = fams[static_cast<size_t>(p + i)];
        }
      int off = sf.nonneg;
      for (size_t j = 0; j < sf.soc_dims.size(); ++j) {
        double w = r.z.segment(off, sf.soc_dims[j]).norm();
        if (w > best) {
          best = w;
          res.blame = fams[static_cast<size_t>(p + sf.nonneg + static_cast<int>(j))];
        }
        off += sf.soc_dims[j];
      }
      break;
    }
    case socp::IpmStatus::dual_infeasible:
      res.status = SolveStatus::unbounded;
      break;
    case socp::IpmStatus::iteration_limit:
      res.status = SolveStatus::iteration_limit;
      fill_assignment(r.x);
      res.objective = sgn * (r.pobj + offset);
      res.gap = r.gap;
      break;
  }
  return res;
}

namespace {

struct BnbNode {
  double bound;  // relaxation objective in minimize space
  long id;
  std::vector<std::pair<int, double>> fixings;
};

struct NodeOrder {
  bool operator()(const BnbNode& a, const BnbNode& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    // Plunge on bound plateaus: ties are common when many binaries are
    // indifferent, and diving reaches an integral incumbent at the bound
    // in a linear number of nodes instead of a breadth-first blowup.
    if (a.fixings.size() != b.fixings.size())
      return a.fixings.size() < b.fixings.size();
    return a.id < b.id;
  }
};

constexpr double kIntTol = 1e-6;

}  // namespace

SolveResult solve(const Model& model, const SolverOptions& opt) {
  std::vector<int> bins = model.binary_ids();
  if (bins.empty()) return solve_continuous(model, opt);

  const double sgn = model.sense() == Sense::minimize ? 1.0 : -1.0;
  auto key = [&](double obj) { return sgn * obj; };

  SolveResult incumbent;
  bool have_inc = false;

  // warm start: fix binaries to the hint and take a feasible point if any
  if (!model.hint().empty()) {
    Model fixed = model;
    bool usable = true;
    for (int b : bins) {
      auto it = model.hint().find(b);
      if (it == model.hint().end()) {
        usable = false;
        break;
      }
      double v = it->second > 0.5 ? 1.0 : 0.0;
      fixed.fix_var(b, v);
    }
    if (usable) {
      SolveResult r = solve_continuous(fixed, opt);
      if (r.status == SolveStatus::optimal) {
        incumbent = r;
        have_inc = true;
      }
      if (std::getenv("EMSCHED_BNB_TRACE"))
        std::fprintf(stderr, "warm hint: status=%s obj=%.6f\n",
                     to_string(r.status), r.objective);
    }
  }

  auto relax = [&](const std::vector<std::pair<int, double>>& fixings) {
    Model node = model;
    for (auto [v, val] : fixings) node.fix_var(v, val);
    return solve_continuous(node, opt);
  };

  std::priority_queue<BnbNode, std::vector<BnbNode>, NodeOrder> open;
  long next_id = 0;

  SolveResult root = relax({});
  if (root.status == SolveStatus::infeasible) return root;
  if (root.status == SolveStatus::unbounded) return root;

  double root_bound = root.status == SolveStatus::optimal
                          ? key(root.objective)
                          : -std::numeric_limits<double>::infinity();
  open.push({root_bound, next_id++, {}});

  int nodes = 0;
  int relax_failures = 0;
  double best_open_bound = root_bound;
  while (!open.empty() && nodes < opt.max_nodes) {
    BnbNode node = open.top();
    open.pop();
    ++nodes;
    best_open_bound = node.bound;

    if (have_inc &&
        key(incumbent.objective) - node.bound <=
            opt.mip_gap * std::max(1.0, std::abs(incumbent.objective)))
      break;

    SolveResult r = relax(node.fixings);
    if (r.status != SolveStatus::optimal && r.status != SolveStatus::unbounded)
      ++relax_failures;
    if (std::getenv("EMSCHED_BNB_TRACE")) {
      std::fprintf(stderr, "node=%d depth=%zu status=%s obj=%.6f fix=[", nodes,
                   node.fixings.size(), to_string(r.status), r.objective);
      for (auto [v, val] : node.fixings)
        std::fprintf(stderr, "%s=%g ", model.var(v).name.c_str(), val);
      std::fprintf(stderr, "]\n");
    }
    if (r.status == SolveStatus::infeasible) continue;
    // If the relaxation did not converge, fall back to the parent bound: a
    // child cannot beat its parent, and -inf would both defeat pruning and
    // pull the whole failed subtree to the front of the best-first queue.
    double bound = r.status == SolveStatus::optimal ? key(r.objective)
                                                    : node.bound;
    if (have_inc && bound >= key(incumbent.objective) -
                                 opt.mip_gap * std::max(1.0, std::abs(incumbent.objective)))
      continue;

    // most fractional branching, ties to the lowest variable id
    int branch_var = -1;
    double best_frac = kIntTol;
    if (r.status == SolveStatus::optimal) {
      for (int b : bins) {
        bool already = false;
        for (auto [v, _] : node.fixings)
          if (v == b) already = true;
        if (already) continue;
        double v = r.assignment[static_cast<size_t>(b)];
        double frac = std::min(v, 1.0 - v);
        if (frac > best_frac) {
          best_frac = frac;
          branch_var = b;
        }
      }
    }

    if (branch_var < 0 && r.status == SolveStatus::optimal) {
      // integral relaxation: round and accept
      std::vector<double> a = r.assignment;
      for (int b : bins) {
        size_t i = static_cast<size_t>(b);
        a[i] = a[i] > 0.5 ? 1.0 : 0.0;
      }
      if (!have_inc || key(r.objective) < key(incumbent.objective)) {
        incumbent = r;
        incumbent.assignment = std::move(a);
        have_inc = true;
      }
      continue;
    }
    if (branch_var < 0) {
      // relaxation did not converge; branch on the first unfixed binary
      for (int b : bins) {
        bool already = false;
        for (auto [v, _] : node.fixings)
          if (v == b) already = true;
        if (!already) {
          branch_var = b;
          break;
        }
      }
      if (branch_var < 0) continue;
    }

    for (double v : {0.0, 1.0}) {
      auto fix = node.fixings;
      fix.emplace_back(branch_var, v);
      open.push({bound, next_id++, std::move(fix)});
    }
  }

  if (!have_inc) {
    SolveResult r;
    r.status = open.empty() ? SolveStatus::infeasible : SolveStatus::iteration_limit;
    r.nodes = nodes;
    r.relaxation_failures = relax_failures;
    return r;
  }
  double lb = open.empty() ? key(incumbent.objective)
                           : std::min(best_open_bound, open.top().bound);
  incumbent.gap = std::max(0.0, key(incumbent.objective) - lb);
  incumbent.status = SolveStatus::optimal;
  incumbent.nodes = nodes;
  incumbent.relaxation_failures = relax_failures;
  return incumbent;
}

}  // namespace emsched
