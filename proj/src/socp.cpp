#include "emsched/socp.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

namespace emsched::socp {
namespace {

using Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

constexpr double kBig = 1e30;

/// Cone layout: [0, nonneg) nonneg orthant, then SOC blocks.
struct ConeLayout {
  int nonneg = 0;
  std::vector<int> soc_dims;
  std::vector<int> soc_offsets;
  int m = 0;
  int degree = 0;

  explicit ConeLayout(const StandardForm& sf) {
    nonneg = sf.nonneg;
    soc_dims = sf.soc_dims;
    int off = nonneg;
    for (int q : soc_dims) {
      soc_offsets.push_back(off);
      off += q;
    }
    m = off;
    degree = nonneg + static_cast<int>(soc_dims.size());
  }

  VectorXd identity() const {
    VectorXd e = VectorXd::Zero(m);
    e.head(nonneg).setOnes();
    for (size_t j = 0; j < soc_dims.size(); ++j) e[soc_offsets[j]] = 1.0;
    return e;
  }

  /// Margin to the cone boundary (positive inside).
  double margin(const VectorXd& u) const {
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < nonneg; ++i) worst = std::min(worst, u[i]);
    for (size_t j = 0; j < soc_dims.size(); ++j) {
      int o = soc_offsets[j], q = soc_dims[j];
      worst = std::min(worst, u[o] - u.segment(o + 1, q - 1).norm());
    }
    return worst;
  }

  /// max alpha in [0, cap] with u + alpha*du in K.
  double step_to_boundary(const VectorXd& u, const VectorXd& du, double cap) const {
    double alpha = cap;
    for (int i = 0; i < nonneg; ++i)
      if (du[i] < 0.0) alpha = std::min(alpha, -u[i] / du[i]);
    for (size_t j = 0; j < soc_dims.size(); ++j) {
      int o = soc_offsets[j], q = soc_dims[j];
      double u0 = u[o], d0 = du[o];
      auto ub = u.segment(o + 1, q - 1);
      auto db = du.segment(o + 1, q - 1);
      // roots of (u0+a*d0)^2 - ||ub+a*db||^2 = 0
      double a2 = d0 * d0 - db.squaredNorm();
      double a1 = u0 * d0 - ub.dot(db);
      double a0 = u0 * u0 - ub.squaredNorm();
      if (a0 < 0.0) a0 = 0.0;
      double root = std::numeric_limits<double>::infinity();
      if (std::abs(a2) < 1e-14) {
        if (a1 < 0.0) root = -a0 / (2.0 * a1);
      } else {
        double disc = a1 * a1 - a2 * a0;
        if (disc >= 0.0) {
          double sq = std::sqrt(disc);
          // smallest positive root
          double r1 = (-a1 - sq) / a2;
          double r2 = (-a1 + sq) / a2;
          if (r1 > r2) std::swap(r1, r2);
          if (r1 > 0.0) root = r1;
          else if (r2 > 0.0 && a2 < 0.0) root = r2;
          else if (r2 > 0.0 && a2 > 0.0 && a1 < 0.0) root = r2;
        }
      }
      alpha = std::min(alpha, root);
    }
    return alpha;
  }

  /// Jordan product u o v.
  VectorXd jordan(const VectorXd& u, const VectorXd& v) const {
    VectorXd r(m);
    r.head(nonneg) = u.head(nonneg).cwiseProduct(v.head(nonneg));
    for (size_t j = 0; j < soc_dims.size(); ++j) {
      int o = soc_offsets[j], q = soc_dims[j];
      r[o] = u.segment(o, q).dot(v.segment(o, q));
      r.segment(o + 1, q - 1) =
          u[o] * v.segment(o + 1, q - 1) + v[o] * u.segment(o + 1, q - 1);
    }
    return r;
  }

  /// Solve lam o x = d for x.
  VectorXd jordan_div(const VectorXd& lam, const VectorXd& d) const {
    VectorXd x(m);
    x.head(nonneg) = d.head(nonneg).cwiseQuotient(lam.head(nonneg));
    for (size_t j = 0; j < soc_dims.size(); ++j) {
      int o = soc_offsets[j], q = soc_dims[j];
      double l0 = lam[o];
      auto lb = lam.segment(o + 1, q - 1);
      double det = l0 * l0 - lb.squaredNorm();
      double x0 = (l0 * d[o] - lb.dot(d.segment(o + 1, q - 1))) / det;
      x[o] = x0;
      x.segment(o + 1, q - 1) = (d.segment(o + 1, q - 1) - x0 * lb) / l0;
    }
    return x;
  }
};

/// Nesterov-Todd scaling state: W z = W^{-1} s = lambda.
struct Scaling {
  const ConeLayout& K;
  VectorXd w_nonneg;           // sqrt(s_i/z_i)
  std::vector<double> theta;   // per SOC cone
  std::vector<VectorXd> what;  // J-normalized scaling point per cone
  std::vector<VectorXd> v;     // J-square-root of what
  VectorXd lambda;

  explicit Scaling(const ConeLayout& k) : K(k) {}

  void compute(const VectorXd& s, const VectorXd& z) {
    w_nonneg = (s.head(K.nonneg).cwiseQuotient(z.head(K.nonneg))).cwiseSqrt();
    lambda.resize(K.m);
    lambda.head(K.nonneg) =
        (s.head(K.nonneg).cwiseProduct(z.head(K.nonneg))).cwiseSqrt();
    theta.assign(K.soc_dims.size(), 0.0);
    what.assign(K.soc_dims.size(), VectorXd());
    v.assign(K.soc_dims.size(), VectorXd());
    for (size_t j = 0; j < K.soc_dims.size(); ++j) {
      int o = K.soc_offsets[j], q = K.soc_dims[j];
      VectorXd sb = s.segment(o, q), zb = z.segment(o, q);
      double sn = std::sqrt(sb[0] * sb[0] - sb.tail(q - 1).squaredNorm());
      double zn = std::sqrt(zb[0] * zb[0] - zb.tail(q - 1).squaredNorm());
      VectorXd sh = sb / sn, zh = zb / zn;
      double gamma = std::sqrt((1.0 + sh.dot(zh)) / 2.0);
      VectorXd jz = zh;
      jz.tail(q - 1) = -zh.tail(q - 1);
      VectorXd wh = (sh + jz) / (2.0 * gamma);
      theta[j] = std::sqrt(sn / zn);
      what[j] = wh;
      VectorXd vv = wh;
      vv[0] += 1.0;
      vv /= std::sqrt(2.0 * (wh[0] + 1.0));
      v[j] = vv;
      // lambda block = W z
      lambda.segment(o, q) = apply_soc(j, zb, /*inverse=*/false);
    }
  }

  VectorXd apply_soc(size_t j, const VectorXd& u, bool inverse) const {
    const VectorXd& vv = v[j];
    int q = static_cast<int>(vv.size());
    VectorXd ju = u;
    ju.tail(q - 1) = -u.tail(q - 1);
    if (!inverse) {
      // W u = theta (2 v (v'u) - J u)
      return theta[j] * (2.0 * vv * vv.dot(u) - ju);
    }
    // W^{-1} u = (2 (Jv)((Jv)'u) - J u)/theta
    VectorXd jv = vv;
    jv.tail(q - 1) = -vv.tail(q - 1);
    return (2.0 * jv * jv.dot(u) - ju) / theta[j];
  }

  VectorXd apply(const VectorXd& u, bool inverse) const {
    VectorXd r(K.m);
    if (!inverse)
      r.head(K.nonneg) = u.head(K.nonneg).cwiseProduct(w_nonneg);
    else
      r.head(K.nonneg) = u.head(K.nonneg).cwiseQuotient(w_nonneg);
    for (size_t j = 0; j < K.soc_dims.size(); ++j) {
      int o = K.soc_offsets[j], q = K.soc_dims[j];
      r.segment(o, q) = apply_soc(j, u.segment(o, q), inverse);
    }
    return r;
  }

  /// Dense W^2 block for SOC cone j: theta^2 (2 what what' - J).
  Eigen::MatrixXd w2_block(size_t j) const {
    const VectorXd& wh = what[j];
    int q = static_cast<int>(wh.size());
    Eigen::MatrixXd M = 2.0 * wh * wh.transpose();
    M(0, 0) -= 1.0;
    for (int i = 1; i < q; ++i) M(i, i) += 1.0;
    return theta[j] * theta[j] * M;
  }
};

struct KktSolver {
  const StandardForm& sf;
  const ConeLayout& K;
  int n, p, m, N;
  double delta = 1e-7;
  Eigen::SimplicialLDLT<SpMat> ldlt;
  SpMat Kreg;
  bool analyzed = false;

  KktSolver(const StandardForm& s, const ConeLayout& k)
      : sf(s), K(k), n(s.n()), p(s.p()), m(s.m()), N(n + p + m) {}

  void factorize(const Scaling& W) {
    std::vector<Triplet> trips;
    trips.reserve(static_cast<size_t>(
        N + sf.A.nonZeros() + sf.G.nonZeros() + m + 16 * K.soc_dims.size()));
    for (int i = 0; i < n; ++i) trips.emplace_back(i, i, delta);
    for (int k = 0; k < sf.A.outerSize(); ++k)
      for (SpMat::InnerIterator it(sf.A, k); it; ++it)
        trips.emplace_back(n + static_cast<int>(it.row()), static_cast<int>(it.col()),
                           it.value());
    for (int i = 0; i < p; ++i) trips.emplace_back(n + i, n + i, -delta);
    for (int k = 0; k < sf.G.outerSize(); ++k)
      for (SpMat::InnerIterator it(sf.G, k); it; ++it)
        trips.emplace_back(n + p + static_cast<int>(it.row()),
                           static_cast<int>(it.col()), it.value());
    // -W^2 block (lower triangle), plus -delta regularization
    for (int i = 0; i < K.nonneg; ++i) {
      double w2 = W.w_nonneg[i] * W.w_nonneg[i];
      trips.emplace_back(n + p + i, n + p + i, -w2 - delta);
    }
    for (size_t j = 0; j < K.soc_dims.size(); ++j) {
      int o = K.soc_offsets[j], q = K.soc_dims[j];
      Eigen::MatrixXd B = W.w2_block(j);
      for (int r = 0; r < q; ++r)
        for (int c = 0; c <= r; ++c)
          trips.emplace_back(n + p + o + r, n + p + o + c,
                             -B(r, c) - (r == c ? delta : 0.0));
    }
    Kreg.resize(N, N);
    Kreg.setFromTriplets(trips.begin(), trips.end());
    if (!analyzed) {
      ldlt.analyzePattern(Kreg);
      analyzed = true;
    }
    ldlt.factorize(Kreg);
  }

  /// K_unreg * d, computed from the regularized matrix.
  VectorXd apply_unreg(const VectorXd& d) const {
    VectorXd r = Kreg.selfadjointView<Eigen::Lower>() * d;
    r.head(n) -= delta * d.head(n);
    r.tail(p + m) += delta * d.tail(p + m);
    return r;
  }

  VectorXd solve(const VectorXd& rhs) const {
    VectorXd d = ldlt.solve(rhs);
    VectorXd best = d;
    double best_res = std::numeric_limits<double>::infinity();
    const double target = 1e-13 * (1.0 + rhs.lpNorm<Eigen::Infinity>());
    for (int it = 0; it < 20; ++it) {
      VectorXd res = rhs - apply_unreg(d);
      double rn = res.lpNorm<Eigen::Infinity>();
      if (rn < best_res) {
        best_res = rn;
        best = d;
      }
      if (rn < target || rn > 2.0 * best_res) break;  // converged or diverging
      d += ldlt.solve(res);
    }
    last_res = best_res / (1.0 + rhs.lpNorm<Eigen::Infinity>());
    return best;
  }

  mutable double last_res = 0.0;
};

}  // namespace

static IpmResult run_ipm(const StandardForm& sf_in, const IpmSettings& cfg) {
  StandardForm padded;
  const StandardForm* sfp = &sf_in;
  if (sf_in.m() == 0) {
    // degenerate: add a vacuous slack row so the cone is nonempty
    padded = sf_in;
    padded.G.resize(1, sf_in.n());
    padded.h = VectorXd::Ones(1);
    padded.nonneg = 1;
    sfp = &padded;
  }
  const StandardForm& sf = *sfp;

  const ConeLayout K(sf);
  const int n = sf.n(), p = sf.p(), m = sf.m();
  KktSolver kkt(sf, K);

  VectorXd e = K.identity();

  // ---- initialization (least-squares start, pushed into the cone interior)
  VectorXd x, y, z, s;
  {
    Scaling Wid(K);
    Wid.compute(e, e);  // identity scaling
    kkt.factorize(Wid);

    VectorXd rhs1 = VectorXd::Zero(n + p + m);
    rhs1.segment(n, p) = sf.b;
    rhs1.tail(m) = sf.h;
    VectorXd sol1 = kkt.solve(rhs1);
    x = sol1.head(n);
    VectorXd stilde = -sol1.tail(m);
    double a = K.margin(stilde);
    s = stilde;
    if (a <= 0.0) {
      double shift = 1.0 - a;
      s.head(K.nonneg).array() += shift;
      for (size_t j = 0; j < K.soc_dims.size(); ++j) s[K.soc_offsets[j]] += shift;
    }

    VectorXd rhs2 = VectorXd::Zero(n + p + m);
    rhs2.head(n) = -sf.c;
    VectorXd sol2 = kkt.solve(rhs2);
    y = sol2.segment(n, p);
    VectorXd zt = sol2.tail(m);
    double az = K.margin(zt);
    z = zt;
    if (az <= 0.0) {
      double shift = 1.0 - az;
      z.head(K.nonneg).array() += shift;
      for (size_t j = 0; j < K.soc_dims.size(); ++j) z[K.soc_offsets[j]] += shift;
    }
  }
  double tau = 1.0, kappa = 1.0;
  if (std::getenv("EMSCHED_IPM_TRACE"))
    std::fprintf(stderr,
                 "init n=%d p=%d m=%d |x|=%.2e |s|=%.2e |y|=%.2e |z|=%.2e\n", n,
                 p, m, x.lpNorm<Eigen::Infinity>(), s.lpNorm<Eigen::Infinity>(),
                 y.size() ? y.lpNorm<Eigen::Infinity>() : 0.0,
                 z.lpNorm<Eigen::Infinity>());

  const double normb = 1.0 + (p ? sf.b.lpNorm<Eigen::Infinity>() : 0.0);
  const double normh = 1.0 + sf.h.lpNorm<Eigen::Infinity>();
  const double normc = 1.0 + (n ? sf.c.lpNorm<Eigen::Infinity>() : 0.0);

  IpmResult out;
  Scaling W(K);

  // Best iterate seen so far. Near-degenerate problems sometimes stall a hair
  // short of tolerance before the step size collapses; if that happens the
  // best point is usually accurate enough to accept.
  VectorXd xb = x, yb = y, zb = z;
  double taub = tau;
  double best_pres = kBig, best_dres = kBig, best_relgap = kBig;
  double best_merit = kBig, best_pcost = 0.0, best_dcost = 0.0, best_gap = kBig;

  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    out.iterations = iter;
    // residuals
    VectorXd hx = sf.A.transpose() * y + sf.G.transpose() * z + sf.c * tau;
    VectorXd hy = sf.A * x - sf.b * tau;
    VectorXd hz = s + sf.G * x - sf.h * tau;
    double cx = sf.c.dot(x), by = p ? sf.b.dot(y) : 0.0, hzd = sf.h.dot(z);
    double htau = kappa + cx + by + hzd;

    double mu = (s.dot(z) + tau * kappa) / (K.degree + 1);
    double pcost = cx / tau;
    double dcost = -(by + hzd) / tau;
    double gap = s.dot(z) / (tau * tau);
    double relgap = gap / std::max(1.0, std::abs(pcost));
    double pres = std::max(p ? hy.lpNorm<Eigen::Infinity>() / normb : 0.0,
                           hz.lpNorm<Eigen::Infinity>() / normh) /
                  tau;
    double dres = hx.lpNorm<Eigen::Infinity>() / normc / tau;

    static const bool trace = std::getenv("EMSCHED_IPM_TRACE") != nullptr;
    if (trace)
      std::fprintf(stderr,
                   "it=%3d pres=%9.2e dres=%9.2e gap=%9.2e relgap=%9.2e "
                   "tau=%9.2e kappa=%9.2e mu=%9.2e\n",
                   iter, pres, dres, gap, relgap, tau, kappa, mu);
    // A breakdown (singular KKT factor, cone boundary) poisons the iterate
    // with NaNs; comparisons against NaN are all false, so test explicitly.
    if (!std::isfinite(mu) || !std::isfinite(pres) || !std::isfinite(dres))
      break;
    double merit = std::max({pres, dres, relgap});
    if (merit < best_merit) {
      best_merit = merit;
      xb = x; yb = y; zb = z; taub = tau;
      best_pres = pres; best_dres = dres; best_relgap = relgap;
      best_pcost = pcost; best_dcost = dcost; best_gap = gap;
    }
    if (pres <= cfg.feastol && dres <= cfg.feastol &&
        (gap <= cfg.abstol || relgap <= cfg.reltol)) {
      out.status = IpmStatus::optimal;
      out.x = x / tau;
      out.y = y / tau;
      out.z = z / tau;
      out.pobj = pcost;
      out.dobj = dcost;
      out.gap = gap;
      return out;
    }
    // infeasibility certificates
    double bh = by + hzd;
    if (bh < -1e-12) {
      VectorXd cert = sf.A.transpose() * y + sf.G.transpose() * z;
      if (cert.lpNorm<Eigen::Infinity>() / (-bh) <= cfg.feastol * normc) {
        out.status = IpmStatus::primal_infeasible;
        out.y = y / (-bh);
        out.z = z / (-bh);
        return out;
      }
    }
    if (cx < -1e-12) {
      VectorXd certA = sf.A * x;
      VectorXd certG = sf.G * x + s;
      double q = std::max(p ? certA.lpNorm<Eigen::Infinity>() : 0.0,
                          certG.lpNorm<Eigen::Infinity>());
      if (q / (-cx) <= cfg.feastol * std::max(normb, normh)) {
        out.status = IpmStatus::dual_infeasible;
        out.x = x / (-cx);
        return out;
      }
    }

    W.compute(s, z);
    kkt.factorize(W);

    VectorXd rhs_static(n + p + m);
    rhs_static.head(n) = -sf.c;
    rhs_static.segment(n, p) = sf.b;
    rhs_static.tail(m) = sf.h;
    VectorXd v1 = kkt.solve(rhs_static);
    double cby1 = sf.c.dot(v1.head(n)) + sf.b.dot(v1.segment(n, p)) +
                  sf.h.dot(v1.tail(m));

    auto direction = [&](const VectorXd& d1, const VectorXd& d2, const VectorXd& d3,
                         double dtau_r, const VectorXd& dc, double dctau, VectorXd& dx,
                         VectorXd& dy, VectorXd& dz, VectorXd& ds, double& dtau,
                         double& dkappa) {
      VectorXd lam_div = K.jordan_div(W.lambda, dc);
      VectorXd rhs(n + p + m);
      rhs.head(n) = -d1;
      rhs.segment(n, p) = -d2;
      rhs.tail(m) = -d3 + W.apply(lam_div, false);
      VectorXd v2 = kkt.solve(rhs);
      double cby2 = sf.c.dot(v2.head(n)) + sf.b.dot(v2.segment(n, p)) +
                    sf.h.dot(v2.tail(m));
      dtau = (-dtau_r + dctau / tau - cby2) / (cby1 - kappa / tau);
      dx = v2.head(n) + dtau * v1.head(n);
      dy = v2.segment(n, p) + dtau * v1.segment(n, p);
      dz = v2.tail(m) + dtau * v1.tail(m);
      ds = -d3 - sf.G * dx + sf.h * dtau;
      dkappa = -(dctau + kappa * dtau) / tau;
    };

    // affine (predictor) direction
    VectorXd dxa, dya, dza, dsa;
    double dtaua, dkappaa;
    VectorXd lam2 = K.jordan(W.lambda, W.lambda);
    direction(hx, hy, hz, htau, lam2, tau * kappa, dxa, dya, dza, dsa, dtaua, dkappaa);

    double alpha_aff = K.step_to_boundary(s, dsa, 1.0);
    alpha_aff = std::min(alpha_aff, K.step_to_boundary(z, dza, alpha_aff));
    if (dtaua < 0.0) alpha_aff = std::min(alpha_aff, -tau / dtaua);
    if (dkappaa < 0.0) alpha_aff = std::min(alpha_aff, -kappa / dkappaa);
    alpha_aff = std::min(alpha_aff, 1.0);

    double sigma = std::pow(1.0 - alpha_aff, 3);
    sigma = std::clamp(sigma, 1e-8, 0.999);

    // combined direction with Mehrotra correction
    VectorXd corr = K.jordan(W.apply(dsa, true), W.apply(dza, false));
    VectorXd dc = lam2 + corr - sigma * mu * e;
    double dctau = tau * kappa + dtaua * dkappaa - sigma * mu;
    double om = 1.0 - sigma;
    VectorXd dx, dy, dz, ds;
    double dtau, dkappa;
    direction(om * hx, om * hy, om * hz, om * htau, dc, dctau, dx, dy, dz, ds, dtau,
              dkappa);

    double alpha = K.step_to_boundary(s, ds, kBig);
    alpha = std::min(alpha, K.step_to_boundary(z, dz, alpha));
    if (dtau < 0.0) alpha = std::min(alpha, -tau / dtau);
    if (dkappa < 0.0) alpha = std::min(alpha, -kappa / dkappa);
    alpha = std::min(0.98 * alpha, 1.0);

    if (trace)
      std::fprintf(stderr, "      alpha_aff=%.2e sigma=%.2e alpha=%.2e kktres=%.2e\n",
                   alpha_aff, sigma, alpha, kkt.last_res);
    if (!std::isfinite(alpha) || alpha < 1e-10) break;
    if (!dx.allFinite() || !ds.allFinite() || !dy.allFinite() ||
        !dz.allFinite())
      break;

    x += alpha * dx;
    y += alpha * dy;
    z += alpha * dz;
    s += alpha * ds;
    tau += alpha * dtau;
    kappa += alpha * dkappa;
  }

  // did not converge to tolerance; a stalled iterate frequently still
  // encodes an infeasibility certificate, so re-check with a loose tolerance
  {
    double cx = sf.c.dot(x), by = p ? sf.b.dot(y) : 0.0, hzd = sf.h.dot(z);
    double bh = by + hzd;
    const double loose = std::max(cfg.feastol * 1e3, 1e-6);
    if (bh < -1e-12) {
      VectorXd cert = sf.A.transpose() * y + sf.G.transpose() * z;
      if (cert.lpNorm<Eigen::Infinity>() / (-bh) <= loose * normc) {
        out.status = IpmStatus::primal_infeasible;
        out.y = y / (-bh);
        out.z = z / (-bh);
        return out;
      }
    }
    if (cx < -1e-12) {
      VectorXd certA = sf.A * x;
      VectorXd certG = sf.G * x + s;
      double q = std::max(p ? certA.lpNorm<Eigen::Infinity>() : 0.0,
                          certG.lpNorm<Eigen::Infinity>());
      if (q / (-cx) <= loose * std::max(normb, normh)) {
        out.status = IpmStatus::dual_infeasible;
        out.x = x / (-cx);
        return out;
      }
    }
  }
  // Accept the best iterate if it is only marginally outside tolerance.
  bool near = best_pres <= cfg.feastol * 1e2 && best_dres <= cfg.feastol * 1e2 &&
              (best_gap <= cfg.abstol * 1e4 ||
               best_relgap <= std::max(cfg.reltol * 1e2, 1e-7));
  out.status = near ? IpmStatus::optimal : IpmStatus::iteration_limit;
  out.x = xb / taub;
  out.y = yb / taub;
  out.z = zb / taub;
  out.pobj = best_pcost;
  out.dobj = best_dcost;
  out.gap = best_gap;
  return out;
}

IpmResult solve(const StandardForm& sf_in, const IpmSettings& cfg) {
  const int n = sf_in.n(), p = sf_in.p(), m = sf_in.m();
  if (n == 0 || p + m == 0) return run_ipm(sf_in, cfg);

  // Ruiz equilibration. Problems mix kW-scale balance rows with $/kWh-scale
  // price cones, and the KKT factorization loses the small rows without it.
  // Rows of a second-order cone block share one factor so the cone survives.
  VectorXd dcol = VectorXd::Ones(n);
  VectorXd erow = VectorXd::Ones(p);
  VectorXd frow = VectorXd::Ones(m);
  const double tiny = 1e-12;
  for (int sweep = 0; sweep < 10; ++sweep) {
    VectorXd ra = VectorXd::Zero(p), rg = VectorXd::Zero(m);
    for (int j = 0; j < sf_in.A.outerSize(); ++j)
      for (Eigen::SparseMatrix<double>::InnerIterator it(sf_in.A, j); it; ++it)
        ra[it.row()] = std::max(
            ra[it.row()], std::abs(it.value() * erow[it.row()] * dcol[j]));
    for (int j = 0; j < sf_in.G.outerSize(); ++j)
      for (Eigen::SparseMatrix<double>::InnerIterator it(sf_in.G, j); it; ++it)
        rg[it.row()] = std::max(
            rg[it.row()], std::abs(it.value() * frow[it.row()] * dcol[j]));
    {
      int off = sf_in.nonneg;
      for (int dim : sf_in.soc_dims) {
        double mx = rg.segment(off, dim).maxCoeff();
        rg.segment(off, dim).setConstant(mx);
        off += dim;
      }
    }
    for (int i = 0; i < p; ++i)
      if (ra[i] > tiny) erow[i] /= std::sqrt(ra[i]);
    for (int i = 0; i < m; ++i)
      if (rg[i] > tiny) frow[i] /= std::sqrt(rg[i]);

    VectorXd cn = VectorXd::Zero(n);
    for (int j = 0; j < sf_in.A.outerSize(); ++j)
      for (Eigen::SparseMatrix<double>::InnerIterator it(sf_in.A, j); it; ++it)
        cn[j] = std::max(cn[j],
                         std::abs(it.value() * erow[it.row()] * dcol[j]));
    for (int j = 0; j < sf_in.G.outerSize(); ++j)
      for (Eigen::SparseMatrix<double>::InnerIterator it(sf_in.G, j); it; ++it)
        cn[j] = std::max(cn[j],
                         std::abs(it.value() * frow[it.row()] * dcol[j]));
    for (int j = 0; j < n; ++j)
      if (cn[j] > tiny) dcol[j] /= std::sqrt(cn[j]);
  }

  StandardForm sf = sf_in;
  for (int j = 0; j < sf.A.outerSize(); ++j)
    for (Eigen::SparseMatrix<double>::InnerIterator it(sf.A, j); it; ++it)
      it.valueRef() *= erow[it.row()] * dcol[j];
  for (int j = 0; j < sf.G.outerSize(); ++j)
    for (Eigen::SparseMatrix<double>::InnerIterator it(sf.G, j); it; ++it)
      it.valueRef() *= frow[it.row()] * dcol[j];
  sf.b = erow.cwiseProduct(sf.b);
  sf.h = frow.cwiseProduct(sf.h);
  sf.c = dcol.cwiseProduct(sf.c);
  double cscale = sf.c.lpNorm<Eigen::Infinity>();
  if (cscale < tiny) cscale = 1.0;
  sf.c /= cscale;

  IpmResult r = run_ipm(sf, cfg);
  if (r.x.size()) r.x = dcol.cwiseProduct(r.x);
  if (r.y.size()) r.y = cscale * erow.cwiseProduct(r.y);
  if (r.z.size()) r.z = cscale * frow.cwiseProduct(r.z);
  r.pobj *= cscale;
  r.dobj *= cscale;
  r.gap *= cscale;
  return r;
}

}  // namespace emsched::socp
