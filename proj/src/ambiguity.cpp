#include "emsched/ambiguity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace emsched {

Eigen::MatrixXd clip_psd(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

Moments estimate_moments(const Eigen::MatrixXd& samples) {
  const auto n = samples.rows();
  if (n < 2) throw std::invalid_argument("estimate_moments: need at least 2 rows");
  Moments mo;
  mo.mean = samples.colwise().mean();
  Eigen::MatrixXd centered = samples.rowwise() - mo.mean.transpose();
  mo.cov = clip_psd(centered.transpose() * centered / double(n - 1));
  return mo;
}

LaggedMoments lagged_moments(const Eigen::MatrixXd& samples, int t) {
  if (t < 1) throw std::invalid_argument("lagged_moments: t must be >= 1");
  const auto n = samples.rows();
  if (n < 2) throw std::invalid_argument("lagged_moments: need at least 2 rows");
  Eigen::MatrixXd pair(n, 2);
  pair.col(0) = samples.col(t);
  pair.col(1) = samples.col(t - 1);
  Moments mo = estimate_moments(pair);
  LaggedMoments lm;
  lm.mean_t = mo.mean[0];
  lm.mean_tm1 = mo.mean[1];
  lm.cov_block = mo.cov;
  return lm;
}

double worst_case_prob_single(double mu, double var, double threshold,
                              TwoPoint* witness) {
  if (var < 0.0) throw std::invalid_argument("negative variance");
  double t = threshold - mu;
  if (t <= 0.0) {
    if (witness) {
      // infimum approached as the upper atom slides toward the threshold
      double s = std::max(1e-6, 1e-3 * std::sqrt(var));
      *witness = {mu - var / s, s * s / (s * s + var), mu + s,
                  var / (s * s + var)};
    }
    return 0.0;
  }
  if (var == 0.0) {
    if (witness) *witness = {mu, 1.0, mu, 0.0};
    return 1.0;
  }
  double p_at = var / (var + t * t);  // limiting mass just above the threshold
  if (witness) *witness = {mu - var / t, 1.0 - p_at, threshold, p_at};
  return t * t / (var + t * t);
}

double worst_case_prob_double(double mu, double var, double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("lo > hi");
  if (var < 0.0) throw std::invalid_argument("negative variance");
  if (var == 0.0) return (lo <= mu && mu <= hi) ? 1.0 : 0.0;
  if (mu < lo || mu > hi) return 0.0;
  double aa = mu - lo, bb = hi - mu;
  if (var >= aa * bb) return 0.0;  // all mass can escape the interval

  // Three-point family with atoms (lo - d1, m, hi + d2). For fixed offsets
  // the probabilities are determined by the moments; the best interior atom
  // position is the clamped midpoint, so only (d1, d2) need searching.
  auto middle_mass = [&](double d1, double d2) {
    double a = lo - d1, b = hi + d2;
    double num = (mu - a) * (b - mu) - var;
    if (num <= 0.0) return 0.0;  // mass can leave the interval entirely
    double m_lo = std::max(lo, mu - var / (b - mu));  // keeps p_a >= 0
    double m_hi = std::min(hi, mu + var / (mu - a));  // keeps p_b >= 0
    double m = std::clamp(0.5 * (a + b), m_lo, m_hi);
    return num / ((m - a) * (b - m));
  };

  double sigma = std::sqrt(var);
  double w = hi - lo;
  double dmax = 1e4 * (sigma + w);
  const double dmin = 1e-9 * (sigma + w);
  auto dgrid = [&](int k, int nk) {
    return dmin * std::pow(dmax / dmin, double(k) / (nk - 1));
  };
  const int nd = 40;
  double best = 1.0, bd1 = dmin, bd2 = dmin;
  for (int i = 0; i < nd; ++i)
    for (int j = 0; j < nd; ++j) {
      double v = middle_mass(dgrid(i, nd), dgrid(j, nd));
      if (v < best) {
        best = v;
        bd1 = dgrid(i, nd);
        bd2 = dgrid(j, nd);
      }
    }

  const double gr = 0.6180339887498949;
  auto golden = [&](auto f, double a, double b) {
    double c = b - gr * (b - a), d = a + gr * (b - a);
    for (int it = 0; it < 80; ++it) {
      if (f(c) < f(d)) b = d;
      else a = c;
      c = b - gr * (b - a);
      d = a + gr * (b - a);
    }
    return 0.5 * (a + b);
  };
  for (int round = 0; round < 3; ++round) {
    bd1 = std::exp(golden(
        [&](double ld) { return middle_mass(std::exp(ld), bd2); },
        std::log(bd1) - 2.0, std::log(bd1) + 2.0));
    bd2 = std::exp(golden(
        [&](double ld) { return middle_mass(bd1, std::exp(ld)); },
        std::log(bd2) - 2.0, std::log(bd2) + 2.0));
  }
  best = std::min(best, middle_mass(bd1, bd2));

  // limiting two-point candidates: one atom just outside the tight side
  best = std::min(best, aa * aa / (var + aa * aa));
  best = std::min(best, bb * bb / (var + bb * bb));
  return std::clamp(best, 0.0, 1.0);
}

}  // namespace emsched
