#pragma once

#include <Eigen/Dense>

namespace emsched {

/// First and second moments of an uncertainty vector.
struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Joint moments of (xi_t, xi_{t-1}) for one PV site, used by the ramp
/// constraint. cov_block = [[var_t, ups], [ups, var_tm1]].
struct LaggedMoments {
  double mean_t = 0.0;
  double mean_tm1 = 0.0;
  Eigen::Matrix2d cov_block = Eigen::Matrix2d::Zero();
};

enum class ParamKind { ev_soc0, cs_pv, re_price };

struct UncertainParam {
  ParamKind kind = ParamKind::cs_pv;
  int owner = 0;
  int time = -1;
  Moments moments;
};

/// Symmetrize and zero out negative eigenvalues (tolerance 1e-9).
Eigen::MatrixXd clip_psd(const Eigen::MatrixXd& m);

/// Symmetric PSD square root.
Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& m);

/// Sample mean per column and unbiased sample covariance across columns of a
/// [day x hour] history matrix. Throws if fewer than 2 rows.
Moments estimate_moments(const Eigen::MatrixXd& samples);

/// Joint moments of columns t and t-1. Throws if t < 1.
LaggedMoments lagged_moments(const Eigen::MatrixXd& samples, int t);

/// The distribution achieving a worst-case single-sided bound: two atoms.
struct TwoPoint {
  double x1 = 0.0, p1 = 0.0;
  double x2 = 0.0, p2 = 0.0;
};

/// inf over distributions with moments (mu, var) of P(X <= threshold).
double worst_case_prob_single(double mu, double var, double threshold,
                              TwoPoint* witness = nullptr);

/// inf over distributions with moments (mu, var) of P(lo <= X <= hi),
/// minimized numerically over three-point distributions. Accuracy 1e-4.
double worst_case_prob_double(double mu, double var, double lo, double hi);

}  // namespace emsched
