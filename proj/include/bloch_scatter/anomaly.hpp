#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bloch_scatter/bloch.hpp"

namespace bloch_scatter {

enum class Side { left, right };

/// Samples (alpha_i, g_i) of a real functional on one side of an anomaly.
struct AlphaSamples {
  std::string functional;
  double alpha0 = 0.0;
  Side side = Side::right;
  std::vector<double> alpha;
  std::vector<double> g;

  /// Sorted, strictly on the declared side, equal lengths. Throws otherwise.
  void validate() const;
  double sign() const { return side == Side::right ? 1.0 : -1.0; }
};

struct AnomalyFit {
  double alpha0 = 0.0;
  Side side = Side::right;
  int P = 0;
  Eigen::VectorXd a;     // analytic coefficients of (alpha - alpha0)^n
  Eigen::VectorXd b;     // singular coefficients of sqrt(sigma (alpha - alpha0)) (alpha - alpha0)^n
  Eigen::VectorXd a_se;  // standard errors
  Eigen::VectorXd b_se;
  double residual = 0.0;      // max held-out misfit relative to max |g|
  double fit_residual = 0.0;  // same on the fitting set
  double condition = 0.0;     // of the scaled design matrix
  bool accepted = false;
  double exponent_estimate = 0.0;

  double operator()(double alpha) const;
};

/// Least-squares fit of g ~ sum a_n t^n + sqrt(sigma t) sum b_n t^n, t = alpha - alpha0,
/// with every 4th sample held out for validation. Requires at least 2(P+1)+4 samples.
AnomalyFit fit_sqrt_model(const AlphaSamples& samples, int P = 3);

/// Comparison model: a pure polynomial with the same parameter count 2(P+1).
/// Only the residuals and the condition number are filled in.
AnomalyFit fit_polynomial(const AlphaSamples& samples, int P = 3);

/// Joint model on an interval between two anomalies:
/// g ~ p0(t) + sqrt(alpha - lo) p1(t) + sqrt(hi - alpha) p2(t), each p of degree P.
struct IntervalFit {
  double lo = 0.0, hi = 0.0;
  int P = 0;
  Eigen::VectorXd coeffs;
  double residual = 0.0;       // held-out, relative to max |g|
  double residual_lo = 0.0;    // single-endpoint model at lo, same data and protocol
  double residual_hi = 0.0;
};

IntervalFit fit_interval_model(const std::vector<double>& alpha, const std::vector<double>& g, double lo, double hi,
                               int P = 3);

/// Slope of log|g - a0| against log|alpha - alpha0|, with a0 from a
/// preliminary square-root fit. Needs at least 8 samples spanning 1.5 decades.
double estimate_exponent(const AlphaSamples& samples, int P = 1);

struct QuadratureRow {
  GridMode mode = GridMode::uniform;
  int M = 0;
  double error = 0.0;
};

struct QuadratureStudy {
  std::vector<QuadratureRow> rows;
  double order_uniform = 0.0;  // least-squares slope of -log(error) against log M
  double order_graded = 0.0;
  int reference_M = 0;
};

/// `field(grid)` returns the synthesized field on a fixed window for one grid.
/// The reference is the Richardson extrapolation (order 2) of graded grids at
/// 2x and 4x the largest M.
QuadratureStudy quadrature_study(const std::function<Eigen::VectorXcd(const AlphaGrid&)>& field, double lambda_star,
                                 const SingularSet& anomalies, const std::vector<int>& Ms);

/// Least-squares slope of y against x.
double fitted_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace bloch_scatter
