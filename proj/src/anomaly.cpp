#include "bloch_scatter/anomaly.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/SVD>

#include "bloch_scatter/error.hpp"

namespace bloch_scatter {

namespace {

[[noreturn]] void fail(const std::string& op, const std::string& msg) { throw Error("anomaly", op, msg); }

bool held_out(std::size_t i) { return i % 4 == 3; }

struct LeastSquares {
  Eigen::VectorXd coeffs;
  Eigen::VectorXd se;
  double condition = 0.0;
};

// Solves design * c ~ y on the fitting rows. Columns are expected to be O(1).
LeastSquares solve_ls(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, const std::string& op) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  LeastSquares out;
  out.condition = s(s.size() - 1) > 0 ? s(0) / s(s.size() - 1) : std::numeric_limits<double>::infinity();
  if (!(out.condition < 1e12)) {
    std::ostringstream os;
    os << "design matrix condition number " << out.condition
       << " is too large; the samples are too clustered, spread them over a wider range";
    fail(op, os.str());
  }
  out.coeffs = svd.solve(y);
  const Eigen::Index n = design.rows(), p = design.cols();
  double rss = (design * out.coeffs - y).squaredNorm();
  double s2 = n > p ? rss / static_cast<double>(n - p) : 0.0;
  Eigen::MatrixXd V = svd.matrixV();
  Eigen::VectorXd inv2 = s.array().square().inverse();
  Eigen::MatrixXd cov = s2 * V * inv2.asDiagonal() * V.transpose();
  out.se = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  return out;
}

using Basis = std::function<double(int, double)>;  // column c at scaled abscissa t

struct GenericFit {
  LeastSquares ls;
  double residual = 0.0;
  double fit_residual = 0.0;
};

GenericFit generic_fit(const std::vector<double>& t, const std::vector<double>& g, int columns, const Basis& basis,
                       const std::string& op) {
  std::vector<std::size_t> fit_rows;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (!held_out(i)) fit_rows.push_back(i);
  if (fit_rows.size() < static_cast<std::size_t>(columns)) fail(op, "not enough samples for the requested degree");
  Eigen::MatrixXd design(static_cast<Eigen::Index>(fit_rows.size()), columns);
  Eigen::VectorXd y(static_cast<Eigen::Index>(fit_rows.size()));
  for (std::size_t r = 0; r < fit_rows.size(); ++r) {
    for (int c = 0; c < columns; ++c) design(static_cast<Eigen::Index>(r), c) = basis(c, t[fit_rows[r]]);
    y(static_cast<Eigen::Index>(r)) = g[fit_rows[r]];
  }
  GenericFit out;
  out.ls = solve_ls(design, y, op);
  double scale = 0.0;
  for (double v : g) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) scale = 1.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    double pred = 0.0;
    for (int c = 0; c < columns; ++c) pred += out.ls.coeffs(c) * basis(c, t[i]);
    double e = std::abs(pred - g[i]) / scale;
    if (held_out(i))
      out.residual = std::max(out.residual, e);
    else
      out.fit_residual = std::max(out.fit_residual, e);
  }
  return out;
}

void check_count(const AlphaSamples& s, int P, const std::string& op) {
  if (P < 0) fail(op, "degree must be nonnegative");
  std::size_t need = static_cast<std::size_t>(2 * (P + 1) + 4);
  if (s.alpha.size() < need) {
    std::ostringstream os;
    os << "need at least " << need << " samples for P = " << P << ", got " << s.alpha.size();
    fail(op, os.str());
  }
}

}  // namespace

void AlphaSamples::validate() const {
  if (alpha.size() != g.size()) fail("samples", "alpha and g differ in length");
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    double d = sign() * (alpha[i] - alpha0);
    if (!(d > 0)) {
      std::ostringstream os;
      os << "sample alpha = " << alpha[i] << " is not strictly on the declared side of " << alpha0;
      fail("samples", os.str());
    }
    if (i > 0 && !(alpha[i] > alpha[i - 1])) fail("samples", "samples must be sorted by alpha");
  }
}

double AnomalyFit::operator()(double alpha) const {
  double t = alpha - alpha0;
  double sigma = side == Side::right ? 1.0 : -1.0;
  double r = std::sqrt(std::max(0.0, sigma * t));
  double s = 0.0, p = 1.0;
  for (Eigen::Index n = 0; n < a.size(); ++n, p *= t) s += a(n) * p;
  p = 1.0;
  for (Eigen::Index n = 0; n < b.size(); ++n, p *= t) s += r * b(n) * p;
  return s;
}

AnomalyFit fit_sqrt_model(const AlphaSamples& samples, int P) {
  samples.validate();
  check_count(samples, P, "fit_sqrt_model");
  double delta = 0.0;
  for (double a : samples.alpha) delta = std::max(delta, std::abs(a - samples.alpha0));
  std::vector<double> t;
  for (double a : samples.alpha) t.push_back(samples.sign() * (a - samples.alpha0) / delta);  // in (0, 1]
  // Column n <= P: (sigma t)^n; column P+1+n: sqrt(sigma t) (sigma t)^n, in scaled units.
  Basis basis = [P](int c, double s) {
    return c <= P ? std::pow(s, c) : std::sqrt(s) * std::pow(s, c - P - 1);
  };
  GenericFit f = generic_fit(t, samples.g, 2 * (P + 1), basis, "fit_sqrt_model");

  AnomalyFit out;
  out.alpha0 = samples.alpha0;
  out.side = samples.side;
  out.P = P;
  out.a.resize(P + 1);
  out.b.resize(P + 1);
  out.a_se.resize(P + 1);
  out.b_se.resize(P + 1);
  const double sg = samples.sign();
  for (int n = 0; n <= P; ++n) {
    // (sigma t_scaled)^n = (sigma (alpha - alpha0) / delta)^n
    double fa = std::pow(sg, n) / std::pow(delta, n);
    double fb = std::pow(sg, n) / (std::pow(delta, n) * std::sqrt(delta));
    out.a(n) = f.ls.coeffs(n) * fa;
    out.a_se(n) = f.ls.se(n) * std::abs(fa);
    out.b(n) = f.ls.coeffs(P + 1 + n) * fb;
    out.b_se(n) = f.ls.se(P + 1 + n) * std::abs(fb);
  }
  out.residual = f.residual;
  out.fit_residual = f.fit_residual;
  out.condition = f.ls.condition;
  out.accepted = out.residual <= 0.1;
  return out;
}

AnomalyFit fit_polynomial(const AlphaSamples& samples, int P) {
  samples.validate();
  check_count(samples, P, "fit_polynomial");
  double delta = 0.0;
  for (double a : samples.alpha) delta = std::max(delta, std::abs(a - samples.alpha0));
  std::vector<double> t;
  for (double a : samples.alpha) t.push_back(samples.sign() * (a - samples.alpha0) / delta);
  const int cols = 2 * (P + 1);
  // Shifted Chebyshev columns on (0, 1] keep the conditioning moderate.
  Basis basis = [](int c, double s) { return std::cos(c * std::acos(2.0 * s - 1.0)); };
  GenericFit f = generic_fit(t, samples.g, cols, basis, "fit_polynomial");
  AnomalyFit out;
  out.alpha0 = samples.alpha0;
  out.side = samples.side;
  out.P = P;
  out.residual = f.residual;
  out.fit_residual = f.fit_residual;
  out.condition = f.ls.condition;
  out.accepted = out.residual <= 0.1;
  return out;
}

IntervalFit fit_interval_model(const std::vector<double>& alpha, const std::vector<double>& g, double lo, double hi,
                               int P) {
  if (alpha.size() != g.size()) fail("fit_interval_model", "alpha and g differ in length");
  if (!(hi > lo)) fail("fit_interval_model", "interval must have positive length");
  for (double a : alpha)
    if (!(a > lo && a < hi)) fail("fit_interval_model", "samples must lie strictly inside the interval");
  const double len = hi - lo;
  std::vector<double> t;
  for (double a : alpha) t.push_back((a - lo) / len);  // (0, 1)
  const int q = P + 1;
  IntervalFit out;
  out.lo = lo;
  out.hi = hi;
  out.P = P;
  auto poly = [](int n, double s) { return std::cos(n * std::acos(2.0 * s - 1.0)); };
  Basis joint = [&](int c, double s) {
    int block = c / q, n = c % q;
    double w = block == 0 ? 1.0 : block == 1 ? std::sqrt(s) : std::sqrt(1.0 - s);
    return w * poly(n, s);
  };
  GenericFit f = generic_fit(t, g, 3 * q, joint, "fit_interval_model");
  out.coeffs = f.ls.coeffs;
  out.residual = f.residual;
  Basis at_lo = [&](int c, double s) { return (c < q ? 1.0 : std::sqrt(s)) * poly(c % q, s); };
  Basis at_hi = [&](int c, double s) { return (c < q ? 1.0 : std::sqrt(1.0 - s)) * poly(c % q, s); };
  out.residual_lo = generic_fit(t, g, 2 * q, at_lo, "fit_interval_model").residual;
  out.residual_hi = generic_fit(t, g, 2 * q, at_hi, "fit_interval_model").residual;
  return out;
}

double fitted_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) fail("fitted_slope", "need at least two points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

double estimate_exponent(const AlphaSamples& samples, int P) {
  samples.validate();
  if (samples.alpha.size() < 8) fail("estimate_exponent", "need at least 8 samples");
  double dmin = std::numeric_limits<double>::infinity(), dmax = 0.0;
  for (double a : samples.alpha) {
    double d = std::abs(a - samples.alpha0);
    dmin = std::min(dmin, d);
    dmax = std::max(dmax, d);
  }
  if (std::log10(dmax / dmin) < 1.5) {
    std::ostringstream os;
    os << "samples span " << std::log10(dmax / dmin) << " decades of distance to alpha0; need at least 1.5";
    fail("estimate_exponent", os.str());
  }
  AnomalyFit pre = fit_sqrt_model(samples, P);
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < samples.alpha.size(); ++i) {
    double r = std::abs(samples.g[i] - pre.a(0));
    if (r > 0) {
      lx.push_back(std::log(std::abs(samples.alpha[i] - samples.alpha0)));
      ly.push_back(std::log(r));
    }
  }
  if (lx.size() < 2) fail("estimate_exponent", "samples coincide with the analytic part; no exponent to estimate");
  return fitted_slope(lx, ly);
}

QuadratureStudy quadrature_study(const std::function<Eigen::VectorXcd(const AlphaGrid&)>& field, double lambda_star,
                                 const SingularSet& anomalies, const std::vector<int>& Ms) {
  if (Ms.empty()) fail("quadrature_study", "empty M list");
  QuadratureStudy out;
  const int Mmax = *std::max_element(Ms.begin(), Ms.end());
  out.reference_M = 4 * Mmax;
  Eigen::VectorXcd f2 = field(make_alpha_grid(2 * Mmax, lambda_star, anomalies, GridMode::graded));
  Eigen::VectorXcd f4 = field(make_alpha_grid(4 * Mmax, lambda_star, anomalies, GridMode::graded));
  Eigen::VectorXcd ref = f4 + (f4 - f2) / 3.0;
  const double rn = ref.norm();
  for (GridMode mode : {GridMode::uniform, GridMode::graded}) {
    std::vector<double> lx, ly;
    for (int M : Ms) {
      double e = (field(make_alpha_grid(M, lambda_star, anomalies, mode)) - ref).norm() / rn;
      out.rows.push_back({mode, M, e});
      lx.push_back(std::log(static_cast<double>(M)));
      ly.push_back(-std::log(e));
    }
    double slope = Ms.size() > 1 ? fitted_slope(lx, ly) : 0.0;
    (mode == GridMode::uniform ? out.order_uniform : out.order_graded) = slope;
  }
  return out;
}

}  // namespace bloch_scatter
