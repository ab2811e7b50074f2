#pragma once

#include <complex>
#include <vector>

#include <Eigen/Core>

#include "bloch_scatter/geometry.hpp"

namespace bloch_scatter {

using cplx = std::complex<double>;

/// Mode exponents for wavenumber k on a lattice with dual period lambda_star.
///
/// Convention used by every solver component: a field w(alpha, .) is
/// alpha-quasi-periodic, w(x1 + L, x2) = exp(i alpha L) w(x1, x2), and its
/// periodized form is v = exp(-i alpha x1) w. Fourier mode j of v carries the
/// horizontal wavenumber xi_j = alpha + lambda_star * j and the vertical
/// exponent exponent(xi_j) = beta(-j, alpha).
struct BetaBranch {
  double k = 1.0;
  double lambda_star = 1.0;

  /// sqrt(k^2 - |lambda_star j - alpha|^2) with Re >= 0 and Im >= 0.
  cplx beta(int j, double alpha) const { return exponent(lambda_star * j - alpha); }
  /// sqrt(k^2 - xi^2) with Re >= 0 and Im >= 0.
  cplx exponent(double xi) const;
  /// Exponent of periodized mode j at quasi-momentum alpha.
  cplx mode_exponent(int j, double alpha) const { return exponent(alpha + lambda_star * j); }
  /// Smallest truncation that keeps every propagating mode plus ten evanescent ones.
  int default_truncation() const;
};

struct Anomaly {
  double alpha = 0.0;
  std::vector<int> indices;  // every n with |lambda_star n - alpha| = k
  int multiplicity() const { return static_cast<int>(indices.size()); }
};

/// Wood anomalies {alpha : exists n, |lambda_star n - alpha| = k} inside (lo, hi].
struct SingularSet {
  double k = 1.0;
  double lambda_star = 1.0;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<Anomaly> anomalies;  // sorted by alpha

  bool empty() const { return anomalies.empty(); }
  std::vector<double> locations() const;
  /// Distance from alpha to the nearest anomaly of the full (periodic) set.
  double distance(double alpha) const;
};

SingularSet singular_set(double k, double lambda_star, double lo, double hi);
/// Anomalies of the dual cell W* = (-lambda_star/2, lambda_star/2].
SingularSet singular_set_dual_cell(double k, double lambda_star);

/// Fourier coefficients c(j), j = -J..J, of a trace on Gamma_H. In the
/// quasi-periodic basis mode j is exp(i(alpha + lambda_star j) x1); in the
/// periodized basis it is exp(i lambda_star j x1). Both carry the same
/// DtN symbol.
struct TraceCoeffs {
  enum class Basis { quasi_periodic, periodized };

  int J = 1;
  Basis basis = Basis::periodized;
  std::vector<cplx> c;

  explicit TraceCoeffs(int J_ = 1, Basis b = Basis::periodized) : J(J_), basis(b), c(2 * J_ + 1, 0.0) {}
  cplx& operator[](int j) { return c[static_cast<std::size_t>(j + J)]; }
  const cplx& operator[](int j) const { return c[static_cast<std::size_t>(j + J)]; }
};

/// i * beta-symbol applied mode by mode.
TraceCoeffs dtn_apply(const TraceCoeffs& coeffs, const BetaBranch& branch, double alpha);

/// Exact Fourier coefficients of the piecewise-linear hat functions that live
/// on the top boundary of a cell mesh (periodic identification included).
/// Row j + J, column a holds (1/L) * integral_W phi_a(x1) exp(-i lambda_star j x1) dx1.
class TopTraceBasis {
 public:
  TopTraceBasis(const CellMesh& mesh, int J);

  int J() const { return J_; }
  int size() const { return static_cast<int>(vertices_.size()); }
  double period() const { return period_; }
  /// Mesh vertex index of top dof a (a = 0..nx-1, left to right).
  int vertex(int a) const { return vertices_[static_cast<std::size_t>(a)]; }
  const std::vector<double>& x1() const { return x1_; }
  const Eigen::MatrixXcd& matrix() const { return T_; }

  /// Fourier coefficients of the P1 trace with the given top-dof values.
  TraceCoeffs coefficients(const Eigen::VectorXcd& top_values) const;
  /// sum_j g(j) * L * conj(t_a(j)) for every top dof a: the load vector of the
  /// trace sum_j g(j) exp(i lambda_star j x1) tested against the hats.
  Eigen::VectorXcd load(const TraceCoeffs& g) const;

 private:
  int J_;
  double period_;
  std::vector<int> vertices_;
  std::vector<double> x1_;
  Eigen::MatrixXcd T_;
};

/// integral_{x0}^{x1} l(x) exp(-i omega x) dx for the linear l with l(x0) = l0, l(x1) = l1.
cplx linear_exp_integral(double x0, double x1, double l0, double l1, double omega);

/// Dense matrix M[a, b] = -L sum_{|j| <= J} i beta_j t_b(j) conj(t_a(j)) on the
/// top dofs: the discrete form of -integral T[psi] conj(phi) ds.
Eigen::MatrixXcd dtn_bilinear_matrix(const TopTraceBasis& basis, const BetaBranch& branch, double alpha);

}  // namespace bloch_scatter
