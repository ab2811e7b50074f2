#include "bloch_scatter/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bloch_scatter/error.hpp"

namespace bloch_scatter {

namespace {
constexpr cplx I{0.0, 1.0};
}

cplx BetaBranch::exponent(double xi) const {
  double q = k * k - xi * xi;
  if (q >= 0) return {std::sqrt(q), 0.0};
  return {0.0, std::sqrt(-q)};
}

int BetaBranch::default_truncation() const {
  return static_cast<int>(std::ceil((k + 5.0 * lambda_star) / lambda_star)) + 10;
}

std::vector<double> SingularSet::locations() const {
  std::vector<double> out;
  out.reserve(anomalies.size());
  for (const auto& a : anomalies) out.push_back(a.alpha);
  return out;
}

double SingularSet::distance(double alpha) const {
  // The full set is {lambda_star n +- k}; distance is periodic in alpha.
  double best = std::numeric_limits<double>::infinity();
  for (double s : {k, -k}) {
    double r = std::remainder(alpha - s, lambda_star);
    best = std::min(best, std::abs(r));
  }
  return best;
}

SingularSet singular_set(double k, double lambda_star, double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi >= lo)) {
    throw Error("spectral", "singular_set", "interval must be finite and ordered");
  }
  SingularSet set{k, lambda_star, lo, hi, {}};
  constexpr double tol = 1e-12;
  int n_lo = static_cast<int>(std::floor((lo - k) / lambda_star)) - 1;
  int n_hi = static_cast<int>(std::ceil((hi + k) / lambda_star)) + 1;
  std::vector<std::pair<double, int>> hits;
  for (int n = n_lo; n <= n_hi; ++n) {
    for (double s : {-k, k}) {
      double a = lambda_star * n + s;
      if (a > lo + tol && a <= hi + tol) hits.emplace_back(a, n);
    }
  }
  std::sort(hits.begin(), hits.end());
  for (auto [a, n] : hits) {
    if (!set.anomalies.empty() && std::abs(set.anomalies.back().alpha - a) <= tol * std::max(1.0, std::abs(a))) {
      auto& idx = set.anomalies.back().indices;
      if (std::find(idx.begin(), idx.end(), n) == idx.end()) idx.push_back(n);
      continue;
    }
    // Snap to the exact representative when it is within rounding of zero.
    set.anomalies.push_back({std::abs(a) < tol ? 0.0 : a, {n}});
  }
  for (auto& an : set.anomalies) std::sort(an.indices.begin(), an.indices.end());
  return set;
}

SingularSet singular_set_dual_cell(double k, double lambda_star) {
  return singular_set(k, lambda_star, -lambda_star / 2, lambda_star / 2);
}

TraceCoeffs dtn_apply(const TraceCoeffs& coeffs, const BetaBranch& branch, double alpha) {
  TraceCoeffs out(coeffs.J, coeffs.basis);
  for (int j = -coeffs.J; j <= coeffs.J; ++j) out[j] = I * branch.mode_exponent(j, alpha) * coeffs[j];
  return out;
}

cplx linear_exp_integral(double x0, double x1, double l0, double l1, double omega) {
  const double h = x1 - x0;
  const double theta = omega * h;
  cplx f0, f1;
  if (std::abs(theta) < 0.5) {
    // Taylor series of int_0^1 exp(-i theta s) ds and int_0^1 s exp(-i theta s) ds.
    cplx term = 1.0;  // (-i theta)^n / n!
    for (int n = 0; n < 30; ++n) {
      f0 += term / static_cast<double>(n + 1);
      f1 += term / static_cast<double>(n + 2);
      term *= -I * theta / static_cast<double>(n + 1);
    }
  } else {
    cplx e = std::exp(-I * theta);
    f0 = (1.0 - e) / (I * theta);
    f1 = (f0 - e) / (I * theta);
  }
  return h * std::exp(-I * omega * x0) * (l0 * f0 + (l1 - l0) * f1);
}

TopTraceBasis::TopTraceBasis(const CellMesh& mesh, int J) : J_(J), period_(mesh.period) {
  if (J < 1) throw Error("spectral", "trace_basis", "truncation J must be at least 1");
  const int nx = mesh.nx;
  vertices_.resize(static_cast<std::size_t>(nx));
  x1_.resize(static_cast<std::size_t>(nx) + 1);
  for (int a = 0; a <= nx; ++a) {
    int v = mesh.vertex(a, mesh.ny);
    if (a < nx) vertices_[static_cast<std::size_t>(a)] = v;
    x1_[static_cast<std::size_t>(a)] = mesh.vertices[static_cast<std::size_t>(v)].x1;
  }
  const double lambda_star = 2.0 * std::acos(-1.0) / period_;
  T_.resize(2 * J + 1, nx);
  for (int j = -J; j <= J; ++j) {
    const double omega = lambda_star * j;
    for (int a = 0; a < nx; ++a) {
      auto ua = static_cast<std::size_t>(a);
      // Right half of hat a, then its left half (wrapping for the first dof).
      cplx sum = linear_exp_integral(x1_[ua], x1_[ua + 1], 1.0, 0.0, omega);
      if (a > 0) {
        sum += linear_exp_integral(x1_[ua - 1], x1_[ua], 0.0, 1.0, omega);
      } else {
        auto last = static_cast<std::size_t>(nx);
        sum += linear_exp_integral(x1_[last - 1], x1_[last], 0.0, 1.0, omega);
      }
      T_(j + J, a) = sum / period_;
    }
  }
}

TraceCoeffs TopTraceBasis::coefficients(const Eigen::VectorXcd& top_values) const {
  Eigen::VectorXcd c = T_ * top_values;
  TraceCoeffs out(J_);
  for (int j = -J_; j <= J_; ++j) out[j] = c(j + J_);
  return out;
}

Eigen::VectorXcd TopTraceBasis::load(const TraceCoeffs& g) const {
  if (g.J != J_) throw Error("spectral", "trace_load", "truncation mismatch between trace and basis");
  Eigen::VectorXcd gv(2 * J_ + 1);
  for (int j = -J_; j <= J_; ++j) gv(j + J_) = g[j];
  return period_ * (T_.adjoint() * gv);
}

Eigen::MatrixXcd dtn_bilinear_matrix(const TopTraceBasis& basis, const BetaBranch& branch, double alpha) {
  const int J = basis.J();
  for (int j : {J + 1, -J - 1}) {
    if (std::abs(alpha + branch.lambda_star * j) < branch.k) {
      std::ostringstream os;
      os << "truncation J = " << J << " drops the propagating mode " << j << " at alpha = " << alpha;
      throw Error("spectral", "dtn_bilinear_matrix", os.str());
    }
  }
  Eigen::VectorXcd symbol(2 * J + 1);
  for (int j = -J; j <= J; ++j) symbol(j + J) = -basis.period() * I * branch.mode_exponent(j, alpha);
  const Eigen::MatrixXcd& T = basis.matrix();
  return T.adjoint() * symbol.asDiagonal() * T;
}

}  // namespace bloch_scatter
