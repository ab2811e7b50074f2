// Independent reference quantities for the tests. Nothing here calls the
// library's solvers; the special functions come straight from <cmath>.
#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;
inline constexpr cplx I{0.0, 1.0};
inline constexpr double pi = std::numbers::pi;

// Total field over a sound-soft line x2 = h0 for exp(i alpha x1 - i beta x2),
// periodized (the exp(i alpha x1) factor removed).
inline cplx flat_total_periodized(double alpha, double k, double h0, double x2) {
  cplx b = k * k >= alpha * alpha ? cplx(std::sqrt(k * k - alpha * alpha), 0.0) : cplx(0.0, std::sqrt(alpha * alpha - k * k));
  return std::exp(-I * b * x2) - std::exp(-2.0 * I * b * h0) * std::exp(I * b * x2);
}

inline cplx hankel1_0(double z) { return {std::cyl_bessel_j(0.0, z), std::cyl_neumann(0.0, z)}; }

// (i/4)[H0(k|x-y|) - H0(k|x-y'|)], y' = (y1, -y2).
inline cplx half_space_green(double k, double x1, double x2, double y1, double y2) {
  double r = std::hypot(x1 - y1, x2 - y2), rm = std::hypot(x1 - y1, x2 + y2);
  return 0.25 * I * (hankel1_0(k * r) - hankel1_0(k * rm));
}

// C-infinity taper: 1 on |t| <= 1/2, 0 on |t| >= 1.
inline double window(double t) {
  t = std::abs(t);
  if (t <= 0.5) return 1.0;
  if (t >= 1.0) return 0.0;
  auto f = [](double s) { return s > 0 ? std::exp(-1.0 / s) : 0.0; };
  double s = (1.0 - t) / 0.5;
  return f(s) / (f(s) + f(1.0 - s));
}

// sqrt(L/2pi) sum_{|j| <= Jc} window(j/Jc) G(x + L j, y) exp(-i alpha L j).
inline cplx windowed_lattice_sum(double k, double L, double alpha, double x1, double x2, double y1, double y2,
                                 int Jc) {
  cplx s = 0.0;
  for (int j = -Jc; j <= Jc; ++j) {
    double w = window(static_cast<double>(j) / Jc);
    if (w == 0.0) continue;
    s += w * half_space_green(k, x1 + L * j, x2, y1, y2) * std::exp(-I * alpha * L * static_cast<double>(j));
  }
  return std::sqrt(L / (2.0 * pi)) * s;
}

// Propagating indices |alpha + ls n| < k, counted by brute force.
inline int propagating_count(double k, double ls, double alpha) {
  int n = 0;
  for (int j = -1000; j <= 1000; ++j) n += std::abs(alpha + ls * j) < k ? 1 : 0;
  return n;
}

// Synthetic g(alpha) = a(t) + sqrt(|t|) b(t), t = alpha - alpha0, with known coefficients.
struct SqrtModel {
  std::vector<double> a, b;
  double operator()(double t) const {
    double pa = 0.0, pb = 0.0, tn = 1.0;
    for (std::size_t n = 0; n < a.size(); ++n, tn *= t) {
      pa += a[n] * tn;
      pb += b[n] * tn;
    }
    return pa + std::sqrt(std::abs(t)) * pb;
  }
};

// Log-spaced distances in [lo, hi].
inline std::vector<double> log_spaced(double lo, double hi, int n) {
  std::vector<double> d;
  for (int i = 0; i < n; ++i) d.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  return d;
}

}  // namespace oracle
