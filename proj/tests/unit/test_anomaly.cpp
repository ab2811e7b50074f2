#include <doctest.h>

#include <cmath>

#include "../oracles.hpp"
#include "bloch_scatter/anomaly.hpp"
#include "bloch_scatter/error.hpp"

using namespace bloch_scatter;

namespace {

AlphaSamples sampled(const oracle::SqrtModel& g, Side side, double lo, double hi, int n, double alpha0 = 0.2) {
  AlphaSamples s{"synthetic", alpha0, side, {}, {}};
  double sg = side == Side::right ? 1.0 : -1.0;
  for (double d : oracle::log_spaced(lo, hi, n)) s.alpha.push_back(alpha0 + sg * d);
  std::sort(s.alpha.begin(), s.alpha.end());
  for (double a : s.alpha) s.g.push_back(g(a - alpha0));
  return s;
}

}  // namespace

TEST_CASE("square-root model recovers known coefficients") {
  oracle::SqrtModel g{{1.0, -0.5, 0.25, 0.1}, {0.7, 0.3, -0.2, 0.05}};
  for (Side side : {Side::left, Side::right}) {
    AnomalyFit f = fit_sqrt_model(sampled(g, side, 1e-5, 1e-1, 24), 3);
    CHECK(f.accepted);
    CHECK(f.residual < 1e-10);
    CHECK(f.a(0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(f.b(0) == doctest::Approx(0.7).epsilon(1e-8));
    CHECK(f(0.2 + (side == Side::right ? 0.05 : -0.05)) == doctest::Approx(g(side == Side::right ? 0.05 : -0.05)));
  }
}

TEST_CASE("polynomial comparison fails where the square root fits") {
  oracle::SqrtModel g{{1.0, 0.2, 0.0, 0.0}, {0.5, 0.0, 0.0, 0.0}};
  AlphaSamples s = sampled(g, Side::right, 1e-5, 1e-1, 24);
  AnomalyFit f = fit_sqrt_model(s, 3), p = fit_polynomial(s, 3);
  CHECK(p.residual > 100.0 * f.residual);
  CHECK(p.P == f.P);
  CHECK(p.condition < 1e12);
}

TEST_CASE("analytic data leaves the singular coefficient insignificant") {
  oracle::SqrtModel g{{1.0, 0.4, -0.3, 0.2}, {0.0, 0.0, 0.0, 0.0}};
  AnomalyFit f = fit_sqrt_model(sampled(g, Side::right, 1e-4, 1e-1, 24), 3);
  CHECK(std::abs(f.b(0)) < 1e-8);
}

TEST_CASE("exponent estimate tracks the leading power") {
  for (double p : {0.5, 1.0, 1.5}) {
    AlphaSamples s{"power", 0.0, Side::right, oracle::log_spaced(1e-6, 1e-4, 12), {}};
    for (double a : s.alpha) s.g.push_back(2.0 + 3.0 * std::pow(a, p));
    CHECK(estimate_exponent(s, 1) == doctest::Approx(p).epsilon(0.05));
  }
  AlphaSamples narrow{"narrow", 0.0, Side::right, oracle::log_spaced(1e-3, 2e-3, 12), {}};
  for (double a : narrow.alpha) narrow.g.push_back(std::sqrt(a));
  CHECK_THROWS_AS(estimate_exponent(narrow, 1), Error);
}

TEST_CASE("interval model needs both endpoint singularities") {
  std::vector<double> a, g;
  for (int i = 0; i < 48; ++i) {
    double s = (i + 0.5) / 48.0;
    double x = 0.5 * (1.0 - std::cos(3.141592653589793 * s));
    a.push_back(x);
    g.push_back(1.0 + x + 0.8 * std::sqrt(x) * (1.0 - x) + 0.6 * std::sqrt(1.0 - x) * (1.0 + 0.5 * x));
  }
  IntervalFit f = fit_interval_model(a, g, 0.0, 1.0, 3);
  CHECK(f.residual < 1e-8);
  CHECK(f.residual_lo > 100.0 * f.residual);
  CHECK(f.residual_hi > 100.0 * f.residual);
}

TEST_CASE("sample validation") {
  AlphaSamples s{"bad", 0.0, Side::right, {-0.1, 0.1}, {1.0, 2.0}};
  CHECK_THROWS_AS(s.validate(), Error);
  AlphaSamples few{"few", 0.0, Side::right, {0.1, 0.2, 0.3}, {1.0, 2.0, 3.0}};
  CHECK_THROWS_AS(fit_sqrt_model(few, 3), Error);
}

TEST_CASE("quadrature study on a synthetic square-root integrand") {
  // field(grid) = sum_m w_m sqrt|alpha_m - 0.3| f(alpha_m), a scalar; the
  // graded rule should converge at second order, the uniform one near 3/2.
  SingularSet s = singular_set(1.3, 1.0, -0.5, 0.5);
  auto field = [](const AlphaGrid& g) {
    Eigen::VectorXcd out(1);
    out(0) = 0.0;
    for (int m = 0; m < g.size(); ++m)
      out(0) += g.weights[m] * (std::sqrt(std::abs(g.nodes[m] - 0.3)) * std::cos(g.nodes[m]) +
                                std::sqrt(std::abs(g.nodes[m] + 0.3)));
    return out;
  };
  QuadratureStudy st = quadrature_study(field, 1.0, s, {32, 64, 128, 256});
  CHECK(st.order_graded >= 1.9);
  CHECK(st.order_uniform > 1.3);
  CHECK(st.order_uniform < 1.7);
  REQUIRE(st.rows.size() == 8);
  for (const auto& u : st.rows)
    for (const auto& g : st.rows)
      if (u.mode == GridMode::uniform && g.mode == GridMode::graded && u.M == g.M) CHECK(g.error <= u.error);
}
