#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "bloch_scatter/error.hpp"
#include "bloch_scatter/spectral.hpp"

using namespace bloch_scatter;

namespace {
constexpr cplx I{0.0, 1.0};
}

TEST_CASE("branch: nonnegative parts and the defining square") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> xi(-20.0, 20.0), k(0.1, 10.0);
  for (int t = 0; t < 1000; ++t) {
    BetaBranch b{k(rng), 1.0};
    double x = xi(rng);
    cplx e = b.exponent(x);
    CHECK(e.real() >= 0.0);
    CHECK(e.imag() >= 0.0);
    CHECK(std::abs(e * e - (b.k * b.k - x * x)) <= 1e-12 * std::max(1.0, x * x));
  }
  BetaBranch b{1.0, 1.0};
  CHECK(b.exponent(1.0) == cplx(0.0, 0.0));
  CHECK(b.beta(2, 0.5) == b.exponent(1.5));
}

TEST_CASE("singular set of the dual cell") {
  SingularSet s = singular_set_dual_cell(1.0, 1.0);
  REQUIRE(s.anomalies.size() == 1);
  CHECK(s.anomalies[0].alpha == 0.0);
  CHECK(s.anomalies[0].indices == std::vector<int>{-1, 1});

  // k = 0.5 puts both anomalies on the cell edge; only +1/2 belongs to (-1/2, 1/2].
  SingularSet e = singular_set_dual_cell(0.5, 1.0);
  REQUIRE(e.anomalies.size() == 1);
  CHECK(e.anomalies[0].alpha == doctest::Approx(0.5));

  SingularSet g = singular_set_dual_cell(1.3, 1.0);
  REQUIRE(g.anomalies.size() == 2);
  CHECK(g.anomalies[0].alpha == doctest::Approx(-0.3));
  CHECK(g.anomalies[1].alpha == doctest::Approx(0.3));
  CHECK(g.distance(0.25) == doctest::Approx(0.05));
  CHECK_THROWS_AS(singular_set(1.0, 1.0, 1.0, 0.0), Error);
}

TEST_CASE("DtN acts diagonally with symbol i beta") {
  BetaBranch b{2.3, 1.0};
  TraceCoeffs c(8);
  for (int j = -8; j <= 8; ++j) c[j] = cplx(j, 1.0);
  TraceCoeffs t = dtn_apply(c, b, 0.17);
  for (int j = -8; j <= 8; ++j) CHECK(std::abs(t[j] - I * b.exponent(0.17 + j) * c[j]) == 0.0);
}

TEST_CASE("closed-form linear exponential integral") {
  // Compare against composite Simpson at two regimes of omega h.
  for (double omega : {0.0, 0.3, 7.0, 40.0}) {
    double x0 = 0.2, x1 = 0.9, l0 = 0.4, l1 = -1.1;
    const int n = 20000;
    cplx s = 0.0;
    for (int i = 0; i <= n; ++i) {
      double x = x0 + (x1 - x0) * i / n;
      double l = l0 + (l1 - l0) * (x - x0) / (x1 - x0);
      double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
      s += w * l * std::exp(-I * omega * x);
    }
    s *= (x1 - x0) / (3.0 * n);
    CHECK(std::abs(linear_exp_integral(x0, x1, l0, l1, omega) - s) < 1e-11);
  }
}

TEST_CASE("trace basis reproduces P1 interpolants of Fourier modes") {
  SurfaceSpec s{Profile::flat(1.0), Profile(), 2.0 * std::numbers::pi};
  DomainSpec d{1.0, 2.0, 1.5};
  CellMesh m = build_cell_mesh(s, d, 0.05);
  TopTraceBasis basis(m, 12);
  // A constant trace has exactly one nonzero coefficient.
  Eigen::VectorXcd ones = Eigen::VectorXcd::Ones(basis.size());
  TraceCoeffs c = basis.coefficients(ones);
  CHECK(std::abs(c[0] - 1.0) < 1e-14);
  for (int j = 1; j <= 12; ++j) CHECK(std::abs(c[j]) < 1e-14);
  // Interpolated exp(i 2 x1): coefficient 2 close to one (P1 error O(h^2)).
  Eigen::VectorXcd e(basis.size());
  for (int a = 0; a < basis.size(); ++a) e(a) = std::exp(2.0 * I * basis.x1()[a]);
  TraceCoeffs ce = basis.coefficients(e);
  CHECK(std::abs(ce[2] - 1.0) < 1e-2);
  CHECK(std::abs(ce[1]) < 1e-12);
}

TEST_CASE("DtN matrix is T^H diag(-L i beta) T and rejects unsafe truncation") {
  SurfaceSpec s{Profile::flat(1.0), Profile(), 2.0 * std::numbers::pi};
  DomainSpec d{3.5, 2.0, 1.5};
  CellMesh m = build_cell_mesh(s, d, 0.2);
  BetaBranch b{3.5, 1.0};
  TopTraceBasis basis(m, 6);
  Eigen::MatrixXcd D = dtn_bilinear_matrix(basis, b, 0.2);
  Eigen::VectorXcd x = Eigen::VectorXcd::Random(basis.size());
  Eigen::VectorXcd y = Eigen::VectorXcd::Random(basis.size());
  TraceCoeffs cx = basis.coefficients(x), cy = basis.coefficients(y);
  cplx direct = 0.0;
  for (int j = -6; j <= 6; ++j) direct += -basis.period() * I * b.mode_exponent(j, 0.2) * cx[j] * std::conj(cy[j]);
  CHECK(std::abs(y.dot(D * x) - direct) < 1e-11 * std::abs(direct));
  TopTraceBasis small(m, 2);
  CHECK_THROWS_AS(dtn_bilinear_matrix(small, b, 0.2), Error);
}
