#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "bloch_scatter/bloch.hpp"
#include "bloch_scatter/error.hpp"

using namespace bloch_scatter;

namespace {

constexpr cplx I{0.0, 1.0};
const double L = 2.0 * std::numbers::pi;

PhysicalField random_field(int R, int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  PhysicalField u;
  u.cell_radius = R;
  u.values.resize(2 * R + 1, n);
  for (Eigen::Index i = 0; i < u.values.size(); ++i) u.values.data()[i] = cplx(g(rng), g(rng));
  return u;
}

}  // namespace

TEST_CASE("uniform grid: midpoints with equal weights") {
  AlphaGrid g = make_alpha_grid(8, 1.0, SingularSet{}, GridMode::uniform);
  REQUIRE(g.size() == 8);
  double w = 0.0;
  for (int m = 0; m < 8; ++m) {
    CHECK(g.nodes[m] == doctest::Approx(-0.5 + (m + 0.5) / 8));
    w += g.weights[m];
  }
  CHECK(w == doctest::Approx(1.0));
  CHECK(g.nearest(0.49) == 7);
  CHECK(g.nearest(0.53) == 0);  // wraps around the cell
}

TEST_CASE("graded grid clusters like M^-2 at anomalies and integrates the singularity") {
  SingularSet s = singular_set_dual_cell(1.3, 1.0);  // anomalies at +-0.3
  for (int M : {32, 64}) {
    AlphaGrid g = make_alpha_grid(M, 1.0, s, GridMode::graded);
    REQUIRE(g.size() == M);
    double wsum = 0.0, dmin = 1.0;
    for (int m = 0; m < M; ++m) {
      wsum += g.weights[m];
      dmin = std::min(dmin, s.distance(g.nodes[m]));
      if (m > 0) CHECK(g.nodes[m] > g.nodes[m - 1]);
    }
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(dmin < 4.0 / (M * M));
    // int sqrt|alpha - 0.3| + sqrt|alpha + 0.3| over W*, exact value below.
    double q = 0.0;
    for (int m = 0; m < M; ++m)
      q += g.weights[m] * (std::sqrt(std::abs(g.nodes[m] - 0.3)) + std::sqrt(std::abs(g.nodes[m] + 0.3)));
    double half = (2.0 / 3.0) * (std::pow(0.8, 1.5) + std::pow(0.2, 1.5));
    CHECK(std::abs(q - 2.0 * half) < 2.0 / (M * M));
  }
  CHECK_THROWS_AS(make_alpha_grid(3, 1.0, s, GridMode::graded), Error);
}

TEST_CASE("transform algebra on a random 7-cell field") {
  PhysicalField u = random_field(3, 25, 1);
  AlphaGrid g = make_alpha_grid(64, 1.0, SingularSet{}, GridMode::uniform);
  BlochField w = bloch_forward(u, g, L);
  PhysicalField back = bloch_inverse(w, 3, L);
  CHECK((back.values - u.values).norm() / u.values.norm() <= 1e-12);
  CHECK(std::abs(std::sqrt(w.squared_norm()) - u.values.norm()) / u.values.norm() <= 1e-12);
  CHECK_FALSE(back.aliasing_warning);
  CHECK(bloch_inverse(w, 40, L).aliasing_warning);
}

TEST_CASE("quasi-periodic and periodized representations convert exactly") {
  PhysicalField u = random_field(2, 5, 2);
  AlphaGrid g = make_alpha_grid(16, 1.0, SingularSet{}, GridMode::uniform);
  BlochField w = bloch_forward(u, g, L);
  std::vector<double> x1{-3.0, -1.0, 0.0, 0.5, 3.1};
  BlochField v = w;
  v.to_periodized(x1);
  CHECK(std::abs(v.values(3, 1) - std::exp(-I * g.nodes[3] * x1[1]) * w.values(3, 1)) < 1e-15);
  v.to_quasi_periodic(x1);
  CHECK((v.values - w.values).norm() < 1e-13);
  v.to_periodized(x1);
  CHECK_THROWS_AS(bloch_inverse(v, 2, L), Error);
}

TEST_CASE("a single lattice translate maps to a pure phase") {
  PhysicalField u;
  u.cell_radius = 2;
  u.values = Eigen::MatrixXcd::Zero(5, 1);
  u.cell(1)(0) = 1.0;
  AlphaGrid g = make_alpha_grid(8, 1.0, SingularSet{}, GridMode::uniform);
  BlochField w = bloch_forward(u, g, L);
  for (int m = 0; m < 8; ++m)
    CHECK(std::abs(w.values(m, 0) - std::sqrt(L / (2 * std::numbers::pi)) * std::exp(-I * g.nodes[m] * L)) < 1e-15);
}
