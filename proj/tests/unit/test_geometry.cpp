#include <doctest.h>

#include <cmath>
#include <numbers>

#include <Eigen/LU>

#include "bloch_scatter/error.hpp"
#include "bloch_scatter/geometry.hpp"

using namespace bloch_scatter;

namespace {
const double L = 2.0 * std::numbers::pi;
SurfaceSpec grating(Profile delta = Profile()) { return {Profile::sine(1.0, 0.3, 1.0), std::move(delta), L}; }
}  // namespace

TEST_CASE("mesh respects the edge bound and the periodic layout") {
  SurfaceSpec s = grating();
  DomainSpec d{1.0, 2.5, 2.0};
  CellMesh m = build_cell_mesh(s, d, 0.2);
  CHECK_NOTHROW(m.validate());
  CHECK(m.max_edge_length() <= 0.2 + 1e-12);
  for (int t = 0; t < m.num_triangles(); ++t) CHECK(m.triangle_area(t) > 0);
  for (auto [l, r] : m.periodic_pairs) {
    CHECK(m.vertices[r].x1 - m.vertices[l].x1 == doctest::Approx(L));
    CHECK(m.vertices[r].x2 == doctest::Approx(m.vertices[l].x2).epsilon(1e-14));
  }
  for (int c = 0; c <= m.nx; ++c) {
    const Point& b = m.vertices[m.vertex(c, 0)];
    CHECK(b.x2 == doctest::Approx(s.zeta(b.x1)).epsilon(1e-14));
    CHECK(m.vertices[m.vertex(c, m.ny)].x2 == doctest::Approx(2.5));
  }
}

TEST_CASE("mesh total area matches the integral of H - zeta") {
  SurfaceSpec s = grating();
  DomainSpec d{1.0, 2.5, 2.0};
  CellMesh m = build_cell_mesh(s, d, 0.1);
  double area = 0.0;
  for (int t = 0; t < m.num_triangles(); ++t) area += m.triangle_area(t);
  // The sine integrates to zero over a period; the P1 boundary cuts chords.
  CHECK(area == doctest::Approx(L * 1.5).epsilon(2e-3));
}

TEST_CASE("perturbation map is identity off the support and hits zeta_p") {
  SurfaceSpec s = grating(Profile::bump(0.0, 1.5, 0.2));
  DomainSpec d{1.0, 2.5, 2.2};
  PerturbationMap map(s, d);
  Point far{2.5, 1.4};
  CHECK(map.map(far).x2 == doctest::Approx(far.x2));
  Point above{0.1, 2.3};
  CHECK(map.map_or_identity(above).x2 == doctest::Approx(2.3));
  for (double x1 : {-1.0, -0.3, 0.0, 0.7}) {
    Point on{x1, s.zeta(x1)};
    CHECK(map.map(on).x2 == doctest::Approx(s.zeta_p(x1)).epsilon(1e-13));
    Point top{x1, d.H0};
    CHECK(map.map(top).x2 == doctest::Approx(d.H0));
  }
}

TEST_CASE("Jacobian coefficients match finite differences of the map") {
  SurfaceSpec s = grating(Profile::bump(0.0, 1.5, 0.2));
  DomainSpec d{1.0, 2.5, 2.2};
  PerturbationMap map(s, d);
  Point x{0.4, 1.6};
  const double e = 1e-6;
  Eigen::Matrix2d g = map.gradient(x);
  Point px = map.map({x.x1 + e, x.x2}), mx = map.map({x.x1 - e, x.x2});
  Point py = map.map({x.x1, x.x2 + e}), my = map.map({x.x1, x.x2 - e});
  CHECK(g(1, 0) == doctest::Approx((px.x2 - mx.x2) / (2 * e)).epsilon(1e-7));
  CHECK(g(1, 1) == doctest::Approx((py.x2 - my.x2) / (2 * e)).epsilon(1e-7));
  JacobianCoeffs c = map.coeffs(x);
  // A_p = det(G) G^-1 G^-T and c_p = det(G).
  Eigen::Matrix2d Gi = g.inverse();
  Eigen::Matrix2d A = g.determinant() * Gi * Gi.transpose();
  CHECK((c.A - A).norm() < 1e-12);
  CHECK(c.c == doctest::Approx(g.determinant()));
}

TEST_CASE("degenerate maps and invalid surfaces are rejected") {
  SurfaceSpec big = grating(Profile::bump(0.0, 1.5, 0.6));
  DomainSpec d{1.0, 2.5, 2.2};
  CHECK_THROWS_AS(jacobian_coeffs(big, d, {0.0, 0.9}), Error);

  SurfaceSpec steep{Profile::sine(1.0, 0.5, 30.0), Profile(), L};
  CHECK_THROWS_AS(steep.validate(), Error);
  DomainSpec low{1.0, 1.2, 1.1};
  CHECK_THROWS_AS(low.validate(grating()), Error);
}
