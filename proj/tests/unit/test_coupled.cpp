#include <doctest.h>

#include <cmath>
#include <numbers>

#include "bloch_scatter/coupled.hpp"
#include "bloch_scatter/error.hpp"

using namespace bloch_scatter;

namespace {

const double L = 2.0 * std::numbers::pi;

struct Setup {
  SurfaceSpec s;
  DomainSpec d{1.0, 2.5, 2.2};
  std::shared_ptr<CellDiscretization> disc;
  AlphaGrid grid;
  PlaneWaveBloch inc;
};

Setup make(double bump, double h = 0.4, int M = 16) {
  Setup u;
  u.s = {Profile::sine(1.0, 0.2, 1.0), bump > 0 ? Profile::bump(0.0, 1.5, bump) : Profile(), L};
  u.disc = std::make_shared<CellDiscretization>(build_cell_mesh(u.s, u.d, h), 1.0);
  u.grid = make_alpha_grid(M, 1.0, singular_set_dual_cell(1.0, 1.0), GridMode::graded);
  u.inc = plane_wave_bloch_rhs(0.3, u.grid, u.disc->mesh(), u.disc->branch(), u.disc->J());
  return u;
}

}  // namespace

TEST_CASE("coupling matrix lives on the perturbation and vanishes without one") {
  Setup z = make(0.0);
  CHECK(assemble_coupling(*z.disc, z.s, z.d).is_zero());
  Setup p = make(0.1);
  CouplingForm B = assemble_coupling(*p.disc, p.s, p.d);
  REQUIRE_FALSE(B.is_zero());
  const double slack = p.disc->mesh().max_edge_length();
  for (int dof : B.support) {
    const Point& x = p.disc->mesh().vertices[p.disc->vertex_of_dof(dof)];
    CHECK(x.x1 >= -1.5 - slack);
    CHECK(x.x1 <= 1.5 + slack);
    CHECK(x.x2 <= p.d.H0 + slack);
  }
  CHECK(B.restricted().rows() == static_cast<Eigen::Index>(B.support.size()));
}

TEST_CASE("zero perturbation reduces to independent cell solves") {
  Setup z = make(0.0);
  CoupledResult r = solve_coupled(z.disc, assemble_coupling(*z.disc, z.s, z.d), z.inc.incident);
  CellSolver s(z.disc);
  for (int m = 0; m < z.grid.size(); ++m) {
    CellSolution c = s.solve(z.inc.incident.traces[m]);
    CHECK((r.v.values.row(m).transpose() - c.v).cwiseAbs().maxCoeff() <= 1e-12 * c.v.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("Schur and fixed-point paths agree on a small perturbation") {
  Setup p = make(0.05);
  CouplingForm B = assemble_coupling(*p.disc, p.s, p.d);
  CoupledOptions fp;
  fp.path = CoupledPath::fixedpoint;
  CoupledResult a = solve_coupled(p.disc, B, p.inc.incident);
  CoupledResult b = solve_coupled(p.disc, B, p.inc.incident, fp);
  CHECK(b.iterations > 1);
  CHECK(b.residual_history.back() <= fp.tolerance);
  CHECK((a.v.values - b.v.values).norm() <= 1e-8 * a.v.values.norm());
  CHECK(a.schur_rcond > 1e-6);
}

TEST_CASE("thread count does not change the result") {
  Setup p = make(0.1);
  CouplingForm B = assemble_coupling(*p.disc, p.s, p.d);
  CoupledOptions one, three;
  three.threads = 3;
  CoupledResult a = solve_coupled(p.disc, B, p.inc.incident, one);
  CoupledResult b = solve_coupled(p.disc, B, p.inc.incident, three);
  CHECK((a.v.values - b.v.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fixed point reports divergence on a large perturbation") {
  Setup p = make(0.3);
  CouplingForm B = assemble_coupling(*p.disc, p.s, p.d);
  CoupledOptions fp;
  fp.path = CoupledPath::fixedpoint;
  fp.max_iterations = 15;
  CHECK_THROWS_AS(solve_coupled(p.disc, B, p.inc.incident, fp), Error);
}

TEST_CASE("synthesized field vanishes on the perturbed surface") {
  Setup p = make(0.2);
  CouplingForm B = assemble_coupling(*p.disc, p.s, p.d);
  CoupledResult r = solve_coupled(p.disc, B, p.inc.incident);
  PerturbationMap map(p.s, p.d);
  PhysicalSolution u = synthesize_physical(*p.disc, r.v, 2, map);
  const CellMesh& m = p.disc->mesh();
  for (int c = 0; c <= m.nx; ++c) {
    int v = m.vertex(c, 0);
    Point x = u.point(0, v);
    CHECK(x.x2 == doctest::Approx(p.s.zeta_p(x.x1)).epsilon(1e-12));
    CHECK(std::abs(u.u.cell(0)(v)) < 1e-12);
    CHECK(std::abs(u.u.cell(2)(v)) < 1e-12);
  }
  CHECK(u.point(1, 5).x1 == doctest::Approx(m.vertices[5].x1 + L));
}
