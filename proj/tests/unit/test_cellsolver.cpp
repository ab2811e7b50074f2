#include <doctest.h>

#include <cmath>
#include <numbers>

#include "../oracles.hpp"
#include "bloch_scatter/cellsolver.hpp"
#include "bloch_scatter/error.hpp"

using namespace bloch_scatter;

namespace {

constexpr cplx I{0.0, 1.0};
const double L = 2.0 * std::numbers::pi;

std::shared_ptr<CellDiscretization> grating(double h, double k = 1.0) {
  SurfaceSpec s{Profile::sine(1.0, 0.3, 1.0), Profile(), L};
  return std::make_shared<CellDiscretization>(build_cell_mesh(s, DomainSpec{k, 2.5, 2.0}, h), k);
}

ModalTrace plane_trace(const CellDiscretization& d, double alpha_inc, double base) {
  return PlaneWave{alpha_inc, d.k(), 1.0}.modal_trace(d.mesh().H, d.J(), base, d.branch().lambda_star);
}

}  // namespace

TEST_CASE("element matrices: constants are in the stiffness kernel, mass integrates area") {
  SurfaceSpec s{Profile::sine(1.0, 0.3, 1.0), Profile(), L};
  CellMesh m = build_cell_mesh(s, DomainSpec{1.0, 2.5, 2.0}, 0.3);
  std::vector<int> id(m.num_vertices());
  for (int v = 0; v < m.num_vertices(); ++v) id[v] = v;
  ElementMatrices e = assemble_element_matrices(m, id, m.num_vertices());
  Eigen::VectorXd one = Eigen::VectorXd::Ones(m.num_vertices());
  CHECK((e.K * one).cwiseAbs().maxCoeff() < 1e-12);
  double area = 0.0;
  for (int t = 0; t < m.num_triangles(); ++t) area += m.triangle_area(t);
  CHECK(one.dot(e.M * one) == doctest::Approx(area).epsilon(1e-13));
  // x1 is linear, so K x1 vanishes away from the boundary nodes.
  Eigen::VectorXd x1(m.num_vertices());
  for (int v = 0; v < m.num_vertices(); ++v) x1(v) = m.vertices[v].x1;
  CHECK(x1.dot(e.K * x1) == doctest::Approx(area).epsilon(1e-12));
}

TEST_CASE("flat surface converges to the reflected plane wave at second order") {
  std::vector<double> err;
  for (double h : {0.2, 0.1}) {
    SurfaceSpec s{Profile::flat(1.0), Profile(), L};
    auto d = std::make_shared<CellDiscretization>(build_cell_mesh(s, DomainSpec{1.0, 2.5, 2.0}, h), 1.0);
    CellSolver solver(d);
    CellSolution sol = solver.solve(plane_trace(*d, 0.3, 0.3));
    double e2 = 0.0, n2 = 0.0;
    for (int v = 0; v < d->mesh().num_vertices(); ++v) {
      cplx ex = oracle::flat_total_periodized(0.3, 1.0, 1.0, d->mesh().vertices[v].x2);
      e2 += std::norm(sol.v(v) - ex);
      n2 += std::norm(ex);
    }
    err.push_back(std::sqrt(e2 / n2));
  }
  CHECK(err[1] < 1e-3);
  CHECK(err[0] / err[1] > 3.4);
  CHECK(err[0] / err[1] < 4.6);
}

TEST_CASE("reciprocity of the system matrix") {
  auto d = grating(0.3);
  for (double a : {0.1, 0.37}) {
    SparseMatrixC A = d->system_matrix(a), B = d->system_matrix(-a);
    CHECK((SparseMatrixC(A.transpose()) - B).norm() < 1e-12 * A.norm());
  }
}

TEST_CASE("energy balance and w-form agreement on a sinusoidal grating") {
  auto d = grating(0.2);
  CellSolver solver(d);
  CellSolution sol = solver.solve(plane_trace(*d, 0.3, 0.3));
  double sum = 0.0;
  for (auto& e : efficiencies(sol, *d, 0.3)) {
    CHECK(e.e >= 0.0);
    sum += e.e;
  }
  CHECK(std::abs(1.0 - sum) < 1e-10);
  CHECK(sol.residual < 1e-10);

  Eigen::VectorXcd w = solve_w_form(*d, plane_trace(*d, 0.3, 0.3));
  double diff = 0.0;
  for (int v = 0; v < d->mesh().num_vertices(); ++v)
    diff = std::max(diff, std::abs(w(v) - std::exp(I * 0.3 * d->node_x1()[v]) * sol.v(v)));
  CHECK(diff < 1e-10);
}

TEST_CASE("shifting alpha by the dual period changes the field only at discretization level") {
  // exp(i x1) is not in the P1 space, so the two discrete problems differ by O(h^2).
  std::vector<double> diffs;
  for (double h : {0.2, 0.1}) {
    auto d = grating(h);
    CellSolver s(d);
    CellSolution a = s.solve(plane_trace(*d, 0.3, 0.3));
    CellSolution b = s.solve(plane_trace(*d, 0.3, -0.7));
    double diff = 0.0, scale = 0.0;
    for (int v = 0; v < d->mesh().num_vertices(); ++v) {
      double x1 = d->node_x1()[v];
      diff = std::max(diff, std::abs(std::exp(I * 0.3 * x1) * a.v(v) - std::exp(-I * 0.7 * x1) * b.v(v)));
      scale = std::max(scale, std::abs(a.v(v)));
    }
    diffs.push_back(diff / scale);
  }
  CHECK(diffs[0] < 1e-2);
  CHECK(diffs[0] / diffs[1] > 3.0);
}

TEST_CASE("Dirichlet bottom, periodic copies, anomaly flag and evanescent incidence") {
  auto d = grating(0.3);
  CellSolver s(d);
  CellSolution sol = s.solve(plane_trace(*d, 0.3, 0.3));
  const CellMesh& m = d->mesh();
  for (int c = 0; c <= m.nx; ++c) CHECK(sol.v(m.vertex(c, 0)) == cplx(0.0));
  for (auto [l, r] : m.periodic_pairs) CHECK(sol.v(l) == sol.v(r));
  CellSolution at = s.solve(plane_trace(*d, 1e-13, 1e-13));
  CHECK(at.near_anomaly);
  CellSolution ev = s.solve(plane_trace(*d, 1.4, 0.4));
  CHECK_THROWS_AS(efficiencies(ev, *d, 1.4), Error);
}
