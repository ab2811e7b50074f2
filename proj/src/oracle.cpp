#include "bloch_scatter/oracle.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/SparseLU>

#include "bloch_scatter/error.hpp"

namespace bloch_scatter {

namespace {

constexpr cplx I{0.0, 1.0};

// Linear interpolation of a periodized cell field along the vertical mesh line of column i.
cplx column_value(const CellMesh& mesh, const Eigen::VectorXcd& v, int i, double x2) {
  for (int r = 0; r < mesh.ny; ++r) {
    double a = mesh.vertices[static_cast<std::size_t>(mesh.vertex(i, r))].x2;
    double b = mesh.vertices[static_cast<std::size_t>(mesh.vertex(i, r + 1))].x2;
    if (x2 >= a - 1e-12 && x2 <= b + 1e-12) {
      double t = std::clamp((x2 - a) / (b - a), 0.0, 1.0);
      return (1.0 - t) * v(mesh.vertex(i, r)) + t * v(mesh.vertex(i, r + 1));
    }
  }
  std::ostringstream os;
  os << "height " << x2 << " is outside the unperturbed cell at column " << i;
  throw Error("oracle", "monolithic_oracle", os.str());
}

}  // namespace

Eigen::VectorXcd OracleField::cell_total(int j) const {
  Eigen::VectorXcd out = cell_scattered(j);
  const int half = cells / 2;
  for (int r = 0; r <= ny; ++r)
    for (int i = 0; i <= nx; ++i) out(r * (nx + 1) + i) += u0(index((j + half) * nx + i, r));
  return out;
}

Eigen::VectorXcd OracleField::cell_scattered(int j) const {
  const int half = cells / 2;
  if (j < -half || j > half) throw Error("oracle", "cell_field", "cell outside the oracle domain");
  Eigen::VectorXcd out((nx + 1) * (ny + 1));
  for (int r = 0; r <= ny; ++r)
    for (int i = 0; i <= nx; ++i) out(r * (nx + 1) + i) = up(index((j + half) * nx + i, r));
  return out;
}

OracleField monolithic_oracle(const CellDiscretization& disc, const SurfaceSpec& spec, const DomainSpec& dom,
                              const CellSolution& u0_cell, const OracleOptions& options) {
  const CellMesh& mesh = disc.mesh();
  const double L = mesh.period;
  const double k = disc.k();
  const double alpha = u0_cell.alpha;
  if (options.cells < 3 || options.cells % 2 == 0) throw Error("oracle", "monolithic_oracle", "cell count must be odd and at least 3");
  if (2 * options.pml_cells >= options.cells) throw Error("oracle", "monolithic_oracle", "absorbing layers cover the whole domain");
  const int nx = mesh.nx, ny = mesh.ny, cells = options.cells, half = cells / 2;
  const double dx = L / nx;
  for (int i = 0; i <= nx; ++i)
    if (spec.delta(mesh.vertices[static_cast<std::size_t>(i)].x1) < 0)
      throw Error("oracle", "monolithic_oracle", "the oracle needs zeta_p >= zeta so u_0 is defined on the perturbed surface");

  const double top = options.top_layer > 0 ? options.top_layer : 2.0 * std::numbers::pi / k;
  const double sigma0 = options.strength > 0 ? options.strength : 4.0 * k;
  const int nt = std::max(4, static_cast<int>(std::ceil(top / dx)));
  const int cols = nx * cells + 1;
  const int rows = ny + nt + 1;

  OracleField out;
  out.cells = cells;
  out.nx = nx;
  out.ny = ny;
  PerturbationMap map(spec, dom);
  auto gindex = [&](int c, int r) { return r * cols + c; };

  std::vector<Point> pts(static_cast<std::size_t>(cols * rows));
  for (int c = 0; c < cols; ++c) {
    int j = std::min(c / nx, cells - 1) - half;
    int i = c - (j + half) * nx;
    for (int r = 0; r < rows; ++r) {
      Point p;
      if (r <= ny) {
        p = mesh.vertices[static_cast<std::size_t>(mesh.vertex(i, r))];
        if (j == 0) p = map.map_or_identity(p);
      } else {
        p = {mesh.vertices[static_cast<std::size_t>(i)].x1, dom.H + top * (r - ny) / nt};
      }
      p.x1 += L * j;
      pts[static_cast<std::size_t>(gindex(c, r))] = p;
    }
  }

  // Unperturbed total field: exact translate below H in cells j != 0,
  // interpolated at the moved nodes of cell 0.
  out.u0 = Eigen::VectorXcd::Zero(cols * (ny + 1));
  for (int c = 0; c < cols; ++c) {
    int j = std::min(c / nx, cells - 1) - half;
    int i = c - (j + half) * nx;
    for (int r = 0; r <= ny; ++r) {
      const Point& p = pts[static_cast<std::size_t>(gindex(c, r))];
      cplx v = j == 0 ? column_value(mesh, u0_cell.v, i, p.x2) : u0_cell.v(mesh.vertex(i, r));
      out.u0(gindex(c, r)) = std::exp(I * alpha * p.x1) * v;
    }
  }

  // Unknowns: everything except the bottom row, the outer columns and the top row.
  std::vector<int> dof(pts.size(), -1);
  int n = 0;
  for (int r = 1; r < rows - 1; ++r)
    for (int c = 1; c < cols - 1; ++c) dof[static_cast<std::size_t>(gindex(c, r))] = n++;
  Eigen::VectorXcd fixed = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(pts.size()));
  for (int c = 0; c < cols; ++c) fixed(gindex(c, 0)) = -out.u0(gindex(c, 0));

  const double a1 = (half + 0.5 - options.pml_cells) * L;  // start of the lateral layer
  const double w1 = options.pml_cells * L;
  auto stretch = [&](const Point& p) {
    double d1 = std::abs(p.x1) - a1;
    double d2 = p.x2 - dom.H;
    cplx s1 = d1 > 0 ? 1.0 + I * sigma0 * (d1 / w1) * (d1 / w1) / k : cplx(1.0);
    cplx s2 = d2 > 0 ? 1.0 + I * sigma0 * (d2 / top) * (d2 / top) / k : cplx(1.0);
    return std::pair{s1, s2};
  };

  std::vector<Eigen::Triplet<cplx>> trip;
  Eigen::VectorXcd b = Eigen::VectorXcd::Zero(n);
  auto add_triangle = [&](int g0, int g1, int g2) {
    std::array<int, 3> g{g0, g1, g2};
    std::array<Point, 3> p;
    for (int q = 0; q < 3; ++q) p[static_cast<std::size_t>(q)] = pts[static_cast<std::size_t>(g[static_cast<std::size_t>(q)])];
    double det = (p[1].x1 - p[0].x1) * (p[2].x2 - p[0].x2) - (p[2].x1 - p[0].x1) * (p[1].x2 - p[0].x2);
    if (!(det > 0)) throw Error("oracle", "monolithic_oracle", "degenerate triangle in the oracle mesh");
    std::array<Eigen::Vector2d, 3> grad{Eigen::Vector2d(p[1].x2 - p[2].x2, p[2].x1 - p[1].x1) / det,
                                        Eigen::Vector2d(p[2].x2 - p[0].x2, p[0].x1 - p[2].x1) / det,
                                        Eigen::Vector2d(p[0].x2 - p[1].x2, p[1].x1 - p[0].x1) / det};
    const double w = det / 6.0;
    std::array<Point, 3> mid{Point{0.5 * (p[1].x1 + p[2].x1), 0.5 * (p[1].x2 + p[2].x2)},
                             Point{0.5 * (p[0].x1 + p[2].x1), 0.5 * (p[0].x2 + p[2].x2)},
                             Point{0.5 * (p[0].x1 + p[1].x1), 0.5 * (p[0].x2 + p[1].x2)}};
    Eigen::Matrix3cd local = Eigen::Matrix3cd::Zero();
    for (int q = 0; q < 3; ++q) {
      auto [s1, s2] = stretch(mid[static_cast<std::size_t>(q)]);
      for (int a = 0; a < 3; ++a)
        for (int c = 0; c < 3; ++c) {
          const auto& ga = grad[static_cast<std::size_t>(a)];
          const auto& gc = grad[static_cast<std::size_t>(c)];
          double pa = a == q ? 0.0 : 0.5, pc = c == q ? 0.0 : 0.5;
          local(a, c) += w * (s2 / s1 * ga(0) * gc(0) + s1 / s2 * ga(1) * gc(1) - k * k * s1 * s2 * pa * pc);
        }
    }
    for (int a = 0; a < 3; ++a) {
      int da = dof[static_cast<std::size_t>(g[static_cast<std::size_t>(a)])];
      if (da < 0) continue;
      for (int c = 0; c < 3; ++c) {
        int dc = dof[static_cast<std::size_t>(g[static_cast<std::size_t>(c)])];
        if (dc >= 0)
          trip.emplace_back(da, dc, local(a, c));
        else
          b(da) -= local(a, c) * fixed(g[static_cast<std::size_t>(c)]);
      }
    }
  };
  for (int r = 0; r < rows - 1; ++r) {
    for (int c = 0; c < cols - 1; ++c) {
      int i = c % nx;
      double xc = mesh.vertices[static_cast<std::size_t>(i)].x1 + 0.5 * dx;
      int v00 = gindex(c, r), v10 = gindex(c + 1, r), v01 = gindex(c, r + 1), v11 = gindex(c + 1, r + 1);
      if (xc < 0) {
        add_triangle(v00, v10, v01);
        add_triangle(v10, v11, v01);
      } else {
        add_triangle(v00, v10, v11);
        add_triangle(v00, v11, v01);
      }
    }
  }
  SparseMatrixC A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<SparseMatrixC, Eigen::COLAMDOrdering<int>> lu(A);
  if (lu.info() != Eigen::Success) throw Error("oracle", "monolithic_oracle", "sparse LU failed: " + lu.lastErrorMessage());
  Eigen::VectorXcd x = lu.solve(b);

  out.up = Eigen::VectorXcd::Zero(cols * (ny + 1));
  for (int r = 0; r <= ny; ++r)
    for (int c = 0; c < cols; ++c) {
      int d = dof[static_cast<std::size_t>(gindex(c, r))];
      out.up(gindex(c, r)) = d >= 0 ? x(d) : fixed(gindex(c, r));
    }
  out.points.assign(pts.begin(), pts.begin() + cols * (ny + 1));
  return out;
}

}  // namespace bloch_scatter
