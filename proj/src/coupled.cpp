#include "bloch_scatter/coupled.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include <Eigen/LU>

#include "bloch_scatter/error.hpp"
#include "bloch_scatter/parallel.hpp"

namespace bloch_scatter {

namespace {

constexpr cplx I{0.0, 1.0};

// Kahan-compensated running sum of dense complex blocks, so the result does
// not depend on how the alpha blocks were grouped.
struct CompensatedSum {
  Eigen::MatrixXcd sum, comp;
  CompensatedSum(Eigen::Index r, Eigen::Index c) : sum(Eigen::MatrixXcd::Zero(r, c)), comp(Eigen::MatrixXcd::Zero(r, c)) {}
  void add(const Eigen::MatrixXcd& x) {
    Eigen::MatrixXcd y = x - comp;
    Eigen::MatrixXcd t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

}  // namespace

Eigen::MatrixXcd CouplingForm::restricted() const {
  const auto S = static_cast<Eigen::Index>(support.size());
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(S, S);
  std::vector<Eigen::Index> pos(static_cast<std::size_t>(B.rows()), -1);
  for (Eigen::Index i = 0; i < S; ++i) pos[static_cast<std::size_t>(support[static_cast<std::size_t>(i)])] = i;
  for (int c = 0; c < B.outerSize(); ++c)
    for (SparseMatrixC::InnerIterator it(B, c); it; ++it)
      out(pos[static_cast<std::size_t>(it.row())], pos[static_cast<std::size_t>(it.col())]) += it.value();
  return out;
}

CouplingForm assemble_coupling(const CellDiscretization& disc, const SurfaceSpec& spec, const DomainSpec& dom) {
  CouplingForm out;
  const int n = disc.num_dofs();
  out.B.resize(n, n);
  if (spec.delta.is_zero()) return out;
  PerturbationMap map(spec, dom);
  CoeffFn diff = [&map](const Point& x) {
    JacobianCoeffs c = map.coeffs(x);
    c.A -= Eigen::Matrix2d::Identity();
    c.c -= 1.0;
    return c;
  };
  ElementMatrices em = assemble_element_matrices(disc.mesh(), disc.dof_map(), n, diff);
  const double scale = std::sqrt(disc.mesh().period / (2.0 * std::numbers::pi));
  const double k2 = disc.k() * disc.k();
  SparseMatrixR b = scale * (em.K - k2 * em.M);
  b.prune(0.0);
  out.B = b.cast<cplx>();
  std::set<int> dofs;
  for (int c = 0; c < out.B.outerSize(); ++c)
    for (SparseMatrixC::InnerIterator it(out.B, c); it; ++it) {
      dofs.insert(static_cast<int>(it.row()));
      dofs.insert(static_cast<int>(it.col()));
    }
  out.support.assign(dofs.begin(), dofs.end());
  return out;
}

CoupledResult solve_coupled(std::shared_ptr<const CellDiscretization> disc, const CouplingForm& coupling,
                            const IncidentBloch& incident, const CoupledOptions& options) {
  std::vector<Eigen::VectorXcd> rhs;
  rhs.reserve(incident.traces.size());
  for (const auto& t : incident.traces) rhs.push_back(disc->rhs(t));
  return solve_coupled(std::move(disc), coupling, incident.field.grid, rhs, options);
}

CoupledResult solve_coupled(std::shared_ptr<const CellDiscretization> disc, const CouplingForm& coupling,
                            const AlphaGrid& grid, const std::vector<Eigen::VectorXcd>& rhs,
                            const CoupledOptions& options) {
  const int M = grid.size();
  if (static_cast<int>(rhs.size()) != M) throw Error("coupled", "solve_coupled", "one rhs per grid node required");
  const int n = disc->num_dofs();
  const int threads = resolve_threads(options.threads);
  const double scale = std::sqrt(disc->mesh().period / (2.0 * std::numbers::pi));
  const auto S = static_cast<Eigen::Index>(coupling.support.size());

  // Per-node phases on the support dofs.
  std::vector<double> xs(static_cast<std::size_t>(S));
  for (Eigen::Index i = 0; i < S; ++i)
    xs[static_cast<std::size_t>(i)] = disc->node_x1()[static_cast<std::size_t>(disc->vertex_of_dof(coupling.support[static_cast<std::size_t>(i)]))];
  auto phase = [&](int m, double sign) {
    Eigen::VectorXcd p(S);
    for (Eigen::Index i = 0; i < S; ++i) p(i) = std::exp(sign * I * grid.nodes[static_cast<std::size_t>(m)] * xs[static_cast<std::size_t>(i)]);
    return p;
  };

  CoupledResult res;
  res.path = options.path;
  res.v.grid = grid;
  res.v.representation = BlochField::Representation::periodized;
  res.v.values.resize(M, disc->mesh().num_vertices());
  res.cell_residuals.assign(static_cast<std::size_t>(M), 0.0);
  res.near_anomaly.assign(static_cast<std::size_t>(M), false);
  for (int m = 0; m < M; ++m) res.near_anomaly[static_cast<std::size_t>(m)] = disc->anomaly_distance(grid.nodes[static_cast<std::size_t>(m)]) < 1e-6;

  std::vector<std::unique_ptr<CellSolver>> solvers;
  for (int w = 0; w < threads; ++w) solvers.push_back(std::make_unique<CellSolver>(disc));

  std::vector<Eigen::VectorXcd> v0(static_cast<std::size_t>(M));
  auto restrict_support = [&](const Eigen::VectorXcd& x) {
    Eigen::VectorXcd r(S);
    for (Eigen::Index i = 0; i < S; ++i) r(i) = x(coupling.support[static_cast<std::size_t>(i)]);
    return r;
  };
  auto lift = [&](const Eigen::VectorXcd& y, int m) {
    Eigen::VectorXcd full = Eigen::VectorXcd::Zero(n);
    Eigen::VectorXcd p = phase(m, -1.0);
    for (Eigen::Index i = 0; i < S; ++i) full(coupling.support[static_cast<std::size_t>(i)]) = p(i) * y(i);
    return full;
  };
  auto weight = [&](int m) { return scale * grid.weights[static_cast<std::size_t>(m)]; };

  if (coupling.is_zero()) {
    parallel_for(M, threads, [&](int m, int w) {
      CellSolver& s = *solvers[static_cast<std::size_t>(w)];
      s.factorize(grid.nodes[static_cast<std::size_t>(m)]);
      v0[static_cast<std::size_t>(m)] = s.solve_dofs(rhs[static_cast<std::size_t>(m)], &res.cell_residuals[static_cast<std::size_t>(m)]);
    });
    for (int m = 0; m < M; ++m) res.v.values.row(m) = disc->to_nodal(v0[static_cast<std::size_t>(m)]).transpose();
    return res;
  }

  const Eigen::MatrixXcd Bs = coupling.restricted();

  if (options.path == CoupledPath::schur) {
    // Pass 1: unperturbed solves and G = c sum w_m R Q_m A_m^-1 P_m R^T, in
    // batches so the summation order is fixed.
    CompensatedSum G(S, S);
    Eigen::VectorXcd U0 = Eigen::VectorXcd::Zero(S);
    Eigen::MatrixXcd ident_cols = Eigen::MatrixXcd::Identity(S, S);
    for (int start = 0; start < M; start += threads) {
      int count = std::min(threads, M - start);
      std::vector<Eigen::MatrixXcd> blocks(static_cast<std::size_t>(count));
      parallel_for(count, threads, [&](int b, int w) {
        int m = start + b;
        CellSolver& s = *solvers[static_cast<std::size_t>(w)];
        s.factorize(grid.nodes[static_cast<std::size_t>(m)]);
        v0[static_cast<std::size_t>(m)] = s.solve_dofs(rhs[static_cast<std::size_t>(m)], &res.cell_residuals[static_cast<std::size_t>(m)]);
        Eigen::MatrixXcd cols(n, S);
        for (Eigen::Index c = 0; c < S; ++c) cols.col(c) = lift(ident_cols.col(c), m);
        Eigen::MatrixXcd X = s.solve_dofs(cols);
        Eigen::VectorXcd q = phase(m, 1.0);
        Eigen::MatrixXcd RX(S, S);
        for (Eigen::Index i = 0; i < S; ++i) RX.row(i) = q(i) * X.row(coupling.support[static_cast<std::size_t>(i)]);
        blocks[static_cast<std::size_t>(b)] = weight(m) * RX;
      });
      for (int b = 0; b < count; ++b) {
        int m = start + b;
        G.add(blocks[static_cast<std::size_t>(b)]);
        U0 += weight(m) * phase(m, 1.0).cwiseProduct(restrict_support(v0[static_cast<std::size_t>(m)]));
      }
    }
    Eigen::MatrixXcd schur = Eigen::MatrixXcd::Identity(S, S) + G.sum * Bs;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(schur);
    res.schur_rcond = lu.rcond();
    if (!(res.schur_rcond > 1e-14)) {
      std::ostringstream os;
      os << "Schur complement is numerically singular (rcond " << res.schur_rcond
         << "); a resonance of the perturbed surface is suspected";
      throw Error("coupled", "solve_coupled", os.str());
    }
    res.u_support = lu.solve(U0);
    Eigen::VectorXcd y = Bs * res.u_support;

    // Pass 2: v_m = v0_m - A_m^-1 P_m R^T y.
    std::vector<Eigen::VectorXcd> v(static_cast<std::size_t>(M));
    parallel_for(M, threads, [&](int m, int w) {
      CellSolver& s = *solvers[static_cast<std::size_t>(w)];
      s.factorize(grid.nodes[static_cast<std::size_t>(m)]);
      v[static_cast<std::size_t>(m)] = v0[static_cast<std::size_t>(m)] - s.solve_dofs(lift(y, m));
    });
    for (int m = 0; m < M; ++m) res.v.values.row(m) = disc->to_nodal(v[static_cast<std::size_t>(m)]).transpose();
    return res;
  }

  // Damped fixed point on u_T restricted to the support.
  std::vector<std::unique_ptr<CellSolver>> per_node;
  for (int m = 0; m < M; ++m) per_node.push_back(std::make_unique<CellSolver>(disc));
  std::vector<Eigen::VectorXcd> v(static_cast<std::size_t>(M));
  auto sweep = [&](const Eigen::VectorXcd& u) {
    Eigen::VectorXcd y = Bs * u;
    parallel_for(M, threads, [&](int m, int) {
      CellSolver& s = *per_node[static_cast<std::size_t>(m)];
      if (res.iterations == 0) s.factorize(grid.nodes[static_cast<std::size_t>(m)]);
      Eigen::VectorXcd b = rhs[static_cast<std::size_t>(m)] - lift(y, m);
      v[static_cast<std::size_t>(m)] = s.solve_dofs(b, &res.cell_residuals[static_cast<std::size_t>(m)]);
    });
    Eigen::VectorXcd next = Eigen::VectorXcd::Zero(S);
    for (int m = 0; m < M; ++m) next += weight(m) * phase(m, 1.0).cwiseProduct(restrict_support(v[static_cast<std::size_t>(m)]));
    return next;
  };
  Eigen::VectorXcd u = Eigen::VectorXcd::Zero(S);
  bool converged = false;
  for (int it = 0; it < options.max_iterations; ++it) {
    Eigen::VectorXcd target = sweep(u);
    ++res.iterations;
    double denom = std::max(target.norm(), 1e-300);
    double change = (target - u).norm() / denom;
    res.residual_history.push_back(change);
    if (change <= options.tolerance) {
      u = target;
      converged = true;
      break;
    }
    u = (1.0 - options.damping) * u + options.damping * target;
  }
  if (!converged) {
    std::ostringstream os;
    os << "fixed-point iteration did not reach " << options.tolerance << " in " << options.max_iterations
       << " iterations; residual history:";
    for (std::size_t i = 0; i < res.residual_history.size(); i += std::max<std::size_t>(1, res.residual_history.size() / 10))
      os << ' ' << res.residual_history[i];
    os << ' ' << res.residual_history.back();
    throw Error("coupled", "solve_coupled", os.str());
  }
  // v already corresponds to the input u; one more sweep makes it consistent with the converged u.
  sweep(u);
  res.u_support = u;
  for (int m = 0; m < M; ++m) res.v.values.row(m) = disc->to_nodal(v[static_cast<std::size_t>(m)]).transpose();
  return res;
}

Point PhysicalSolution::point(int cell, int vertex) const {
  if (cell == 0) return cell0_points[static_cast<std::size_t>(vertex)];
  Point p = reference[static_cast<std::size_t>(vertex)];
  p.x1 += period * cell;
  return p;
}

PhysicalSolution synthesize_physical(const CellDiscretization& disc, const BlochField& v, int cell_radius,
                                     const PerturbationMap& map) {
  BlochField w = v;
  w.to_quasi_periodic(disc.node_x1());
  PhysicalSolution out;
  out.u = bloch_inverse(w, cell_radius, disc.mesh().period);
  out.reference = disc.mesh().vertices;
  out.period = disc.mesh().period;
  out.cell0_points.reserve(out.reference.size());
  for (const Point& p : out.reference) out.cell0_points.push_back(map.map_or_identity(p));
  return out;
}

}  // namespace bloch_scatter
