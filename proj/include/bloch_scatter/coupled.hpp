#pragma once

#include <memory>
#include <string>
#include <vector>

#include "bloch_scatter/bloch.hpp"
#include "bloch_scatter/cellsolver.hpp"

namespace bloch_scatter {

/// b(xi, psi) = sqrt(L/2pi) [int (A_p - I) grad xi . grad psi - k^2 int (c_p - 1) xi psi]
/// on the dofs of the reference cell. The matrix itself does not depend on alpha.
struct CouplingForm {
  SparseMatrixC B;
  std::vector<int> support;  // dofs touched by B, ascending

  bool is_zero() const { return support.empty(); }
  /// B restricted to the support dofs.
  Eigen::MatrixXcd restricted() const;
};

CouplingForm assemble_coupling(const CellDiscretization& disc, const SurfaceSpec& spec, const DomainSpec& dom);

enum class CoupledPath { schur, fixedpoint };

struct CoupledOptions {
  CoupledPath path = CoupledPath::schur;
  int threads = 1;
  double damping = 0.5;
  double tolerance = 1e-10;
  int max_iterations = 200;
};

struct CoupledResult {
  BlochField v;  // periodized nodal fields, one row per grid node
  Eigen::VectorXcd u_support;  // u_T on the coupling support (cell 0)
  CoupledPath path = CoupledPath::schur;
  std::vector<double> cell_residuals;  // per-alpha relative residual of the last solve
  std::vector<double> residual_history;  // fixed-point: relative update per iteration
  int iterations = 0;
  double schur_rcond = 1.0;
  std::vector<bool> near_anomaly;
};

/// Solves A(alpha_m) v_m + P_m B u_T = F_m for all grid nodes, with
/// u_T = sqrt(L/2pi) sum_m w_m Q_m v_m on cell 0, P_m = diag(exp(-i alpha_m x1)),
/// Q_m = diag(exp(i alpha_m x1)). `rhs` holds F_m on the dofs, one per node.
CoupledResult solve_coupled(std::shared_ptr<const CellDiscretization> disc, const CouplingForm& coupling,
                            const AlphaGrid& grid, const std::vector<Eigen::VectorXcd>& rhs,
                            const CoupledOptions& options = {});

/// Convenience overload building F_m from incident traces.
CoupledResult solve_coupled(std::shared_ptr<const CellDiscretization> disc, const CouplingForm& coupling,
                            const IncidentBloch& incident, const CoupledOptions& options = {});

struct PhysicalSolution {
  PhysicalField u;                 // total field, row per cell
  std::vector<Point> cell0_points;  // cell-0 nodes mapped through Phi_p
  std::vector<Point> reference;    // reference cell nodes; cell j adds (L j, 0)
  double period = 0.0;

  Point point(int cell, int vertex) const;
};

/// u_j = J^{-1}(exp(i alpha x1) v) on the requested cells; cell-0 nodes are
/// moved onto the perturbed domain by Phi_p.
PhysicalSolution synthesize_physical(const CellDiscretization& disc, const BlochField& v, int cell_radius,
                                     const PerturbationMap& map);

}  // namespace bloch_scatter
