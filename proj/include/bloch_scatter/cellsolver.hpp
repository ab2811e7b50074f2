#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "bloch_scatter/geometry.hpp"
#include "bloch_scatter/incident.hpp"
#include "bloch_scatter/spectral.hpp"

namespace bloch_scatter {

using SparseMatrixC = Eigen::SparseMatrix<cplx>;
using SparseMatrixR = Eigen::SparseMatrix<double>;
using CoeffFn = std::function<JacobianCoeffs(const Point&)>;

/// Element integrals of linear hats phi_a on the free dofs of one cell:
///   K = int A grad phi_b . grad phi_a,  C = int phi_a (A grad phi_b)_1,
///   D = int A_11 phi_a phi_b,           M = int c phi_a phi_b,
/// so that the periodized form at alpha is
///   K - k^2 M + i alpha (C^T - C) + alpha^2 D + DtN(alpha).
/// Bottom vertices are eliminated (Dirichlet) and right-column vertices share
/// the dof of their left partner.
struct ElementMatrices {
  SparseMatrixR K, C, D, M;
};

/// Edge-midpoint rule (exact for quadratics) on every triangle. With `coeffs`
/// empty, A = I and c = 1.
ElementMatrices assemble_element_matrices(const CellMesh& mesh, const std::vector<int>& dof_of_vertex, int num_dofs,
                                          const CoeffFn& coeffs = {});

/// Everything about one cell that does not depend on alpha.
class CellDiscretization {
 public:
  CellDiscretization(CellMesh mesh, double k, int J = 0, const CoeffFn& coeffs = {});

  const CellMesh& mesh() const { return mesh_; }
  double k() const { return k_; }
  const BetaBranch& branch() const { return branch_; }
  const TopTraceBasis& trace_basis() const { return basis_; }
  int J() const { return basis_.J(); }
  int num_dofs() const { return num_dofs_; }
  /// Dof of a vertex, or -1 on the Dirichlet bottom.
  int dof(int vertex) const { return dof_of_vertex_[static_cast<std::size_t>(vertex)]; }
  const std::vector<int>& dof_map() const { return dof_of_vertex_; }
  /// A representative vertex for every dof (left column for identified pairs).
  int vertex_of_dof(int d) const { return vertex_of_dof_[static_cast<std::size_t>(d)]; }
  const std::vector<int>& top_dofs() const { return top_dofs_; }
  const ElementMatrices& elements() const { return elements_; }
  /// x1 of every vertex.
  const std::vector<double>& node_x1() const { return node_x1_; }

  /// Periodized system matrix at alpha; its sparsity pattern is the same for every alpha.
  SparseMatrixC system_matrix(double alpha) const;
  /// Scatter a top-dof load vector into the dof space.
  Eigen::VectorXcd top_load_to_dofs(const Eigen::VectorXcd& top) const;
  /// RHS of the cell problem for one incident trace.
  Eigen::VectorXcd rhs(const ModalTrace& trace) const;
  /// Dof vector to nodal values (zero at the bottom, copies on the right column).
  Eigen::VectorXcd to_nodal(const Eigen::VectorXcd& dofs) const;
  /// Nodal values to dof vector (left-column representative).
  Eigen::VectorXcd to_dofs(const Eigen::VectorXcd& nodal) const;
  /// Top-dof values of a nodal field.
  Eigen::VectorXcd top_values(const Eigen::VectorXcd& nodal) const;
  /// Distance from alpha to the nearest Wood anomaly.
  double anomaly_distance(double alpha) const;

 private:
  CellMesh mesh_;
  double k_;
  BetaBranch branch_;
  std::vector<int> dof_of_vertex_;
  std::vector<int> vertex_of_dof_;
  std::vector<int> top_dofs_;
  std::vector<double> node_x1_;
  int num_dofs_ = 0;
  ElementMatrices elements_;
  TopTraceBasis basis_;
  SparseMatrixC base_, first_, second_;  // alpha^0, alpha^1, alpha^2 parts on the shared pattern
};

struct CellSystem {
  double alpha = 0.0;
  SparseMatrixC matrix;
  bool near_anomaly = false;
};

CellSystem assemble(const CellDiscretization& disc, double alpha);

struct CellSolution {
  double alpha = 0.0;
  Eigen::VectorXcd v;          // periodized nodal field, one entry per vertex
  Eigen::VectorXcd dofs;       // same field on the free dofs
  TraceCoeffs rayleigh;        // scattered-field modes at Gamma_H
  std::optional<ModalTrace> incident;
  double residual = 0.0;
  bool near_anomaly = false;
};

/// Sparse LU reused across alpha: the symbolic analysis is done once.
class CellSolver {
 public:
  explicit CellSolver(std::shared_ptr<const CellDiscretization> disc);

  const CellDiscretization& discretization() const { return *disc_; }
  void factorize(double alpha);
  double alpha() const { return alpha_; }
  /// Solve with the current factorization, with iterative refinement until the
  /// relative residual is below 1e-10. Throws above 1e-8.
  Eigen::VectorXcd solve_dofs(const Eigen::VectorXcd& b, double* residual = nullptr) const;
  Eigen::MatrixXcd solve_dofs(const Eigen::MatrixXcd& b) const;
  /// Factorize at trace.alpha and solve for the incident trace.
  CellSolution solve(const ModalTrace& trace);
  /// Factorize at alpha and solve with an explicit dof RHS (no incident data).
  CellSolution solve(double alpha, const Eigen::VectorXcd& rhs);

 private:
  std::shared_ptr<const CellDiscretization> disc_;
  Eigen::SparseLU<SparseMatrixC, Eigen::COLAMDOrdering<int>> lu_;
  SparseMatrixC matrix_;
  double alpha_ = 0.0;
  bool analyzed_ = false;
  bool factorized_ = false;
};

/// Rayleigh coefficients r_j = (trace of v)_j - (incident trace)_j.
TraceCoeffs rayleigh_coefficients(const CellDiscretization& disc, const Eigen::VectorXcd& v_nodal,
                                  const ModalTrace& incident);

struct Efficiency {
  int j = 0;
  double e = 0.0;
};

/// e_j = Re(beta_j)/beta_inc * |r_j|^2 / |incident amplitude|^2 over the
/// propagating modes. Throws for evanescent incidence.
std::vector<Efficiency> efficiencies(const CellSolution& sol, const CellDiscretization& disc, double alpha_inc);

/// Independent w-form path: sesquilinear assembly in the modulated basis
/// exp(i alpha x1) phi_a with complex gradients evaluated pointwise; returns
/// nodal values of the quasi-periodic field w.
Eigen::VectorXcd solve_w_form(const CellDiscretization& disc, const ModalTrace& trace);

}  // namespace bloch_scatter
