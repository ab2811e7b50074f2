#pragma once

#include <vector>

#include <Eigen/Core>

#include "bloch_scatter/cellsolver.hpp"

namespace bloch_scatter {

/// Brute-force reference for a locally perturbed surface under plane-wave
/// incidence, independent of the alpha machinery: one finite-element solve on
/// `cells` consecutive periods for the perturbation-scattered field
/// u_p = u - u_0, with u_0 the unperturbed quasi-periodic total field.
/// Lateral ends and the region above Gamma_H are truncated by complex
/// coordinate stretching with Dirichlet outer walls.
struct OracleOptions {
  int cells = 21;            // odd; cell 0 in the middle carries the perturbation
  int pml_cells = 3;         // lateral layer width, in periods, on each side
  double top_layer = 0.0;    // layer height above H; 0 selects one wavelength
  double strength = 0.0;     // peak stretching sigma; 0 selects 4 k
};

struct OracleField {
  int cells = 0;
  int nx = 0;  // columns per cell
  int ny = 0;  // rows up to Gamma_H
  Eigen::VectorXcd u0;  // unperturbed total field on the (nx*cells+1) x (ny+1) lattice below H
  Eigen::VectorXcd up;  // perturbation-scattered field on the same lattice
  std::vector<Point> points;

  int index(int column, int row) const { return row * (nx * cells + 1) + column; }
  /// Total field in cell j at the reference-cell vertex (column i, row r) layout.
  Eigen::VectorXcd cell_total(int j) const;
  Eigen::VectorXcd cell_scattered(int j) const;
};

/// `u0_cell` is the periodized unperturbed solution at alpha for a unit plane
/// wave (the incident trace used must have amplitude 1 at quasi-momentum
/// alpha_inc = alpha + lambda_star n).
OracleField monolithic_oracle(const CellDiscretization& disc, const SurfaceSpec& spec, const DomainSpec& dom,
                              const CellSolution& u0_cell, const OracleOptions& options = {});

}  // namespace bloch_scatter
