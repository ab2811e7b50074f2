#pragma once

#include <complex>
#include <vector>

#include <Eigen/Core>

#include "bloch_scatter/spectral.hpp"

namespace bloch_scatter {

enum class GridMode { uniform, graded };

/// Quadrature over the dual cell W* = (-lambda_star/2, lambda_star/2].
struct AlphaGrid {
  double lambda_star = 1.0;
  GridMode mode = GridMode::uniform;
  std::vector<double> nodes;    // ascending, inside W*
  std::vector<double> weights;  // positive, summing to lambda_star
  std::vector<double> anomalies;  // anomaly locations used for grading

  int size() const { return static_cast<int>(nodes.size()); }
  /// Index of the node closest to alpha modulo lambda_star.
  int nearest(double alpha) const;
  /// Signed distance alpha - node (reduced modulo lambda_star).
  double offset(int m, double alpha) const;
};

/// uniform: midpoint rule with M cells.
/// graded: the periodic dual line is cut at the anomalies of `anomalies`; each
/// arc between consecutive anomalies is halved and each half is covered by the
/// substitution alpha = endpoint +- t^2 with midpoint nodes in t, so nodes
/// cluster like M^-2 at the anomalies. Nodes are then wrapped into W*.
AlphaGrid make_alpha_grid(int M, double lambda_star, const SingularSet& anomalies, GridMode mode);

/// Per-cell copies u(x + (L j, 0)) of a field on one shared mesh; row c holds
/// cell j = c - J_c.
struct PhysicalField {
  int cell_radius = 0;      // J_c
  Eigen::MatrixXcd values;  // (2 J_c + 1) x nodes
  bool aliasing_warning = false;

  int num_cells() const { return 2 * cell_radius + 1; }
  auto cell(int j) { return values.row(j + cell_radius); }
  auto cell(int j) const { return values.row(j + cell_radius); }
  /// Sum over cells and nodes of |u|^2.
  double squared_norm() const { return values.squaredNorm(); }
};

/// Samples of a Bloch-transformed field: row m holds the nodal field at alpha_m.
struct BlochField {
  enum class Representation { quasi_periodic, periodized };

  AlphaGrid grid;
  Representation representation = Representation::quasi_periodic;
  Eigen::MatrixXcd values;  // M x nodes

  /// Grid-weighted sum of |w|^2.
  double squared_norm() const;
  /// Converts in place between w and v = exp(-i alpha x1) w using the nodal x1.
  void to_periodized(const std::vector<double>& node_x1);
  void to_quasi_periodic(const std::vector<double>& node_x1);
};

/// w(alpha_m, x) = sqrt(L / 2 pi) sum_j u_j(x) exp(-i alpha_m L j).
BlochField bloch_forward(const PhysicalField& u, const AlphaGrid& grid, double period);

/// u_j(x) = sqrt(L / 2 pi) sum_m weight_m w(alpha_m, x) exp(i L j alpha_m), for
/// |j| <= cell_radius; `w` must be quasi-periodic. Flags aliasing when
/// cell_radius exceeds M/2.
PhysicalField bloch_inverse(const BlochField& w, int cell_radius, double period);

}  // namespace bloch_scatter
