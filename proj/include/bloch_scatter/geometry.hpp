#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace bloch_scatter {

struct Point {
  double x1 = 0.0;
  double x2 = 0.0;
};

/// A real function of x1 together with its derivative. Closed forms carry an
/// analytic derivative; piecewise-linear tables carry the one-sided (right)
/// slope, so kinks should sit on mesh columns.
class Profile {
 public:
  using Fn = std::function<double(double)>;

  Profile();  // identically zero

  static Profile closed_form(Fn value, Fn derivative, std::string description = "closed-form");
  static Profile flat(double height);
  /// mean + amplitude * sin(wavenumber * x1 + phase)
  static Profile sine(double mean, double amplitude, double wavenumber, double phase = 0.0);
  /// Periodic piecewise-linear interpolant of samples over one period. The
  /// samples must be strictly increasing in x and span less than one period;
  /// the segment from the last sample to the first one wraps around.
  static Profile periodic_table(std::vector<double> x, std::vector<double> z, double period);
  /// Piecewise-linear interpolant on [x.front(), x.back()], zero outside.
  static Profile compact_table(std::vector<double> x, std::vector<double> z);
  /// amplitude * (1 - r^2)^3 for r = (x1 - center)/half_width in (-1, 1), zero
  /// elsewhere. Twice continuously differentiable.
  static Profile bump(double center, double half_width, double amplitude);

  double operator()(double x1) const { return value_(x1); }
  double derivative(double x1) const { return derivative_(x1); }
  const std::string& description() const { return description_; }

  /// Where the profile may be nonzero; (+inf, -inf) if identically zero, the
  /// whole line if unknown.
  std::pair<double, double> support() const { return support_; }
  bool is_zero() const { return support_.first > support_.second; }

 private:
  Fn value_;
  Fn derivative_;
  std::string description_;
  std::pair<double, double> support_;
};

/// Periodic surface zeta and its local perturbation zeta_p = zeta + delta.
struct SurfaceSpec {
  Profile zeta;
  Profile delta;  // zeta_p - zeta, compactly supported inside W
  double period = 0.0;
  double lipschitz_bound = 10.0;

  double zeta_p(double x1) const { return zeta(x1) + delta(x1); }
  double lambda_star() const;

  /// Checks periodicity, positivity, the Lipschitz bound and the support of the
  /// perturbation on a sample grid. Throws Error on violation.
  void validate() const;
  double max_height() const;  // max(||zeta||, ||zeta_p||) on a sample grid
  double min_height() const;
};

struct DomainSpec {
  double k = 1.0;   // wavenumber
  double H = 2.0;   // artificial boundary Gamma_H
  double H0 = 1.5;  // top of the region where Phi_p differs from the identity

  void validate(const SurfaceSpec& surface) const;
};

enum class BoundaryTag { bottom, top, left, right };

struct BoundaryEdge {
  int a = 0;
  int b = 0;
  BoundaryTag tag = BoundaryTag::bottom;
};

/// Triangulation of one periodic cell {(x1, x2): -L/2 <= x1 <= L/2,
/// zeta(x1) < x2 < H}. Vertices are laid out on a mapped (nx+1) x (ny+1)
/// lattice: vertex(i, r) sits at column x1_i and fraction r/ny of the way from
/// the bottom to the top.
struct CellMesh {
  double period = 0.0;
  double H = 0.0;
  int nx = 0;
  int ny = 0;
  std::vector<Point> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<BoundaryEdge> boundary_edges;
  std::vector<std::pair<int, int>> periodic_pairs;  // (left, right)

  int vertex(int column, int row) const { return row * (nx + 1) + column; }
  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }
  bool on_bottom(int v) const { return v < nx + 1; }
  bool on_top(int v) const { return v >= ny * (nx + 1); }
  bool on_right(int v) const { return v % (nx + 1) == nx; }
  bool on_left(int v) const { return v % (nx + 1) == 0; }

  double triangle_area(int t) const;  // signed, positive for valid triangles
  double max_edge_length() const;

  /// Checks the structural invariants (periodic partners, positive areas,
  /// boundary tags). Throws Error on violation.
  void validate() const;
};

/// Mapped-lattice mesh of the unperturbed cell with max edge length <= h_target.
CellMesh build_cell_mesh(const SurfaceSpec& spec, const DomainSpec& dom, double h_target);

/// Same lattice layout with explicit column/row counts.
CellMesh build_cell_mesh(const SurfaceSpec& spec, const DomainSpec& dom, int nx, int ny);

/// A_p and c_p at one point.
struct JacobianCoeffs {
  Eigen::Matrix2d A = Eigen::Matrix2d::Identity();
  double c = 1.0;
};

/// The flattening diffeomorphism
///   Phi_p(x1, x2) = (x1, x2 + ((x2 - H0)/(zeta(x1) - H0))^3 * delta(x1))
/// on zeta(x1) <= x2 <= H0, extended by the identity above H0 and outside the
/// support of delta.
class PerturbationMap {
 public:
  PerturbationMap(SurfaceSpec spec, DomainSpec dom);

  /// Throws for points below zeta or above H0.
  Point map(const Point& x) const;
  /// Identity where the cubic blend does not apply.
  Point map_or_identity(const Point& x) const;
  Eigen::Matrix2d gradient(const Point& x) const;
  JacobianCoeffs coeffs(const Point& x) const;

  bool is_identity() const { return spec_.delta.is_zero(); }
  /// Region outside which A_p = I and c_p = 1: [x1_lo, x1_hi] x (-inf, H0].
  double x1_lo() const { return spec_.delta.support().first; }
  double x1_hi() const { return spec_.delta.support().second; }
  double x2_hi() const { return dom_.H0; }

  const SurfaceSpec& surface() const { return spec_; }
  const DomainSpec& domain() const { return dom_; }

 private:
  SurfaceSpec spec_;
  DomainSpec dom_;
};

Point map_phi_p(const SurfaceSpec& spec, const DomainSpec& dom, const Point& x);
JacobianCoeffs jacobian_coeffs(const SurfaceSpec& spec, const DomainSpec& dom, const Point& x);

}  // namespace bloch_scatter
