#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "bloch_scatter/bloch.hpp"
#include "bloch_scatter/geometry.hpp"
#include "bloch_scatter/spectral.hpp"

namespace bloch_scatter {

/// H_0^(1)(z) for real z > 0.
cplx hankel1_0(double z);
double bessel_j0(double z);
double bessel_j1(double z);
double bessel_y0(double z);
double bessel_y1(double z);

/// Value and x2-derivative, at x2 = H, of the periodized incident field
/// v = exp(-i alpha x1) (J u^i)(alpha, .), mode by mode.
struct ModalTrace {
  double alpha = 0.0;
  TraceCoeffs value;
  std::optional<TraceCoeffs> dx2;  // required by incident_rhs

  ModalTrace() = default;
  ModalTrace(double a, int J) : alpha(a), value(J), dx2(TraceCoeffs(J)) {}
};

/// The Bloch transform of an incident field: nodal samples of the
/// quasi-periodic field on the cell mesh plus one modal trace per grid node.
struct IncidentBloch {
  BlochField field;
  std::vector<ModalTrace> traces;
};

/// exp(i alpha x1 - i beta x2) with beta = sqrt(k^2 - alpha^2) on the solver's
/// branch; evanescent for |alpha| > k.
struct PlaneWave {
  double alpha = 0.0;
  double k = 1.0;
  cplx amplitude = 1.0;

  cplx beta() const { return BetaBranch{k, 1.0}.exponent(alpha); }
  cplx value(const Point& x) const;
  cplx dx2(const Point& x) const;
  /// Trace of exp(-i base_alpha x1) u^i at height H: a single mode
  /// n = (alpha - base_alpha)/lambda_star, which must be an integer.
  ModalTrace modal_trace(double H, int J, double base_alpha, double lambda_star) const;
};

/// Half-space Green's function (i/4)[H0(k|x - y|) - H0(k|x - y'|)], y' the
/// mirror of y across x2 = 0.
struct PointSource {
  Point y;
  double k = 1.0;

  cplx value(const Point& x) const;
};

/// Herglotz density on the lower half circle: either phi(theta) directly, or
/// the factored form phi(t) = h(cos t) cos t with h analytic on [0, 1].
struct HerglotzDensity {
  std::function<double(double)> phi;  // used when h is empty
  std::function<double(double)> h;
  bool factored() const { return static_cast<bool>(h); }
};

struct PlaneWaveBloch {
  IncidentBloch incident;
  int node = 0;              // grid node carrying the Dirac mass
  double snap_distance = 0;  // |alpha_inc - alpha_node| modulo lambda_star
  double alpha_used = 0;     // incidence actually solved for
};

/// Bloch transform of a plane wave: a Dirac mass at alpha_inc. The mass is
/// snapped to the nearest grid node (or the node within `tolerance` when it is
/// finite) and scaled by sqrt(lambda_star)/weight so that the inverse
/// transform returns the plane wave at alpha_node.
PlaneWaveBloch plane_wave_bloch_rhs(double alpha_inc, const AlphaGrid& grid, const CellMesh& mesh,
                                    const BetaBranch& branch, int J, cplx amplitude = 1.0,
                                    double tolerance = std::numeric_limits<double>::infinity());

/// Quasi-periodic Rayleigh-type series of the point source at every grid node:
///   w(alpha, x) = (2 pi L)^(-1/2) sum_n exp(i xi_n (x1 - y1)) exp(i beta_n y2) sin(beta_n x2)/beta_n,
/// xi_n = alpha + lambda_star n. Each term is regular at beta_n = 0.
/// `J` is the trace truncation; the nodal series uses as many modes as the
/// source height requires for double precision.
IncidentBloch point_source_bloch(const Point& y, const BetaBranch& branch, const AlphaGrid& grid,
                                 const CellMesh& mesh, int J);

/// Modes needed by the point-source series at heights up to H.
int point_source_modes(const Point& y, const BetaBranch& branch, double H);

/// Value of the point-source series at one (alpha, x).
cplx point_source_series(const Point& y, const BetaBranch& branch, double period, double alpha, const Point& x,
                         int modes);

/// Finite sum over the propagating indices |xi_n| < k of
///   sqrt(lambda_star) exp(i xi_n x1 - i beta_n x2) phi(arcsin(xi_n / k)) / beta_n
/// (factored density: sqrt(lambda_star)/k * exp(...) * h(beta_n / k)).
IncidentBloch herglotz_bloch(const HerglotzDensity& density, const BetaBranch& branch, const AlphaGrid& grid,
                             const CellMesh& mesh, int J);

/// Number of terms in the Herglotz sum at alpha.
int herglotz_term_count(const BetaBranch& branch, double alpha);

/// Herglotz trace at a single alpha.
ModalTrace herglotz_trace(const HerglotzDensity& density, const BetaBranch& branch, double alpha, double H, int J);
cplx herglotz_value(const HerglotzDensity& density, const BetaBranch& branch, double alpha, const Point& x);

/// Load vector on the top dofs for integral (d/dx2 - T_alpha) v^i conj(phi_a) ds.
Eigen::VectorXcd incident_rhs(const ModalTrace& trace, const TopTraceBasis& basis, const BetaBranch& branch);

}  // namespace bloch_scatter
