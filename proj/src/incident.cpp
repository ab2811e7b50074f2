#include "bloch_scatter/incident.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "bloch_scatter/error.hpp"

namespace bloch_scatter {

namespace {

constexpr cplx I{0.0, 1.0};

// exp(i beta y2) sin(beta x2)/beta and exp(i beta y2) cos(beta x2), written
// with decaying exponentials only (x2 < y2) and a series near beta = 0.
std::pair<cplx, cplx> source_mode(cplx beta, double x2, double y2) {
  cplx up = std::exp(I * beta * (y2 + x2));
  cplx down = std::exp(I * beta * (y2 - x2));
  cplx value;
  cplx z = beta * x2;
  if (std::abs(z) < 1e-3) {
    cplx z2 = z * z;
    value = std::exp(I * beta * y2) * x2 * (1.0 - z2 / 6.0 + z2 * z2 / 120.0);
  } else {
    value = (up - down) / (2.0 * I * beta);
  }
  return {value, 0.5 * (up + down)};
}

}  // namespace

double bessel_j0(double z) { return std::cyl_bessel_j(0.0, z); }
double bessel_j1(double z) { return std::cyl_bessel_j(1.0, z); }
double bessel_y0(double z) { return std::cyl_neumann(0.0, z); }
double bessel_y1(double z) { return std::cyl_neumann(1.0, z); }

cplx hankel1_0(double z) {
  if (!(z > 0)) throw Error("incident", "hankel1_0", "argument must be positive");
  return {bessel_j0(z), bessel_y0(z)};
}

cplx PlaneWave::value(const Point& x) const { return amplitude * std::exp(I * alpha * x.x1 - I * beta() * x.x2); }

cplx PlaneWave::dx2(const Point& x) const { return -I * beta() * value(x); }

ModalTrace PlaneWave::modal_trace(double H, int J, double base_alpha, double lambda_star) const {
  double shift = (alpha - base_alpha) / lambda_star;
  int n = static_cast<int>(std::lround(shift));
  if (std::abs(shift - n) > 1e-9 || std::abs(n) > J) {
    throw Error("incident", "plane_wave_trace", "incidence is not a lattice shift of the base quasi-momentum");
  }
  ModalTrace t(base_alpha, J);
  cplx c = amplitude * std::exp(-I * beta() * H);
  t.value[n] = c;
  (*t.dx2)[n] = -I * beta() * c;
  return t;
}

cplx PointSource::value(const Point& x) const {
  double r = std::hypot(x.x1 - y.x1, x.x2 - y.x2);
  double rm = std::hypot(x.x1 - y.x1, x.x2 + y.x2);
  return 0.25 * I * (hankel1_0(k * r) - hankel1_0(k * rm));
}

PlaneWaveBloch plane_wave_bloch_rhs(double alpha_inc, const AlphaGrid& grid, const CellMesh& mesh,
                                    const BetaBranch& branch, int J, cplx amplitude, double tolerance) {
  PlaneWaveBloch out;
  out.node = grid.nearest(alpha_inc);
  double off = grid.offset(out.node, alpha_inc);
  out.snap_distance = std::abs(off);
  if (out.snap_distance > tolerance) {
    std::ostringstream os;
    os << "no grid node within " << tolerance << " of alpha_inc = " << alpha_inc << " (nearest is "
       << out.snap_distance << " away)";
    throw Error("incident", "plane_wave_bloch_rhs", os.str());
  }
  const double node_alpha = grid.nodes[static_cast<std::size_t>(out.node)];
  out.alpha_used = alpha_inc - off;
  PlaneWave wave{out.alpha_used, branch.k, amplitude};

  const double mass = std::sqrt(branch.lambda_star) / grid.weights[static_cast<std::size_t>(out.node)];
  IncidentBloch& inc = out.incident;
  inc.field.grid = grid;
  inc.field.representation = BlochField::Representation::quasi_periodic;
  inc.field.values = Eigen::MatrixXcd::Zero(grid.size(), mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v)
    inc.field.values(out.node, v) = mass * wave.value(mesh.vertices[static_cast<std::size_t>(v)]);
  inc.traces.reserve(static_cast<std::size_t>(grid.size()));
  for (int m = 0; m < grid.size(); ++m) inc.traces.emplace_back(grid.nodes[static_cast<std::size_t>(m)], J);
  ModalTrace t = wave.modal_trace(mesh.H, J, node_alpha, branch.lambda_star);
  for (auto& c : t.value.c) c *= mass;
  for (auto& c : t.dx2->c) c *= mass;
  inc.traces[static_cast<std::size_t>(out.node)] = t;
  return out;
}

int point_source_modes(const Point& y, const BetaBranch& branch, double H) {
  if (!(y.x2 > H)) throw Error("incident", "point_source_bloch", "source must lie above the artificial boundary");
  // Evanescent terms decay like exp(-(lambda_star |n| - k)(y2 - x2)).
  double need = branch.k + 40.0 / (y.x2 - H);
  return static_cast<int>(std::ceil(need / branch.lambda_star)) + 2;
}

cplx point_source_series(const Point& y, const BetaBranch& branch, double period, double alpha, const Point& x,
                         int modes) {
  const double scale = 1.0 / std::sqrt(2.0 * std::numbers::pi * period);
  cplx sum = 0.0;
  for (int n = -modes; n <= modes; ++n) {
    double xi = alpha + branch.lambda_star * n;
    auto [value, deriv] = source_mode(branch.exponent(xi), x.x2, y.x2);
    (void)deriv;
    sum += std::exp(I * xi * (x.x1 - y.x1)) * value;
  }
  return scale * sum;
}

IncidentBloch point_source_bloch(const Point& y, const BetaBranch& branch, const AlphaGrid& grid,
                                 const CellMesh& mesh, int J) {
  const int modes = point_source_modes(y, branch, mesh.H);
  const double scale = 1.0 / std::sqrt(2.0 * std::numbers::pi * mesh.period);
  IncidentBloch inc;
  inc.field.grid = grid;
  inc.field.representation = BlochField::Representation::quasi_periodic;
  inc.field.values.resize(grid.size(), mesh.num_vertices());
  for (int m = 0; m < grid.size(); ++m) {
    const double alpha = grid.nodes[static_cast<std::size_t>(m)];
    for (int v = 0; v < mesh.num_vertices(); ++v)
      inc.field.values(m, v) =
          point_source_series(y, branch, mesh.period, alpha, mesh.vertices[static_cast<std::size_t>(v)], modes);
    ModalTrace t(alpha, J);
    for (int n = -J; n <= J; ++n) {
      double xi = alpha + branch.lambda_star * n;
      auto [value, deriv] = source_mode(branch.exponent(xi), mesh.H, y.x2);
      cplx phase = scale * std::exp(-I * xi * y.x1);
      t.value[n] = phase * value;
      (*t.dx2)[n] = phase * deriv;
    }
    inc.traces.push_back(std::move(t));
  }
  return inc;
}

int herglotz_term_count(const BetaBranch& branch, double alpha) {
  int count = 0;
  int lo = static_cast<int>(std::floor((-branch.k - alpha) / branch.lambda_star)) - 1;
  int hi = static_cast<int>(std::ceil((branch.k - alpha) / branch.lambda_star)) + 1;
  for (int n = lo; n <= hi; ++n)
    if (std::abs(alpha + branch.lambda_star * n) < branch.k) ++count;
  return count;
}

namespace {

// Amplitude multiplying exp(i xi x1 - i beta x2) for one propagating index.
cplx herglotz_amplitude(const HerglotzDensity& density, const BetaBranch& branch, double xi) {
  double beta = branch.exponent(xi).real();
  if (density.factored()) return std::sqrt(branch.lambda_star) / branch.k * density.h(beta / branch.k);
  if (beta < 1e-6) {
    std::ostringstream os;
    os << "unfactored density evaluated " << beta << " from a Wood anomaly (division by beta)";
    throw Error("incident", "herglotz_bloch", os.str());
  }
  return std::sqrt(branch.lambda_star) * density.phi(std::asin(xi / branch.k)) / beta;
}

template <typename F>
void for_propagating(const BetaBranch& branch, double alpha, F&& f) {
  int lo = static_cast<int>(std::floor((-branch.k - alpha) / branch.lambda_star)) - 1;
  int hi = static_cast<int>(std::ceil((branch.k - alpha) / branch.lambda_star)) + 1;
  for (int n = lo; n <= hi; ++n) {
    double xi = alpha + branch.lambda_star * n;
    if (std::abs(xi) < branch.k) f(n, xi);
  }
}

}  // namespace

cplx herglotz_value(const HerglotzDensity& density, const BetaBranch& branch, double alpha, const Point& x) {
  cplx sum = 0.0;
  for_propagating(branch, alpha, [&](int, double xi) {
    cplx beta = branch.exponent(xi);
    sum += herglotz_amplitude(density, branch, xi) * std::exp(I * xi * x.x1 - I * beta * x.x2);
  });
  return sum;
}

ModalTrace herglotz_trace(const HerglotzDensity& density, const BetaBranch& branch, double alpha, double H, int J) {
  ModalTrace t(alpha, J);
  for_propagating(branch, alpha, [&](int n, double xi) {
    if (std::abs(n) > J) throw Error("incident", "herglotz_bloch", "truncation drops a propagating term");
    cplx beta = branch.exponent(xi);
    cplx c = herglotz_amplitude(density, branch, xi) * std::exp(-I * beta * H);
    t.value[n] = c;
    (*t.dx2)[n] = -I * beta * c;
  });
  return t;
}

IncidentBloch herglotz_bloch(const HerglotzDensity& density, const BetaBranch& branch, const AlphaGrid& grid,
                             const CellMesh& mesh, int J) {
  IncidentBloch inc;
  inc.field.grid = grid;
  inc.field.representation = BlochField::Representation::quasi_periodic;
  inc.field.values.resize(grid.size(), mesh.num_vertices());
  for (int m = 0; m < grid.size(); ++m) {
    const double alpha = grid.nodes[static_cast<std::size_t>(m)];
    for (int v = 0; v < mesh.num_vertices(); ++v)
      inc.field.values(m, v) = herglotz_value(density, branch, alpha, mesh.vertices[static_cast<std::size_t>(v)]);
    inc.traces.push_back(herglotz_trace(density, branch, alpha, mesh.H, J));
  }
  return inc;
}

Eigen::VectorXcd incident_rhs(const ModalTrace& trace, const TopTraceBasis& basis, const BetaBranch& branch) {
  if (!trace.dx2) throw Error("incident", "incident_rhs", "incident trace carries no x2-derivative data");
  const int J = trace.value.J;
  TraceCoeffs g(J);
  for (int j = -J; j <= J; ++j) g[j] = (*trace.dx2)[j] - I * branch.mode_exponent(j, trace.alpha) * trace.value[j];
  return basis.load(g);
}

}  // namespace bloch_scatter
