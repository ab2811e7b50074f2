#include "bloch_scatter/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "bloch_scatter/error.hpp"

namespace bloch_scatter {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void fail(const std::string& op, const std::string& msg) {
  throw Error("geometry", op, msg);
}

// Index of the segment [x[i], x[i+1]) containing t, clamped to valid segments.
std::size_t segment_of(const std::vector<double>& x, double t) {
  auto it = std::upper_bound(x.begin(), x.end(), t);
  if (it == x.begin()) return 0;
  return std::min<std::size_t>(static_cast<std::size_t>(it - x.begin()) - 1, x.size() - 2);
}

struct PeriodicTable {
  std::vector<double> x;  // samples plus the wrapped first sample
  std::vector<double> z;
  double period;

  double reduce(double t) const {
    double r = std::fmod(t - x.front(), period);
    if (r < 0) r += period;
    return x.front() + r;
  }
  double value(double t) const {
    t = reduce(t);
    std::size_t i = segment_of(x, t);
    double w = (t - x[i]) / (x[i + 1] - x[i]);
    return (1.0 - w) * z[i] + w * z[i + 1];
  }
  double slope(double t) const {
    t = reduce(t);
    std::size_t i = segment_of(x, t);
    return (z[i + 1] - z[i]) / (x[i + 1] - x[i]);
  }
};

struct CompactTable {
  std::vector<double> x;
  std::vector<double> z;

  double value(double t) const {
    if (t < x.front() || t > x.back()) return 0.0;
    std::size_t i = segment_of(x, t);
    double w = (t - x[i]) / (x[i + 1] - x[i]);
    return (1.0 - w) * z[i] + w * z[i + 1];
  }
  double slope(double t) const {
    if (t < x.front() || t >= x.back()) return 0.0;
    std::size_t i = segment_of(x, t);
    return (z[i + 1] - z[i]) / (x[i + 1] - x[i]);
  }
};

void check_samples(const std::vector<double>& x, const std::vector<double>& z, const char* what) {
  if (x.size() != z.size() || x.size() < 2) {
    fail("profile", std::string(what) + ": need at least two (x, z) samples of equal count");
  }
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (!(x[i] > x[i - 1])) fail("profile", std::string(what) + ": sample abscissae must increase strictly");
  }
}

}  // namespace

Profile::Profile()
    : value_([](double) { return 0.0; }),
      derivative_([](double) { return 0.0; }),
      description_("zero"),
      support_(kInf, -kInf) {}

Profile Profile::closed_form(Fn value, Fn derivative, std::string description) {
  Profile p;
  p.value_ = std::move(value);
  p.derivative_ = std::move(derivative);
  p.description_ = std::move(description);
  p.support_ = {-kInf, kInf};
  return p;
}

Profile Profile::flat(double height) {
  std::ostringstream os;
  os << "flat(" << height << ")";
  return closed_form([height](double) { return height; }, [](double) { return 0.0; }, os.str());
}

Profile Profile::sine(double mean, double amplitude, double wavenumber, double phase) {
  std::ostringstream os;
  os << "sine(mean=" << mean << ",amplitude=" << amplitude << ",wavenumber=" << wavenumber
     << ",phase=" << phase << ")";
  return closed_form(
      [=](double x) { return mean + amplitude * std::sin(wavenumber * x + phase); },
      [=](double x) { return amplitude * wavenumber * std::cos(wavenumber * x + phase); }, os.str());
}

Profile Profile::periodic_table(std::vector<double> x, std::vector<double> z, double period) {
  check_samples(x, z, "periodic_table");
  if (!(x.back() - x.front() < period)) fail("profile", "periodic_table: samples must span less than one period");
  auto table = std::make_shared<PeriodicTable>();
  table->period = period;
  table->x = x;
  table->z = z;
  table->x.push_back(x.front() + period);
  table->z.push_back(z.front());
  Profile p = closed_form([table](double t) { return table->value(t); },
                          [table](double t) { return table->slope(t); }, "periodic_table");
  return p;
}

Profile Profile::compact_table(std::vector<double> x, std::vector<double> z) {
  check_samples(x, z, "compact_table");
  auto table = std::make_shared<CompactTable>(CompactTable{x, z});
  Profile p = closed_form([table](double t) { return table->value(t); },
                          [table](double t) { return table->slope(t); }, "compact_table");
  bool all_zero = std::all_of(z.begin(), z.end(), [](double v) { return v == 0.0; });
  p.support_ = all_zero ? std::pair{kInf, -kInf} : std::pair{x.front(), x.back()};
  return p;
}

Profile Profile::bump(double center, double half_width, double amplitude) {
  if (!(half_width > 0)) fail("profile", "bump: half_width must be positive");
  std::ostringstream os;
  os << "bump(center=" << center << ",half_width=" << half_width << ",amplitude=" << amplitude << ")";
  Profile p = closed_form(
      [=](double x) {
        double r = (x - center) / half_width;
        if (std::abs(r) >= 1.0) return 0.0;
        double q = 1.0 - r * r;
        return amplitude * q * q * q;
      },
      [=](double x) {
        double r = (x - center) / half_width;
        if (std::abs(r) >= 1.0) return 0.0;
        double q = 1.0 - r * r;
        return amplitude * 3.0 * q * q * (-2.0 * r) / half_width;
      },
      os.str());
  p.support_ = amplitude == 0.0 ? std::pair{kInf, -kInf} : std::pair{center - half_width, center + half_width};
  return p;
}

double SurfaceSpec::lambda_star() const { return 2.0 * std::numbers::pi / period; }

double SurfaceSpec::max_height() const {
  double m = -kInf;
  const int n = 2048;
  for (int i = 0; i <= n; ++i) {
    double x = -period / 2 + period * i / n;
    m = std::max({m, zeta(x), zeta_p(x)});
  }
  return m;
}

double SurfaceSpec::min_height() const {
  double m = kInf;
  const int n = 2048;
  for (int i = 0; i <= n; ++i) {
    double x = -period / 2 + period * i / n;
    m = std::min({m, zeta(x), zeta_p(x)});
  }
  return m;
}

void SurfaceSpec::validate() const {
  if (!(period > 0)) fail("validate_surface", "period must be positive");
  const int n = 512;
  for (int i = 0; i <= n; ++i) {
    double x = -period / 2 + period * i / n;
    if (std::abs(zeta(x + period) - zeta(x)) > 1e-12) {
      std::ostringstream os;
      os << "profile is not periodic: zeta(" << x << " + period) != zeta(" << x << ")";
      fail("validate_surface", os.str());
    }
    if (!(zeta(x) > 0) || !(zeta_p(x) > 0)) {
      std::ostringstream os;
      os << "surface must lie above x2 = 0; violated near x1 = " << x;
      fail("validate_surface", os.str());
    }
    if (std::abs(zeta.derivative(x)) > lipschitz_bound ||
        std::abs(zeta.derivative(x) + delta.derivative(x)) > lipschitz_bound) {
      std::ostringstream os;
      os << "surface slope exceeds the Lipschitz bound " << lipschitz_bound << " near x1 = " << x;
      fail("validate_surface", os.str());
    }
  }
  if (!delta.is_zero()) {
    auto [lo, hi] = delta.support();
    if (lo < -period / 2 || hi > period / 2) {
      std::ostringstream os;
      os << "perturbation support [" << lo << ", " << hi << "] leaves the cell (" << -period / 2
         << ", " << period / 2 << "]";
      fail("validate_surface", os.str());
    }
  }
  for (double x : {-period / 2, period / 2, -period, period}) {
    if (delta(x) != 0.0) fail("validate_surface", "perturbation must vanish for |x1| >= period/2");
  }
}

void DomainSpec::validate(const SurfaceSpec& surface) const {
  if (!(k > 0)) fail("validate_domain", "wavenumber k must be positive");
  double top = surface.max_height();
  if (!(H0 > top)) {
    std::ostringstream os;
    os << "H0 = " << H0 << " must exceed the surface maximum " << top;
    fail("validate_domain", os.str());
  }
  if (!(H > H0)) {
    std::ostringstream os;
    os << "H0 = " << H0 << " must be below H = " << H;
    fail("validate_domain", os.str());
  }
}

double CellMesh::triangle_area(int t) const {
  const auto& tri = triangles[static_cast<std::size_t>(t)];
  const Point& a = vertices[static_cast<std::size_t>(tri[0])];
  const Point& b = vertices[static_cast<std::size_t>(tri[1])];
  const Point& c = vertices[static_cast<std::size_t>(tri[2])];
  return 0.5 * ((b.x1 - a.x1) * (c.x2 - a.x2) - (c.x1 - a.x1) * (b.x2 - a.x2));
}

double CellMesh::max_edge_length() const {
  double m = 0.0;
  for (const auto& tri : triangles) {
    for (int e = 0; e < 3; ++e) {
      const Point& a = vertices[static_cast<std::size_t>(tri[static_cast<std::size_t>(e)])];
      const Point& b = vertices[static_cast<std::size_t>(tri[static_cast<std::size_t>((e + 1) % 3)])];
      m = std::max(m, std::hypot(b.x1 - a.x1, b.x2 - a.x2));
    }
  }
  return m;
}

void CellMesh::validate() const {
  for (int t = 0; t < num_triangles(); ++t) {
    if (!(triangle_area(t) > 0)) {
      std::ostringstream os;
      os << "triangle " << t << " has non-positive area";
      fail("validate_mesh", os.str());
    }
  }
  if (periodic_pairs.size() != static_cast<std::size_t>(ny + 1)) fail("validate_mesh", "missing periodic partners");
  for (auto [l, r] : periodic_pairs) {
    const Point& a = vertices[static_cast<std::size_t>(l)];
    const Point& b = vertices[static_cast<std::size_t>(r)];
    if (std::abs(a.x2 - b.x2) > 1e-12 || b.x1 - a.x1 != period) {
      std::ostringstream os;
      os << "periodic pair (" << l << ", " << r << ") is not an exact translate";
      fail("validate_mesh", os.str());
    }
  }
}

CellMesh build_cell_mesh(const SurfaceSpec& spec, const DomainSpec& dom, int nx, int ny) {
  if (nx < 2 || ny < 1) fail("build_cell_mesh", "need at least 2 columns and 1 row");
  CellMesh mesh;
  mesh.period = spec.period;
  mesh.H = dom.H;
  mesh.nx = nx;
  mesh.ny = ny;

  std::vector<double> xs(static_cast<std::size_t>(nx) + 1);
  std::vector<double> zs(static_cast<std::size_t>(nx) + 1);
  const double dx = spec.period / nx;
  for (int i = 0; i < nx; ++i) {
    xs[static_cast<std::size_t>(i)] = -spec.period / 2 + i * dx;
    zs[static_cast<std::size_t>(i)] = spec.zeta(xs[static_cast<std::size_t>(i)]);
  }
  xs[static_cast<std::size_t>(nx)] = xs[0] + spec.period;
  zs[static_cast<std::size_t>(nx)] = zs[0];

  for (int i = 0; i <= nx; ++i) {
    if (!(zs[static_cast<std::size_t>(i)] < dom.H)) {
      std::ostringstream os;
      os << "surface reaches the artificial boundary H = " << dom.H << " at column x1 = " << xs[static_cast<std::size_t>(i)];
      fail("build_cell_mesh", os.str());
    }
  }

  mesh.vertices.resize(static_cast<std::size_t>((nx + 1) * (ny + 1)));
  for (int r = 0; r <= ny; ++r) {
    for (int i = 0; i <= nx; ++i) {
      double z = zs[static_cast<std::size_t>(i)];
      double x2 = r == ny ? dom.H : z + (dom.H - z) * static_cast<double>(r) / ny;
      mesh.vertices[static_cast<std::size_t>(mesh.vertex(i, r))] = {xs[static_cast<std::size_t>(i)], x2};
    }
  }

  // Diagonals mirror about x1 = 0 so symmetric profiles give symmetric meshes.
  mesh.triangles.reserve(static_cast<std::size_t>(2 * nx * ny));
  for (int r = 0; r < ny; ++r) {
    for (int i = 0; i < nx; ++i) {
      int v00 = mesh.vertex(i, r), v10 = mesh.vertex(i + 1, r);
      int v01 = mesh.vertex(i, r + 1), v11 = mesh.vertex(i + 1, r + 1);
      double xc = 0.5 * (xs[static_cast<std::size_t>(i)] + xs[static_cast<std::size_t>(i) + 1]);
      if (xc < 0) {
        mesh.triangles.push_back({v00, v10, v01});
        mesh.triangles.push_back({v10, v11, v01});
      } else {
        mesh.triangles.push_back({v00, v10, v11});
        mesh.triangles.push_back({v00, v11, v01});
      }
    }
  }

  for (int i = 0; i < nx; ++i) {
    mesh.boundary_edges.push_back({mesh.vertex(i, 0), mesh.vertex(i + 1, 0), BoundaryTag::bottom});
    mesh.boundary_edges.push_back({mesh.vertex(i, ny), mesh.vertex(i + 1, ny), BoundaryTag::top});
  }
  for (int r = 0; r < ny; ++r) {
    mesh.boundary_edges.push_back({mesh.vertex(0, r), mesh.vertex(0, r + 1), BoundaryTag::left});
    mesh.boundary_edges.push_back({mesh.vertex(nx, r), mesh.vertex(nx, r + 1), BoundaryTag::right});
  }
  for (int r = 0; r <= ny; ++r) mesh.periodic_pairs.emplace_back(mesh.vertex(0, r), mesh.vertex(nx, r));

  for (int t = 0; t < mesh.num_triangles(); ++t) {
    if (!(mesh.triangle_area(t) > 0)) {
      const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
      std::ostringstream os;
      os << "degenerate triangle " << t << " near x1 = " << mesh.vertices[static_cast<std::size_t>(tri[0])].x1
         << "; the surface is too steep for this resolution";
      fail("build_cell_mesh", os.str());
    }
  }
  return mesh;
}

CellMesh build_cell_mesh(const SurfaceSpec& spec, const DomainSpec& dom, double h_target) {
  if (!(h_target > 0)) fail("build_cell_mesh", "h_target must be positive");
  spec.validate();

  // Resolution check: the chord between columns must follow the profile.
  const double spacing = h_target / std::sqrt(2.0);
  int nx = static_cast<int>(std::ceil(spec.period / spacing));
  nx += nx % 2;
  const double dx = spec.period / nx;
  for (int i = 0; i < nx; ++i) {
    double a = -spec.period / 2 + i * dx, b = a + dx;
    double chord = 0.5 * (spec.zeta(a) + spec.zeta(b));
    if (std::abs(spec.zeta(0.5 * (a + b)) - chord) > 0.25 * h_target) {
      std::ostringstream os;
      os << "h_target = " << h_target << " is too coarse to resolve the profile on segment [" << a << ", " << b
         << "]";
      fail("build_cell_mesh", os.str());
    }
  }
  double gap = dom.H - spec.min_height();
  int ny = std::max(1, static_cast<int>(std::ceil(gap / spacing)));

  for (int attempt = 0; attempt < 40; ++attempt) {
    CellMesh mesh = build_cell_mesh(spec, dom, nx, ny);
    if (mesh.max_edge_length() <= h_target) return mesh;
    nx += 2 * std::max(1, nx / 20);
    ny += std::max(1, ny / 20);
  }
  fail("build_cell_mesh", "could not satisfy the edge-length target; the surface is too steep");
}

PerturbationMap::PerturbationMap(SurfaceSpec spec, DomainSpec dom) : spec_(std::move(spec)), dom_(dom) {}

Point PerturbationMap::map(const Point& x) const {
  double z = spec_.zeta(x.x1);
  if (x.x2 < z - 1e-12 || x.x2 > dom_.H0 + 1e-12) {
    std::ostringstream os;
    os << "point (" << x.x1 << ", " << x.x2 << ") is outside zeta(x1) <= x2 <= H0";
    throw Error("geometry", "map_phi_p", os.str());
  }
  return map_or_identity(x);
}

Point PerturbationMap::map_or_identity(const Point& x) const {
  if (x.x2 >= dom_.H0) return x;
  double d = spec_.delta(x.x1);
  if (d == 0.0) return x;
  double s = (x.x2 - dom_.H0) / (spec_.zeta(x.x1) - dom_.H0);
  return {x.x1, x.x2 + s * s * s * d};
}

Eigen::Matrix2d PerturbationMap::gradient(const Point& x) const {
  Eigen::Matrix2d g = Eigen::Matrix2d::Identity();
  if (x.x2 >= dom_.H0) return g;
  double d = spec_.delta(x.x1);
  double dd = spec_.delta.derivative(x.x1);
  if (d == 0.0 && dd == 0.0) return g;
  double gap = spec_.zeta(x.x1) - dom_.H0;
  double s = (x.x2 - dom_.H0) / gap;
  g(1, 0) = s * s * s * (dd - 3.0 * d * spec_.zeta.derivative(x.x1) / gap);
  g(1, 1) = 1.0 + 3.0 * s * s * d / gap;
  return g;
}

JacobianCoeffs PerturbationMap::coeffs(const Point& x) const {
  Eigen::Matrix2d g = gradient(x);
  double det = g(1, 1);
  if (!(det > 0)) {
    std::ostringstream os;
    os << "det grad Phi_p = " << det << " at (" << x.x1 << ", " << x.x2
       << "); use a smaller perturbation or a larger gap between the surface and H0";
    throw Error("geometry", "jacobian_coeffs", os.str());
  }
  double g1 = g(1, 0);
  JacobianCoeffs out;
  out.A << det, -g1, -g1, (1.0 + g1 * g1) / det;
  out.c = det;
  return out;
}

Point map_phi_p(const SurfaceSpec& spec, const DomainSpec& dom, const Point& x) {
  return PerturbationMap(spec, dom).map(x);
}

JacobianCoeffs jacobian_coeffs(const SurfaceSpec& spec, const DomainSpec& dom, const Point& x) {
  return PerturbationMap(spec, dom).coeffs(x);
}

}  // namespace bloch_scatter
