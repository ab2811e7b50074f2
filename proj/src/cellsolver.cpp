#include "bloch_scatter/cellsolver.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "bloch_scatter/error.hpp"

namespace bloch_scatter {

namespace {

constexpr cplx I{0.0, 1.0};

using TripletR = Eigen::Triplet<double>;
using TripletC = Eigen::Triplet<cplx>;

struct Element {
  std::array<int, 3> v;
  double area;
  std::array<Eigen::Vector2d, 3> grad;  // gradients of the three local hats
  std::array<Point, 3> mid;             // edge midpoints: mid[q] is opposite vertex q
};

Element element(const CellMesh& mesh, int t) {
  Element e;
  e.v = mesh.triangles[static_cast<std::size_t>(t)];
  const Point& p0 = mesh.vertices[static_cast<std::size_t>(e.v[0])];
  const Point& p1 = mesh.vertices[static_cast<std::size_t>(e.v[1])];
  const Point& p2 = mesh.vertices[static_cast<std::size_t>(e.v[2])];
  double det = (p1.x1 - p0.x1) * (p2.x2 - p0.x2) - (p2.x1 - p0.x1) * (p1.x2 - p0.x2);
  if (!(det > 0)) {
    std::ostringstream os;
    os << "triangle " << t << " is degenerate (signed area " << 0.5 * det << ")";
    throw Error("cellsolver", "assemble", os.str());
  }
  e.area = 0.5 * det;
  e.grad[0] = Eigen::Vector2d(p1.x2 - p2.x2, p2.x1 - p1.x1) / det;
  e.grad[1] = Eigen::Vector2d(p2.x2 - p0.x2, p0.x1 - p2.x1) / det;
  e.grad[2] = Eigen::Vector2d(p0.x2 - p1.x2, p1.x1 - p0.x1) / det;
  e.mid[0] = {0.5 * (p1.x1 + p2.x1), 0.5 * (p1.x2 + p2.x2)};
  e.mid[1] = {0.5 * (p0.x1 + p2.x1), 0.5 * (p0.x2 + p2.x2)};
  e.mid[2] = {0.5 * (p0.x1 + p1.x1), 0.5 * (p0.x2 + p1.x2)};
  return e;
}

// Value of local hat a at midpoint q: 1/2 unless q is opposite a.
double hat_at_mid(int a, int q) { return a == q ? 0.0 : 0.5; }

std::vector<double> x1_of(const CellMesh& mesh) {
  std::vector<double> x(mesh.vertices.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = mesh.vertices[i].x1;
  return x;
}

int resolve_J(const CellMesh& mesh, double k, int J) {
  if (J > 0) return J;
  return BetaBranch{k, 2.0 * std::numbers::pi / mesh.period}.default_truncation();
}

}  // namespace

ElementMatrices assemble_element_matrices(const CellMesh& mesh, const std::vector<int>& dof_of_vertex, int num_dofs,
                                          const CoeffFn& coeffs) {
  std::vector<TripletR> tk, tc, td, tm;
  const std::size_t reserve = static_cast<std::size_t>(mesh.num_triangles()) * 9;
  tk.reserve(reserve);
  tc.reserve(reserve);
  td.reserve(reserve);
  tm.reserve(reserve);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    Element e = element(mesh, t);
    std::array<JacobianCoeffs, 3> q;
    if (coeffs)
      for (int i = 0; i < 3; ++i) q[static_cast<std::size_t>(i)] = coeffs(e.mid[static_cast<std::size_t>(i)]);
    const double w = e.area / 3.0;
    for (int a = 0; a < 3; ++a) {
      int da = dof_of_vertex[static_cast<std::size_t>(e.v[static_cast<std::size_t>(a)])];
      if (da < 0) continue;
      for (int b = 0; b < 3; ++b) {
        int db = dof_of_vertex[static_cast<std::size_t>(e.v[static_cast<std::size_t>(b)])];
        if (db < 0) continue;
        const Eigen::Vector2d& ga = e.grad[static_cast<std::size_t>(a)];
        const Eigen::Vector2d& gb = e.grad[static_cast<std::size_t>(b)];
        double k = 0, c = 0, d = 0, m = 0;
        for (int p = 0; p < 3; ++p) {
          const auto& cq = q[static_cast<std::size_t>(p)];
          double pa = hat_at_mid(a, p), pb = hat_at_mid(b, p);
          Eigen::Vector2d Agb = cq.A * gb;
          k += w * ga.dot(Agb);
          c += w * pa * Agb(0);
          d += w * cq.A(0, 0) * pa * pb;
          m += w * cq.c * pa * pb;
        }
        tk.emplace_back(da, db, k);
        tc.emplace_back(da, db, c);
        td.emplace_back(da, db, d);
        tm.emplace_back(da, db, m);
      }
    }
  }
  ElementMatrices out;
  for (auto [mat, trip] : {std::pair{&out.K, &tk}, {&out.C, &tc}, {&out.D, &td}, {&out.M, &tm}}) {
    mat->resize(num_dofs, num_dofs);
    mat->setFromTriplets(trip->begin(), trip->end());
  }
  return out;
}

CellDiscretization::CellDiscretization(CellMesh mesh, double k, int J, const CoeffFn& coeffs)
    : mesh_(std::move(mesh)),
      k_(k),
      branch_{k, 2.0 * std::numbers::pi / mesh_.period},
      basis_(mesh_, resolve_J(mesh_, k, J)) {
  if (!(k > 0)) throw Error("cellsolver", "assemble", "wavenumber must be positive");
  mesh_.validate();
  node_x1_ = x1_of(mesh_);
  dof_of_vertex_.assign(mesh_.vertices.size(), -1);
  for (int r = 1; r <= mesh_.ny; ++r) {
    for (int i = 0; i < mesh_.nx; ++i) {
      dof_of_vertex_[static_cast<std::size_t>(mesh_.vertex(i, r))] = num_dofs_;
      vertex_of_dof_.push_back(mesh_.vertex(i, r));
      ++num_dofs_;
    }
    dof_of_vertex_[static_cast<std::size_t>(mesh_.vertex(mesh_.nx, r))] =
        dof_of_vertex_[static_cast<std::size_t>(mesh_.vertex(0, r))];
  }
  for (int a = 0; a < basis_.size(); ++a) top_dofs_.push_back(dof(basis_.vertex(a)));

  elements_ = assemble_element_matrices(mesh_, dof_of_vertex_, num_dofs_, coeffs);

  // Shared pattern: the element pattern plus the dense top block.
  std::vector<TripletC> pat;
  for (const SparseMatrixR* m : {&elements_.K, &elements_.C, &elements_.D, &elements_.M})
    for (int c = 0; c < m->outerSize(); ++c)
      for (SparseMatrixR::InnerIterator it(*m, c); it; ++it) pat.emplace_back(it.row(), it.col(), 0.0);
  for (int a : top_dofs_)
    for (int b : top_dofs_) pat.emplace_back(a, b, 0.0);
  SparseMatrixC zero(num_dofs_, num_dofs_);
  zero.setFromTriplets(pat.begin(), pat.end());

  auto cx = [](const SparseMatrixR& m) -> SparseMatrixC { return m.cast<cplx>(); };
  base_ = zero + cx(elements_.K) - (k * k) * cx(elements_.M);
  SparseMatrixR skew = SparseMatrixR(elements_.C.transpose()) - elements_.C;
  first_ = zero + I * cx(skew);
  second_ = zero + cx(elements_.D);
}

SparseMatrixC CellDiscretization::system_matrix(double alpha) const {
  Eigen::MatrixXcd dtn = dtn_bilinear_matrix(basis_, branch_, alpha);
  std::vector<TripletC> trip;
  trip.reserve(top_dofs_.size() * top_dofs_.size());
  for (std::size_t a = 0; a < top_dofs_.size(); ++a)
    for (std::size_t b = 0; b < top_dofs_.size(); ++b)
      trip.emplace_back(top_dofs_[a], top_dofs_[b], dtn(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
  SparseMatrixC top(num_dofs_, num_dofs_);
  top.setFromTriplets(trip.begin(), trip.end());
  SparseMatrixC out = base_ + cplx(alpha) * first_ + cplx(alpha * alpha) * second_ + top;
  out.makeCompressed();
  return out;
}

Eigen::VectorXcd CellDiscretization::top_load_to_dofs(const Eigen::VectorXcd& top) const {
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(num_dofs_);
  for (std::size_t a = 0; a < top_dofs_.size(); ++a) out(top_dofs_[a]) += top(static_cast<Eigen::Index>(a));
  return out;
}

Eigen::VectorXcd CellDiscretization::rhs(const ModalTrace& trace) const {
  return top_load_to_dofs(incident_rhs(trace, basis_, branch_));
}

Eigen::VectorXcd CellDiscretization::to_nodal(const Eigen::VectorXcd& dofs) const {
  Eigen::VectorXcd out(mesh_.num_vertices());
  for (int v = 0; v < mesh_.num_vertices(); ++v) {
    int d = dof(v);
    out(v) = d < 0 ? cplx(0.0) : dofs(d);
  }
  return out;
}

Eigen::VectorXcd CellDiscretization::to_dofs(const Eigen::VectorXcd& nodal) const {
  Eigen::VectorXcd out(num_dofs_);
  for (int d = 0; d < num_dofs_; ++d) out(d) = nodal(vertex_of_dof(d));
  return out;
}

Eigen::VectorXcd CellDiscretization::top_values(const Eigen::VectorXcd& nodal) const {
  Eigen::VectorXcd out(basis_.size());
  for (int a = 0; a < basis_.size(); ++a) out(a) = nodal(basis_.vertex(a));
  return out;
}

double CellDiscretization::anomaly_distance(double alpha) const {
  SingularSet s{k_, branch_.lambda_star, 0.0, 0.0, {}};
  return s.distance(alpha);
}

CellSystem assemble(const CellDiscretization& disc, double alpha) {
  CellSystem sys;
  sys.alpha = alpha;
  sys.matrix = disc.system_matrix(alpha);
  sys.near_anomaly = disc.anomaly_distance(alpha) < 1e-6;
  return sys;
}

CellSolver::CellSolver(std::shared_ptr<const CellDiscretization> disc) : disc_(std::move(disc)) {}

void CellSolver::factorize(double alpha) {
  matrix_ = disc_->system_matrix(alpha);
  if (!analyzed_) {
    lu_.analyzePattern(matrix_);
    analyzed_ = true;
  }
  lu_.factorize(matrix_);
  if (lu_.info() != Eigen::Success) {
    std::ostringstream os;
    os << "sparse LU failed at alpha = " << alpha << ": " << lu_.lastErrorMessage();
    throw Error("cellsolver", "solve_cell", os.str());
  }
  alpha_ = alpha;
  factorized_ = true;
}

Eigen::VectorXcd CellSolver::solve_dofs(const Eigen::VectorXcd& b, double* residual) const {
  if (!factorized_) throw Error("cellsolver", "solve_cell", "no factorization available");
  if (b.size() != disc_->num_dofs()) throw Error("cellsolver", "solve_cell", "rhs dimension does not match the dofs");
  const double bn = b.norm();
  if (bn == 0.0) {
    if (residual) *residual = 0.0;
    return Eigen::VectorXcd::Zero(b.size());
  }
  Eigen::VectorXcd x = lu_.solve(b);
  Eigen::VectorXcd r = b - matrix_ * x;
  double rel = r.norm() / bn;
  for (int it = 0; it < 3 && rel > 1e-10; ++it) {
    x += lu_.solve(r);
    r = b - matrix_ * x;
    rel = r.norm() / bn;
  }
  if (!(rel <= 1e-8)) {
    std::ostringstream os;
    os << "relative residual " << rel << " at alpha = " << alpha_
       << "; alpha is too close to an anomaly or the mesh is too coarse";
    throw Error("cellsolver", "solve_cell", os.str());
  }
  if (residual) *residual = rel;
  return x;
}

Eigen::MatrixXcd CellSolver::solve_dofs(const Eigen::MatrixXcd& b) const {
  if (!factorized_) throw Error("cellsolver", "solve_cell", "no factorization available");
  Eigen::MatrixXcd x = lu_.solve(b);
  Eigen::MatrixXcd r = b - matrix_ * x;
  auto worst = [&] {
    double w = 0.0;
    for (Eigen::Index c = 0; c < b.cols(); ++c) {
      double bn = b.col(c).norm();
      if (bn > 0) w = std::max(w, r.col(c).norm() / bn);
    }
    return w;
  };
  double rel = worst();
  for (int it = 0; it < 3 && rel > 1e-10; ++it) {
    x += lu_.solve(r);
    r = b - matrix_ * x;
    rel = worst();
  }
  if (!(rel <= 1e-8)) {
    std::ostringstream os;
    os << "relative residual " << rel << " at alpha = " << alpha_
       << "; alpha is too close to an anomaly or the mesh is too coarse";
    throw Error("cellsolver", "solve_cell", os.str());
  }
  return x;
}

CellSolution CellSolver::solve(double alpha, const Eigen::VectorXcd& rhs) {
  factorize(alpha);
  CellSolution sol;
  sol.alpha = alpha;
  sol.dofs = solve_dofs(rhs, &sol.residual);
  sol.v = disc_->to_nodal(sol.dofs);
  sol.near_anomaly = disc_->anomaly_distance(alpha) < 1e-6;
  sol.rayleigh = TraceCoeffs(disc_->J());
  return sol;
}

CellSolution CellSolver::solve(const ModalTrace& trace) {
  CellSolution sol = solve(trace.alpha, disc_->rhs(trace));
  sol.rayleigh = rayleigh_coefficients(*disc_, sol.v, trace);
  sol.incident = trace;
  return sol;
}

TraceCoeffs rayleigh_coefficients(const CellDiscretization& disc, const Eigen::VectorXcd& v_nodal,
                                  const ModalTrace& incident) {
  TraceCoeffs r = disc.trace_basis().coefficients(disc.top_values(v_nodal));
  for (int j = -r.J; j <= r.J; ++j) r[j] -= incident.value[j];
  return r;
}

std::vector<Efficiency> efficiencies(const CellSolution& sol, const CellDiscretization& disc, double alpha_inc) {
  if (!sol.incident) throw Error("cellsolver", "efficiencies", "solution carries no incident trace");
  const BetaBranch& br = disc.branch();
  if (!(std::abs(alpha_inc) < br.k)) throw Error("cellsolver", "efficiencies", "evanescent incidence has no efficiencies");
  double shift = (alpha_inc - sol.alpha) / br.lambda_star;
  int n = static_cast<int>(std::lround(shift));
  if (std::abs(shift - n) > 1e-9 || std::abs(n) > sol.rayleigh.J)
    throw Error("cellsolver", "efficiencies", "alpha_inc is not a lattice shift of the solved quasi-momentum");
  const double beta_inc = br.exponent(alpha_inc).real();
  const double power = beta_inc * std::norm(sol.incident->value[n]);
  if (!(power > 0)) throw Error("cellsolver", "efficiencies", "incident amplitude is zero");
  std::vector<Efficiency> out;
  for (int j = -sol.rayleigh.J; j <= sol.rayleigh.J; ++j) {
    cplx beta = br.mode_exponent(j, sol.alpha);
    if (beta.real() > 0) out.push_back({j, beta.real() * std::norm(sol.rayleigh[j]) / power});
  }
  return out;
}

Eigen::VectorXcd solve_w_form(const CellDiscretization& disc, const ModalTrace& trace) {
  const CellMesh& mesh = disc.mesh();
  const double alpha = trace.alpha;
  const double k = disc.k();
  const int n = disc.num_dofs();
  std::vector<TripletC> trip;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    Element e = element(mesh, t);
    const double w = e.area / 3.0;
    for (int a = 0; a < 3; ++a) {
      int da = disc.dof(e.v[static_cast<std::size_t>(a)]);
      if (da < 0) continue;
      for (int b = 0; b < 3; ++b) {
        int db = disc.dof(e.v[static_cast<std::size_t>(b)]);
        if (db < 0) continue;
        cplx s = 0.0;
        for (int q = 0; q < 3; ++q) {
          const Point& x = e.mid[static_cast<std::size_t>(q)];
          cplx ph = std::exp(I * alpha * x.x1);
          double pa = hat_at_mid(a, q), pb = hat_at_mid(b, q);
          Eigen::Vector2cd gpa = ph * (e.grad[static_cast<std::size_t>(a)].cast<cplx>() + Eigen::Vector2cd(I * alpha * pa, 0.0));
          Eigen::Vector2cd gpb = ph * (e.grad[static_cast<std::size_t>(b)].cast<cplx>() + Eigen::Vector2cd(I * alpha * pb, 0.0));
          cplx psa = ph * pa, psb = ph * pb;
          s += w * (gpa.dot(gpb) - k * k * psb * std::conj(psa));  // dot() conjugates its first argument
        }
        trip.emplace_back(da, db, s);
      }
    }
  }
  // Quasi-periodic DtN: mode j is exp(i xi_j x1); coefficients of exp(i alpha x1) phi_a.
  const TopTraceBasis& basis = disc.trace_basis();
  const int J = basis.J();
  const double L = mesh.period;
  const auto& xs = basis.x1();
  const int nt = basis.size();
  Eigen::MatrixXcd T(2 * J + 1, nt);
  for (int j = -J; j <= J; ++j) {
    double omega = alpha + disc.branch().lambda_star * j;
    for (int a = 0; a < nt; ++a) {
      auto ua = static_cast<std::size_t>(a);
      auto prev = a > 0 ? ua - 1 : static_cast<std::size_t>(nt) - 1;
      // psi_a = exp(i alpha x1) phi_a; the phase cancels against exp(-i omega x1) up to lambda_star j.
      T(j + J, a) = (linear_exp_integral(xs[ua], xs[ua + 1], 1.0, 0.0, omega - alpha) +
                     linear_exp_integral(xs[prev], xs[prev + 1], 0.0, 1.0, omega - alpha)) /
                    L;
    }
  }
  for (int j = -J; j <= J; ++j) {
    cplx sym = -L * I * disc.branch().mode_exponent(j, alpha);
    for (int a = 0; a < nt; ++a)
      for (int b = 0; b < nt; ++b)
        trip.emplace_back(disc.top_dofs()[static_cast<std::size_t>(a)], disc.top_dofs()[static_cast<std::size_t>(b)],
                          sym * T(j + J, b) * std::conj(T(j + J, a)));
  }
  SparseMatrixC A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<SparseMatrixC, Eigen::COLAMDOrdering<int>> lu(A);
  if (lu.info() != Eigen::Success) throw Error("cellsolver", "solve_w_form", "sparse LU failed");

  TraceCoeffs g(J);
  for (int j = -J; j <= J; ++j) g[j] = (*trace.dx2)[j] - I * disc.branch().mode_exponent(j, alpha) * trace.value[j];
  Eigen::VectorXcd gv(2 * J + 1);
  for (int j = -J; j <= J; ++j) gv(j + J) = g[j];
  Eigen::VectorXcd top = L * (T.adjoint() * gv);
  Eigen::VectorXcd coef = lu.solve(disc.top_load_to_dofs(top));

  // Nodal w: coefficient times exp(i alpha x1) at the node itself.
  Eigen::VectorXcd out(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    int d = disc.dof(v);
    out(v) = d < 0 ? cplx(0.0) : coef(d) * std::exp(I * alpha * mesh.vertices[static_cast<std::size_t>(v)].x1);
  }
  return out;
}

}  // namespace bloch_scatter
