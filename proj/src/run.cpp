#include "bloch_scatter/run.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "bloch_scatter/anomaly.hpp"
#include "bloch_scatter/io.hpp"
#include "bloch_scatter/parallel.hpp"

namespace bloch_scatter {

namespace {

using json = nlohmann::json;

constexpr cplx I{0.0, 1.0};

const char* mode_name(GridMode m) { return m == GridMode::uniform ? "uniform" : "graded"; }
const char* path_name(CoupledPath p) { return p == CoupledPath::schur ? "schur" : "fixedpoint"; }

const char* incident_name(IncidentKind k) {
  switch (k) {
    case IncidentKind::plane: return "plane";
    case IncidentKind::evanescent: return "evanescent";
    case IncidentKind::point: return "point";
    case IncidentKind::herglotz: return "herglotz";
  }
  return "?";
}

void scale_traces(IncidentBloch& inc, cplx a) {
  if (a == cplx(1.0)) return;
  inc.field.values *= a;
  for (auto& t : inc.traces) {
    for (auto& c : t.value.c) c *= a;
    for (auto& c : t.dx2->c) c *= a;
  }
}

// Trace at a single alpha for the sweep used by analyze.
ModalTrace trace_at(const RunConfig& c, const CellDiscretization& disc, double alpha) {
  const BetaBranch& br = disc.branch();
  const double H = c.domain.H;
  ModalTrace t(alpha, disc.J());
  switch (c.incident.kind) {
    case IncidentKind::plane:
    case IncidentKind::evanescent:
      t = PlaneWave{alpha, br.k, c.incident.amplitude}.modal_trace(H, disc.J(), alpha, br.lambda_star);
      break;
    case IncidentKind::point: {
      AlphaGrid g;
      g.lambda_star = br.lambda_star;
      g.nodes = {alpha};
      g.weights = {br.lambda_star};
      IncidentBloch inc = point_source_bloch(c.incident.source, br, g, disc.mesh(), disc.J());
      t = inc.traces[0];
      break;
    }
    case IncidentKind::herglotz:
      t = herglotz_trace(c.incident.density(), br, alpha, H, disc.J());
      break;
  }
  if (c.incident.kind == IncidentKind::point || c.incident.kind == IncidentKind::herglotz) {
    for (auto& v : t.value.c) v *= c.incident.amplitude;
    for (auto& v : t.dx2->c) v *= c.incident.amplitude;
  }
  return t;
}

json mesh_json(const CellMesh& m, const CellDiscretization& d) {
  return {{"nx", m.nx}, {"ny", m.ny}, {"vertices", m.num_vertices()}, {"triangles", m.num_triangles()},
          {"dofs", d.num_dofs()}, {"max_edge", m.max_edge_length()}, {"truncation_J", d.J()}};
}

json anomalies_json(const SingularSet& s) {
  json a = json::array();
  for (const auto& x : s.anomalies) a.push_back({{"alpha", x.alpha}, {"indices", x.indices}});
  return a;
}

}  // namespace

void apply_overrides(RunConfig& c, const RunOverrides& o) {
  // Overrides are folded into the canonical text so the hash tracks them.
  if (o.grid_mode) {
    c.grid_mode = *o.grid_mode;
    c.canonical += std::string("|grid_mode=") + mode_name(c.grid_mode);
  }
  if (o.M) {
    if (*o.M < 2) throw Error("cli", "config", "--M: must be at least 2");
    c.M = *o.M;
    c.canonical += "|M=" + std::to_string(c.M);
  }
  if (o.solver) {
    c.solver = *o.solver;
    c.canonical += std::string("|solver=") + path_name(c.solver);
  }
}

std::string error_record(const std::string& module, const std::string& operation, const std::string& message) {
  return json{{"error", {{"module", module}, {"operation", operation}, {"message", message}}}}.dump();
}

std::string error_record(const Error& e) { return error_record(e.module(), e.operation(), e.message()); }

PipelineResult run_pipeline(const RunConfig& c, int threads, const std::optional<AlphaGrid>& grid_override) {
  PipelineResult r;
  CellMesh mesh = build_cell_mesh(c.surface, c.domain, c.h);
  auto disc = std::make_shared<CellDiscretization>(mesh, c.domain.k, c.truncation);
  r.disc = disc;
  const BetaBranch& br = disc->branch();
  PerturbationMap map(c.surface, c.domain);
  const bool perturbed = !c.surface.delta.is_zero();
  const bool plane = c.incident.kind == IncidentKind::plane || c.incident.kind == IncidentKind::evanescent;

  if (!perturbed && plane && !grid_override) {
    CellSolver solver(disc);
    PlaneWave pw{c.incident.alpha, c.domain.k, c.incident.amplitude};
    r.cell = solver.solve(pw.modal_trace(c.domain.H, disc->J(), c.incident.alpha, br.lambda_star));
    r.alpha_used = c.incident.alpha;
    const int R = c.cell_radius;
    r.physical.u.cell_radius = R;
    r.physical.u.values.resize(2 * R + 1, mesh.num_vertices());
    for (int j = -R; j <= R; ++j)
      for (int v = 0; v < mesh.num_vertices(); ++v)
        r.physical.u.cell(j)(v) =
            std::exp(I * c.incident.alpha * (disc->node_x1()[static_cast<std::size_t>(v)] + mesh.period * j)) * r.cell->v(v);
    r.physical.reference = mesh.vertices;
    r.physical.cell0_points = mesh.vertices;
    r.physical.period = mesh.period;
    return r;
  }

  AlphaGrid grid = grid_override ? *grid_override
                                 : make_alpha_grid(c.M, br.lambda_star, singular_set_dual_cell(c.domain.k, br.lambda_star), c.grid_mode);
  r.grid = grid;
  IncidentBloch inc;
  switch (c.incident.kind) {
    case IncidentKind::plane:
    case IncidentKind::evanescent: {
      PlaneWaveBloch pw = plane_wave_bloch_rhs(c.incident.alpha, grid, mesh, br, disc->J(), c.incident.amplitude);
      inc = std::move(pw.incident);
      r.snap_distance = pw.snap_distance;
      r.alpha_used = pw.alpha_used;
      break;
    }
    case IncidentKind::point:
      inc = point_source_bloch(c.incident.source, br, grid, mesh, disc->J());
      scale_traces(inc, c.incident.amplitude);
      break;
    case IncidentKind::herglotz:
      inc = herglotz_bloch(c.incident.density(), br, grid, mesh, disc->J());
      scale_traces(inc, c.incident.amplitude);
      break;
  }
  CouplingForm coupling = assemble_coupling(*disc, c.surface, c.domain);
  CoupledOptions opt;
  opt.path = c.solver;
  opt.threads = threads;
  r.coupled = solve_coupled(disc, coupling, inc, opt);
  r.physical = synthesize_physical(*disc, r.coupled->v, c.cell_radius, map);
  return r;
}

json cmd_solve(const RunConfig& c, const std::filesystem::path& out, int threads) {
  std::filesystem::create_directories(out);
  const std::string hash = c.hash();
  PipelineResult r = run_pipeline(c, threads);
  const CellDiscretization& disc = *r.disc;
  const CellMesh& mesh = disc.mesh();

  json man;
  man["config_hash"] = hash;
  man["name"] = c.name;
  man["mesh"] = mesh_json(mesh, disc);
  man["incident"] = {{"type", incident_name(c.incident.kind)}};
  if (c.incident.kind == IncidentKind::plane || c.incident.kind == IncidentKind::evanescent) {
    man["incident"]["alpha_inc"] = c.incident.alpha;
    man["incident"]["alpha_used"] = r.alpha_used;
    man["incident"]["snap_distance"] = r.snap_distance;
  }
  SingularSet sset = singular_set_dual_cell(c.domain.k, disc.branch().lambda_star);
  man["anomalies"] = anomalies_json(sset);
  write_singular_set(out / "singular_set.csv", hash, sset);
  write_mesh(out, hash, mesh);

  if (r.cell) {
    man["solver"] = "cell";
    man["max_cell_residual"] = r.cell->residual;
    man["near_anomaly"] = r.cell->near_anomaly;
    if (c.incident.kind == IncidentKind::plane) {
      auto eff = efficiencies(*r.cell, disc, c.incident.alpha);
      double total = 0.0;
      for (const auto& e : eff) total += e.e;
      man["energy_balance"] = total;
      write_efficiencies(out / "efficiencies.csv", hash, eff);
    }
  } else {
    const CoupledResult& cr = *r.coupled;
    man["solver"] = path_name(cr.path);
    man["grid"] = {{"M", r.grid->size()}, {"mode", mode_name(r.grid->mode)}};
    double worst = 0.0;
    int near = 0;
    for (std::size_t m = 0; m < cr.cell_residuals.size(); ++m) {
      worst = std::max(worst, cr.cell_residuals[m]);
      near += cr.near_anomaly[m] ? 1 : 0;
    }
    man["max_cell_residual"] = worst;
    man["near_anomaly_nodes"] = near;
    man["coupling_support"] = cr.u_support.size();
    if (cr.path == CoupledPath::schur) man["schur_rcond"] = cr.schur_rcond;
    else {
      man["iterations"] = cr.iterations;
      man["residual_history"] = cr.residual_history;
    }
    write_alpha_grid(out / "alpha_grid.csv", hash, *r.grid);
  }
  for (int j = -c.cell_radius; j <= c.cell_radius; ++j) {
    std::vector<Point> pts(static_cast<std::size_t>(mesh.num_vertices()));
    for (int v = 0; v < mesh.num_vertices(); ++v) pts[static_cast<std::size_t>(v)] = r.physical.point(j, v);
    write_nodal_field(out / ("field_cell_" + std::to_string(j) + ".csv"), hash, pts, r.physical.u.cell(j).transpose());
  }
  man["cells"] = c.cell_radius;
  std::ofstream(out / "manifest.json") << man.dump(2) << '\n';
  return man;
}

json cmd_analyze(const RunConfig& c, const std::filesystem::path& out, int threads) {
  std::filesystem::create_directories(out);
  const std::string hash = c.hash();
  threads = resolve_threads(threads);
  CellMesh mesh = build_cell_mesh(c.surface, c.domain, c.h);
  auto disc = std::make_shared<CellDiscretization>(mesh, c.domain.k, c.truncation);
  const BetaBranch& br = disc->branch();
  const double ls = br.lambda_star;

  json rep;
  rep["config_hash"] = hash;
  rep["name"] = c.name;
  rep["mesh"] = mesh_json(mesh, *disc);
  const int node = mesh.vertex(mesh.nx / 4, mesh.ny / 2);
  const Point np = mesh.vertices[static_cast<std::size_t>(node)];
  rep["functional"] = {{"primary", "real part of v at a fixed interior node"}, {"node", {np.x1, np.x2}},
                       {"secondary", "squared cell L2 norm of v"}};
  if (!c.surface.delta.is_zero())
    rep["note"] = "samples come from the periodic surface; the perturbation is ignored by the sweep";

  // Anomalies strictly inside the dual cell.
  SingularSet all = singular_set(c.domain.k, ls, -ls / 2, ls / 2);
  std::vector<Anomaly> inside;
  for (const auto& a : all.anomalies)
    if (std::abs(std::abs(a.alpha) - ls / 2) > 1e-12) inside.push_back(a);
  if (inside.empty()) {
    rep["status"] = "no anomalies in sweep range";
    rep["anomalies"] = json::array();
    std::ofstream(out / "analysis.json") << rep.dump(2) << '\n';
    return rep;
  }
  rep["status"] = "ok";

  // Distinct anomaly locations modulo lambda_star, for the default radius.
  std::vector<double> locs;
  for (double s : {c.domain.k, -c.domain.k}) {
    double r = std::remainder(s, ls);
    bool dup = false;
    for (double l : locs) dup = dup || std::abs(std::remainder(l - r, ls)) < 1e-12;
    if (!dup) locs.push_back(r);
  }
  auto gap_to_other = [&](double a0) {
    double g = ls;
    for (double l : locs) {
      double d = std::abs(std::remainder(l - a0, ls));
      if (d > 1e-12) g = std::min(g, d);
    }
    return g;
  };

  std::vector<std::unique_ptr<CellSolver>> solvers;
  for (int w = 0; w < threads; ++w) solvers.push_back(std::make_unique<CellSolver>(disc));
  const SparseMatrixC mass = disc->elements().M.cast<cplx>();
  auto sweep = [&](const std::vector<double>& alphas, std::vector<double>& g_lin, std::vector<double>& g_quad) {
    g_lin.assign(alphas.size(), 0.0);
    g_quad.assign(alphas.size(), 0.0);
    parallel_for(static_cast<int>(alphas.size()), threads, [&](int i, int w) {
      CellSolution s = solvers[static_cast<std::size_t>(w)]->solve(trace_at(c, *disc, alphas[static_cast<std::size_t>(i)]));
      g_lin[static_cast<std::size_t>(i)] = s.v(node).real();
      g_quad[static_cast<std::size_t>(i)] = s.dofs.dot(mass * s.dofs).real();
    });
  };

  json list = json::array();
  for (const auto& an : inside) {
    const double a0 = an.alpha;
    const double delta = c.analyze.delta > 0 ? c.analyze.delta : std::min(0.1 * ls, 0.5 * gap_to_other(a0));
    json entry{{"alpha0", a0}, {"indices", an.indices}, {"delta", delta}};
    for (Side side : {Side::left, Side::right}) {
      const double sg = side == Side::right ? 1.0 : -1.0;
      const int N = c.analyze.samples;
      std::vector<double> alphas;
      for (int i = 0; i < N; ++i)
        alphas.push_back(a0 + sg * c.analyze.min_distance * std::pow(delta / c.analyze.min_distance, static_cast<double>(i) / (N - 1)));
      std::sort(alphas.begin(), alphas.end());
      std::vector<double> gl, gq;
      sweep(alphas, gl, gq);
      AlphaSamples lin{"point_value", a0, side, alphas, gl};
      AlphaSamples quad{"cell_l2_norm_squared", a0, side, alphas, gq};

      std::vector<double> ealphas;
      for (int i = 0; i < 12; ++i)
        ealphas.push_back(a0 + sg * 0.1 * c.analyze.min_distance * std::pow(100.0, i / 11.0));
      std::sort(ealphas.begin(), ealphas.end());
      std::vector<double> el, eq;
      sweep(ealphas, el, eq);
      AlphaSamples ex{"point_value", a0, side, ealphas, el};

      json sj;
      for (auto* s : {&lin, &quad}) {
        AnomalyFit f = fit_sqrt_model(*s, c.analyze.P);
        AnomalyFit p = fit_polynomial(*s, c.analyze.P);
        sj[s->functional] = {{"residual", f.residual},
                             {"fit_residual", f.fit_residual},
                             {"accepted", f.accepted},
                             {"a", std::vector<double>(f.a.data(), f.a.data() + f.a.size())},
                             {"b", std::vector<double>(f.b.data(), f.b.data() + f.b.size())},
                             {"b0_standard_error", f.b_se(0)},
                             {"b0_significant", std::abs(f.b(0)) > 10.0 * f.b_se(0)},
                             {"polynomial_residual", p.residual}};
      }
      sj["exponent"] = estimate_exponent(ex, 1);
      const char* sn = side == Side::right ? "right" : "left";
      entry[sn] = sj;
      std::ostringstream fn;
      fn << "samples_" << std::to_string(list.size()) << "_" << sn << ".csv";
      CsvWriter w(out / fn.str(), hash, {"alpha", "point_value", "cell_l2_norm_squared"});
      for (std::size_t i = 0; i < alphas.size(); ++i) w.row(std::vector<double>{alphas[i], gl[i], gq[i]});
    }
    list.push_back(entry);
  }
  rep["anomalies"] = list;

  // Interval model between consecutive anomalies (periodically).
  {
    std::vector<double> ends;
    for (double l : locs) ends.push_back(l);
    std::sort(ends.begin(), ends.end());
    double lo = ends[0];
    double hi = ends.size() > 1 ? ends[1] : ends[0] + ls;
    std::vector<double> alphas;
    const int N = 2 * c.analyze.samples;
    for (int i = 0; i < N; ++i) {
      double s = (i + 0.5) / N;
      alphas.push_back(lo + (hi - lo) * 0.5 * (1.0 - std::cos(std::numbers::pi * s)));
    }
    std::vector<double> gl, gq;
    sweep(alphas, gl, gq);
    IntervalFit f = fit_interval_model(alphas, gl, lo, hi, c.analyze.P);
    rep["interval"] = {{"lo", lo}, {"hi", hi}, {"joint_residual", f.residual}, {"lo_only_residual", f.residual_lo},
                       {"hi_only_residual", f.residual_hi}};
  }

  if (c.analyze.quadrature_study) {
    const int R = c.cell_radius;
    auto field = [&](const AlphaGrid& g) {
      PipelineResult r = run_pipeline(c, threads, g);
      Eigen::VectorXcd f(r.physical.u.values.size());
      Eigen::Index i = 0;
      for (int j = -R; j <= R; ++j)
        for (Eigen::Index v = 0; v < r.physical.u.values.cols(); ++v) f(i++) = r.physical.u.cell(j)(v);
      return f;
    };
    QuadratureStudy st = quadrature_study(field, ls, singular_set_dual_cell(c.domain.k, ls), c.analyze.study_M);
    write_quadrature_table(out / "convergence.csv", hash, st);
    rep["quadrature_study"] = {{"order_uniform", st.order_uniform}, {"order_graded", st.order_graded},
                               {"reference_M", st.reference_M}};
  }
  std::ofstream(out / "analysis.json") << rep.dump(2) << '\n';
  return rep;
}

}  // namespace bloch_scatter
