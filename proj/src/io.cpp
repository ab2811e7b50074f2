#include "bloch_scatter/io.hpp"

#include <cstdio>

#include "bloch_scatter/error.hpp"

namespace bloch_scatter {

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::string& config_hash,
                     const std::vector<std::string>& columns)
    : path_(path), file_(std::fopen(path.string().c_str(), "w")) {
  if (!file_) throw Error("cli", "write", "cannot open " + path.string() + " for writing");
  std::fprintf(file_, "# config_hash=%s\n", config_hash.c_str());
  row(columns);
}

CsvWriter::~CsvWriter() {
  if (file_) std::fclose(file_);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) std::fprintf(file_, i ? ",%s" : "%s", cells[i].c_str());
  std::fputc('\n', file_);
}

void CsvWriter::row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_number(v));
  row(cells);
}

void write_alpha_grid(const std::filesystem::path& path, const std::string& hash, const AlphaGrid& grid) {
  CsvWriter w(path, hash, {"alpha", "weight"});
  for (int m = 0; m < grid.size(); ++m) w.row(std::vector<double>{grid.nodes[static_cast<std::size_t>(m)], grid.weights[static_cast<std::size_t>(m)]});
}

void write_singular_set(const std::filesystem::path& path, const std::string& hash, const SingularSet& set) {
  CsvWriter w(path, hash, {"alpha", "multiplicity", "indices"});
  for (const auto& a : set.anomalies) {
    std::string idx;
    for (std::size_t i = 0; i < a.indices.size(); ++i) idx += (i ? " " : "") + std::to_string(a.indices[i]);
    w.row(std::vector<std::string>{format_number(a.alpha), std::to_string(a.multiplicity()), idx});
  }
}

void write_nodal_field(const std::filesystem::path& path, const std::string& hash, const std::vector<Point>& points,
                       const Eigen::VectorXcd& values) {
  CsvWriter w(path, hash, {"x1", "x2", "re", "im"});
  for (std::size_t i = 0; i < points.size(); ++i) {
    cplx v = values(static_cast<Eigen::Index>(i));
    w.row(std::vector<double>{points[i].x1, points[i].x2, v.real(), v.imag()});
  }
}

void write_efficiencies(const std::filesystem::path& path, const std::string& hash, const std::vector<Efficiency>& e) {
  CsvWriter w(path, hash, {"j", "e_j"});
  for (const auto& x : e) w.row(std::vector<std::string>{std::to_string(x.j), format_number(x.e)});
}

void write_mesh(const std::filesystem::path& dir, const std::string& hash, const CellMesh& mesh) {
  {
    CsvWriter w(dir / "mesh_vertices.csv", hash, {"x1", "x2"});
    for (const auto& p : mesh.vertices) w.row(std::vector<double>{p.x1, p.x2});
  }
  CsvWriter w(dir / "mesh_triangles.csv", hash, {"a", "b", "c"});
  for (const auto& t : mesh.triangles)
    w.row(std::vector<std::string>{std::to_string(t[0]), std::to_string(t[1]), std::to_string(t[2])});
}

void write_bloch_snapshot(const std::filesystem::path& path, const std::string& hash, const CellMesh& mesh,
                          const BlochField& field) {
  CsvWriter w(path, hash, {"m", "alpha", "x1", "x2", "re", "im"});
  for (int m = 0; m < field.grid.size(); ++m)
    for (int v = 0; v < mesh.num_vertices(); ++v) {
      cplx z = field.values(m, v);
      const Point& p = mesh.vertices[static_cast<std::size_t>(v)];
      w.row(std::vector<std::string>{std::to_string(m), format_number(field.grid.nodes[static_cast<std::size_t>(m)]),
                                     format_number(p.x1), format_number(p.x2), format_number(z.real()),
                                     format_number(z.imag())});
    }
}

void write_quadrature_table(const std::filesystem::path& path, const std::string& hash, const QuadratureStudy& study) {
  CsvWriter w(path, hash, {"mode", "M", "error"});
  for (const auto& r : study.rows)
    w.row(std::vector<std::string>{r.mode == GridMode::uniform ? "uniform" : "graded", std::to_string(r.M),
                                   format_number(r.error)});
}

}  // namespace bloch_scatter
