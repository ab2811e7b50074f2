#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "bloch_scatter/anomaly.hpp"
#include "bloch_scatter/bloch.hpp"
#include "bloch_scatter/cellsolver.hpp"
#include "bloch_scatter/coupled.hpp"

namespace bloch_scatter {

/// 17 significant digits in scientific notation.
std::string format_number(double v);

/// Writes "# config_hash=<hash>", a column header and the rows.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& config_hash, const std::vector<std::string>& columns);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void row(const std::vector<double>& values);
  void row(const std::vector<std::string>& cells);

 private:
  std::filesystem::path path_;
  std::FILE* file_;
};

void write_alpha_grid(const std::filesystem::path& path, const std::string& hash, const AlphaGrid& grid);
void write_singular_set(const std::filesystem::path& path, const std::string& hash, const SingularSet& set);
/// x1, x2, Re, Im per vertex.
void write_nodal_field(const std::filesystem::path& path, const std::string& hash, const std::vector<Point>& points,
                       const Eigen::VectorXcd& values);
void write_efficiencies(const std::filesystem::path& path, const std::string& hash, const std::vector<Efficiency>& e);
void write_mesh(const std::filesystem::path& dir, const std::string& hash, const CellMesh& mesh);
/// One file per grid node: alpha index, x1, x2, Re, Im.
void write_bloch_snapshot(const std::filesystem::path& path, const std::string& hash, const CellMesh& mesh,
                          const BlochField& field);
void write_quadrature_table(const std::filesystem::path& path, const std::string& hash, const QuadratureStudy& study);

}  // namespace bloch_scatter
