#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bloch_scatter/bloch.hpp"
#include "bloch_scatter/coupled.hpp"
#include "bloch_scatter/geometry.hpp"
#include "bloch_scatter/incident.hpp"

namespace bloch_scatter {

enum class IncidentKind { plane, evanescent, point, herglotz };

struct IncidentConfig {
  IncidentKind kind = IncidentKind::plane;
  double alpha = 0.0;      // plane / evanescent
  cplx amplitude = 1.0;
  Point source;            // point
  std::vector<double> h_coefficients;  // herglotz, factored: h(t) = sum c_n t^n
  std::vector<double> theta, phi;      // herglotz, tabulated phi(theta)

  HerglotzDensity density() const;
};

struct AnalyzeConfig {
  int P = 3;
  double delta = 0.0;     // 0 selects min(0.1 lambda_star, half the gap to the next anomaly)
  int samples = 24;       // per side
  double min_distance = 1e-5;
  bool quadrature_study = false;
  std::vector<int> study_M{32, 64, 128, 256};
};

struct RunConfig {
  std::string name;
  std::filesystem::path base_dir;  // relative file references resolve here
  SurfaceSpec surface;
  DomainSpec domain;
  double h = 0.2;
  int truncation = 0;  // 0: default J
  IncidentConfig incident;
  int M = 64;
  GridMode grid_mode = GridMode::graded;
  CoupledPath solver = CoupledPath::schur;
  int cell_radius = 2;
  AnalyzeConfig analyze;
  std::string canonical;  // canonical JSON text the hash is taken from

  std::string hash() const;
};

/// Parses and validates; every error names the offending field.
RunConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = ".");
RunConfig load_config(const std::filesystem::path& path);

/// FNV-1a 64-bit, as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace bloch_scatter
