#include "bloch_scatter/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "bloch_scatter/error.hpp"

namespace bloch_scatter {

namespace {

using json = nlohmann::json;

[[noreturn]] void bad(const std::string& field, const std::string& msg) {
  throw Error("cli", "config", field + ": " + msg);
}

double number(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) bad(path + "." + key, "missing");
  if (!j[key].is_number()) bad(path + "." + key, "must be a number");
  double v = j[key].get<double>();
  if (!std::isfinite(v)) bad(path + "." + key, "must be finite");
  return v;
}

double number_or(const json& j, const std::string& key, const std::string& path, double fallback) {
  return j.contains(key) ? number(j, key, path) : fallback;
}

std::vector<double> numbers(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key) || !j[key].is_array()) bad(path + "." + key, "must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : j[key]) {
    if (!v.is_number()) bad(path + "." + key, "must be an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::string text(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key) || !j[key].is_string()) bad(path + "." + key, "must be a string");
  return j[key].get<std::string>();
}

// Two-column numeric CSV (comments with '#', optional header line).
std::pair<std::vector<double>, std::vector<double>> read_table(const std::filesystem::path& file, const std::string& field) {
  std::ifstream in(file);
  if (!in) bad(field, "cannot open " + file.string());
  std::vector<double> a, b;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream is(line);
    double x, y;
    if (!(is >> x >> y)) {
      if (a.empty()) continue;  // header
      bad(field, "malformed row in " + file.string() + ": " + line);
    }
    a.push_back(x);
    b.push_back(y);
  }
  return {a, b};
}

std::pair<std::vector<double>, std::vector<double>> table_data(const json& j, const std::string& path,
                                                               const std::filesystem::path& base) {
  if (j.contains("file")) {
    std::filesystem::path f = base / text(j, "file", path);
    if (!std::filesystem::exists(f)) bad(path + ".file", "file does not exist: " + f.string());
    return read_table(f, path + ".file");
  }
  return {numbers(j, "x", path), numbers(j, "z", path)};
}

Profile parse_profile(const json& j, const std::string& path, double period, const std::filesystem::path& base) {
  std::string type = text(j, "type", path);
  try {
    if (type == "flat") return Profile::flat(number(j, "height", path));
    if (type == "sine")
      return Profile::sine(number(j, "mean", path), number(j, "amplitude", path),
                           number_or(j, "wavenumber", path, 2.0 * std::numbers::pi / period),
                           number_or(j, "phase", path, 0.0));
    if (type == "table") {
      auto [x, z] = table_data(j, path, base);
      return Profile::periodic_table(x, z, period);
    }
  } catch (const Error& e) {
    if (e.module() == "cli") throw;
    bad(path, e.message());
  }
  bad(path + ".type", "unknown profile type '" + type + "' (flat, sine, table)");
}

Profile parse_perturbation(const json& j, const std::string& path, const std::filesystem::path& base) {
  if (j.is_null()) return Profile();
  std::string type = text(j, "type", path);
  try {
    if (type == "none") return Profile();
    if (type == "bump") return Profile::bump(number(j, "center", path), number(j, "half_width", path), number(j, "amplitude", path));
    if (type == "table") {
      auto [x, z] = table_data(j, path, base);
      return Profile::compact_table(x, z);
    }
  } catch (const Error& e) {
    if (e.module() == "cli") throw;
    bad(path, e.message());
  }
  bad(path + ".type", "unknown perturbation type '" + type + "' (none, bump, table)");
}

IncidentConfig parse_incident(const json& j, const std::string& path, const std::filesystem::path& base, double k) {
  IncidentConfig inc;
  std::string type = text(j, "type", path);
  inc.amplitude = number_or(j, "amplitude", path, 1.0);
  if (type == "plane" || type == "evanescent") {
    inc.kind = type == "plane" ? IncidentKind::plane : IncidentKind::evanescent;
    inc.alpha = number(j, "alpha", path);
    if (inc.kind == IncidentKind::plane && !(std::abs(inc.alpha) < k))
      bad(path + ".alpha", "a propagating plane wave needs |alpha| < k; use type 'evanescent'");
    if (inc.kind == IncidentKind::evanescent && !(std::abs(inc.alpha) > k))
      bad(path + ".alpha", "an evanescent wave needs |alpha| > k");
  } else if (type == "point") {
    inc.kind = IncidentKind::point;
    auto y = numbers(j, "y", path);
    if (y.size() != 2) bad(path + ".y", "must be [y1, y2]");
    inc.source = {y[0], y[1]};
  } else if (type == "herglotz") {
    inc.kind = IncidentKind::herglotz;
    if (j.contains("h_coefficients")) {
      inc.h_coefficients = numbers(j, "h_coefficients", path);
      if (inc.h_coefficients.empty()) bad(path + ".h_coefficients", "must not be empty");
    } else if (j.contains("phi_table")) {
      auto [t, p] = table_data(j["phi_table"], path + ".phi_table", base);
      if (t.size() < 2 || t.size() != p.size()) bad(path + ".phi_table", "need at least two (theta, phi) samples");
      for (std::size_t i = 1; i < t.size(); ++i)
        if (!(t[i] > t[i - 1])) bad(path + ".phi_table", "theta must increase strictly");
      inc.theta = t;
      inc.phi = p;
    } else {
      bad(path, "herglotz needs h_coefficients or phi_table");
    }
  } else {
    bad(path + ".type", "unknown incident type '" + type + "' (plane, evanescent, point, herglotz)");
  }
  return inc;
}

}  // namespace

HerglotzDensity IncidentConfig::density() const {
  HerglotzDensity d;
  if (!h_coefficients.empty()) {
    auto c = h_coefficients;
    d.h = [c](double t) {
      double s = 0.0;
      for (auto it = c.rbegin(); it != c.rend(); ++it) s = s * t + *it;
      return s;
    };
  } else {
    auto t = theta;
    auto p = phi;
    d.phi = [t, p](double th) {
      if (th <= t.front()) return p.front();
      if (th >= t.back()) return p.back();
      std::size_t i = static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), th) - t.begin()) - 1;
      double w = (th - t[i]) / (t[i + 1] - t[i]);
      return (1.0 - w) * p[i] + w * p[i + 1];
    };
  }
  return d;
}

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string RunConfig::hash() const { return fnv1a_hex(canonical); }

RunConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    bad("config", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) bad("config", "top level must be an object");
  RunConfig c;
  c.base_dir = base_dir;
  c.canonical = j.dump();
  c.name = j.value("name", std::string("run"));

  if (!j.contains("surface") || !j["surface"].is_object()) bad("surface", "missing");
  const json& s = j["surface"];
  c.surface.period = number(s, "period", "surface");
  if (!(c.surface.period > 0)) bad("surface.period", "must be positive");
  c.surface.lipschitz_bound = number_or(s, "lipschitz_bound", "surface", 10.0);
  if (!s.contains("profile")) bad("surface.profile", "missing");
  c.surface.zeta = parse_profile(s["profile"], "surface.profile", c.surface.period, base_dir);
  c.surface.delta = s.contains("perturbation") ? parse_perturbation(s["perturbation"], "surface.perturbation", base_dir) : Profile();

  if (!j.contains("domain") || !j["domain"].is_object()) bad("domain", "missing");
  const json& d = j["domain"];
  c.domain.k = number(d, "k", "domain");
  c.domain.H = number(d, "H", "domain");
  c.domain.H0 = number(d, "H0", "domain");
  if (!(c.domain.k > 0)) bad("domain.k", "must be positive");
  if (!(c.domain.H0 < c.domain.H)) bad("domain.H0", "must be smaller than domain.H");

  if (j.contains("mesh")) {
    c.h = number(j["mesh"], "h", "mesh");
    c.truncation = static_cast<int>(number_or(j["mesh"], "truncation", "mesh", 0));
  }
  if (!(c.h > 0)) bad("mesh.h", "must be positive");
  if (c.truncation < 0) bad("mesh.truncation", "must be nonnegative");

  if (!j.contains("incident") || !j["incident"].is_object()) bad("incident", "missing");
  c.incident = parse_incident(j["incident"], "incident", base_dir, c.domain.k);
  if (c.incident.kind == IncidentKind::point && !(c.incident.source.x2 > c.domain.H))
    bad("incident.y", "the source must lie above domain.H");

  if (j.contains("grid")) {
    const json& g = j["grid"];
    c.M = static_cast<int>(number_or(g, "M", "grid", c.M));
    if (g.contains("mode")) {
      std::string m = text(g, "mode", "grid");
      if (m == "uniform") c.grid_mode = GridMode::uniform;
      else if (m == "graded") c.grid_mode = GridMode::graded;
      else bad("grid.mode", "must be 'uniform' or 'graded'");
    }
  }
  if (c.M < 2) bad("grid.M", "must be at least 2");

  if (j.contains("solver")) {
    std::string sv = j["solver"].is_string() ? j["solver"].get<std::string>() : "";
    if (sv == "schur") c.solver = CoupledPath::schur;
    else if (sv == "fixedpoint") c.solver = CoupledPath::fixedpoint;
    else bad("solver", "must be 'schur' or 'fixedpoint'");
  }
  if (j.contains("output")) c.cell_radius = static_cast<int>(number_or(j["output"], "cells", "output", c.cell_radius));
  if (c.cell_radius < 0) bad("output.cells", "must be nonnegative");

  if (j.contains("analyze")) {
    const json& a = j["analyze"];
    c.analyze.P = static_cast<int>(number_or(a, "P", "analyze", c.analyze.P));
    c.analyze.delta = number_or(a, "delta", "analyze", 0.0);
    c.analyze.samples = static_cast<int>(number_or(a, "samples", "analyze", c.analyze.samples));
    c.analyze.min_distance = number_or(a, "min_distance", "analyze", c.analyze.min_distance);
    c.analyze.quadrature_study = a.value("quadrature_study", false);
    if (a.contains("study_M")) {
      c.analyze.study_M.clear();
      for (double m : numbers(a, "study_M", "analyze")) c.analyze.study_M.push_back(static_cast<int>(m));
    }
    if (c.analyze.P < 0) bad("analyze.P", "must be nonnegative");
    if (c.analyze.samples < 2 * (c.analyze.P + 1) + 4) bad("analyze.samples", "too few samples for the requested P");
  }

  try {
    c.surface.validate();
    c.domain.validate(c.surface);
  } catch (const Error& e) {
    bad(e.operation(), e.message());
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) bad("config", "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

}  // namespace bloch_scatter
