#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bloch_scatter/config.hpp"
#include "bloch_scatter/error.hpp"
#include "bloch_scatter/io.hpp"
#include "bloch_scatter/run.hpp"
#include "bloch_scatter/verify.hpp"

using namespace bloch_scatter;
namespace fs = std::filesystem;

namespace {

const fs::path configs = CONFIG_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("bloch_scatter_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string minimal(const std::string& domain) {
  return R"({"surface": {"period": 6.283185307179586, "profile": {"type": "flat", "height": 1.0}},
             "domain": )" + domain + R"(, "incident": {"type": "plane", "alpha": 0.3}})";
}

std::string error_field(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.message().substr(0, e.message().find(':'));
  }
  return "";
}

}  // namespace

TEST_CASE("numbers are written with 17 significant digits") {
  CHECK(format_number(0.1) == "1.0000000000000001e-01");
  CHECK(format_number(-2.5) == "-2.5000000000000000e+00");
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("validation names the offending field") {
  CHECK(error_field(minimal(R"({"k": 1.0, "H": 2.0, "H0": 2.5})")) == "domain.H0");
  CHECK(error_field(minimal(R"({"k": 1.0, "H": 2.0})")) == "domain.H0");
  CHECK(error_field(minimal(R"({"k": -1.0, "H": 2.0, "H0": 1.5})")) == "domain.k");
  std::string bad_grid = R"({"surface": {"period": 6.283185307179586, "profile": {"type": "flat", "height": 1.0}},
    "domain": {"k": 1.0, "H": 2.0, "H0": 1.5}, "incident": {"type": "plane", "alpha": 0.3}, "grid": {"M": 1}})";
  CHECK(error_field(bad_grid) == "grid.M");
  std::string missing_file = R"({"surface": {"period": 6.283185307179586, "profile": {"type": "table", "file": "nope.txt"}},
    "domain": {"k": 1.0, "H": 2.0, "H0": 1.5}, "incident": {"type": "plane", "alpha": 0.3}})";
  CHECK(error_field(missing_file) == "surface.profile.file");
  CHECK(error_field(minimal(R"({"k": 1.0, "H": 2.0, "H0": 1.5})")) == "");
}

TEST_CASE("the hash follows the canonical content") {
  RunConfig a = parse_config(minimal(R"({"k": 1.0, "H": 2.0, "H0": 1.5})"));
  RunConfig b = parse_config(minimal(R"({"H0": 1.5, "k": 1.0,   "H": 2.0})"));
  RunConfig c = parse_config(minimal(R"({"k": 1.1, "H": 2.0, "H0": 1.5})"));
  CHECK(a.hash() == b.hash());
  CHECK(a.hash() != c.hash());
  RunOverrides o;
  o.M = 40;
  apply_overrides(b, o);
  CHECK(b.M == 40);
  CHECK(a.hash() != b.hash());
}

TEST_CASE("solve on the flat config gives unit specular efficiency") {
  fs::path out = scratch("flat");
  nlohmann::json man = cmd_solve(load_config(configs / "flat.json"), out, 1);
  CHECK(man["energy_balance"].get<double>() == doctest::Approx(1.0).epsilon(1e-6));
  std::ifstream in(out / "efficiencies.csv");
  std::string header, cols, row;
  std::getline(in, header);
  std::getline(in, cols);
  CHECK(header.rfind("# config_hash=", 0) == 0);
  double e0 = -1.0;
  while (std::getline(in, row)) {
    std::stringstream ss(row);
    std::string j, e;
    std::getline(ss, j, ',');
    std::getline(ss, e, ',');
    if (std::stoi(j) == 0) e0 = std::stod(e);
  }
  CHECK(e0 == doctest::Approx(1.0).epsilon(1e-6));
  for (const char* f : {"manifest.json", "field_cell_0.csv", "field_cell_-2.csv", "singular_set.csv", "mesh_vertices.csv"})
    CHECK(fs::exists(out / f));
}

TEST_CASE("Schur and fixed-point solves of the perturbed config agree") {
  RunConfig cfg = load_config(configs / "perturbed.json");
  fs::path a = scratch("schur"), b = scratch("fp");
  cmd_solve(cfg, a, 1);
  RunOverrides o;
  o.solver = CoupledPath::fixedpoint;
  RunConfig fp = cfg;
  apply_overrides(fp, o);
  cmd_solve(fp, b, 1);
  for (int j = -2; j <= 2; ++j) {
    std::string name = "field_cell_" + std::to_string(j) + ".csv";
    std::ifstream fa(a / name), fb(b / name);
    std::string la, lb;
    std::getline(fa, la);
    std::getline(fb, lb);
    std::getline(fa, la);
    std::getline(fb, lb);
    double worst = 0.0, scale = 0.0;
    while (std::getline(fa, la) && std::getline(fb, lb)) {
      std::stringstream sa(la), sb(lb);
      std::string ca, cb;
      for (int c = 0; c < 4; ++c) {
        std::getline(sa, ca, ',');
        std::getline(sb, cb, ',');
        if (c >= 2) {
          worst = std::max(worst, std::abs(std::stod(ca) - std::stod(cb)));
          scale = std::max(scale, std::abs(std::stod(ca)));
        }
      }
    }
    CHECK(worst <= 1e-8 * scale);
  }
}

TEST_CASE("analyze: empty sweep range and byte-identical reruns") {
  fs::path out = scratch("none");
  nlohmann::json rep = cmd_analyze(load_config(configs / "no_anomaly.json"), out, 1);
  CHECK(rep["status"] == "no anomalies in sweep range");

  RunConfig w = load_config(configs / "wood_anomaly.json");
  fs::path a = scratch("wood_a"), b = scratch("wood_b");
  cmd_analyze(w, a, 1);
  cmd_analyze(w, b, 2);
  for (const auto& f : fs::directory_iterator(a)) CHECK(slurp(f.path()) == slurp(b / f.path().filename()));
}

TEST_CASE("command-line front end: exit codes and error records") {
  const std::string cli = CLI_PATH;
  fs::path err = scratch("err.txt");
  std::string bad = cli + " solve --config " + (configs / "bad_domain.json").string() + " --out " +
                    scratch("bad").string() + " 2> " + err.string();
  int rc = std::system(bad.c_str());
  CHECK(rc != 0);
  std::string rec = slurp(err);
  nlohmann::json j = nlohmann::json::parse(rec);
  CHECK(j["error"]["module"] == "cli");
  CHECK(j["error"]["message"].get<std::string>().find("domain.H0") == 0);

  std::string verify = cli + " verify > " + scratch("verify.txt").string();
  CHECK(std::system(verify.c_str()) == 0);
}

TEST_CASE("verify localizes an injected branch-sign bug") {
  VerifyHooks bug;
  bug.exponent = [](const BetaBranch& b, double xi) { return std::conj(b.exponent(xi)); };
  auto results = run_properties(bug, 1);
  for (const auto& r : results) {
    if (r.name == "branch_signs") CHECK_FALSE(r.pass);
    else CHECK(r.pass);
  }
}
