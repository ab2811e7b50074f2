#include "bloch_scatter/bloch.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "bloch_scatter/error.hpp"

namespace bloch_scatter {

namespace {

constexpr cplx I{0.0, 1.0};

// Representative of alpha in (-ls/2, ls/2].
double wrap(double alpha, double ls) {
  double r = std::remainder(alpha, ls);
  if (r <= -ls / 2) r += ls;
  return r;
}

std::vector<double> uniform_nodes(int M, double ls, double shift) {
  std::vector<double> nodes(static_cast<std::size_t>(M));
  for (int m = 0; m < M; ++m) nodes[static_cast<std::size_t>(m)] = -ls / 2 + (m + 0.5 + shift) * ls / M;
  return nodes;
}

double min_distance(const std::vector<double>& nodes, const std::vector<double>& anomalies, double ls) {
  double d = std::numeric_limits<double>::infinity();
  for (double a : nodes)
    for (double s : anomalies) d = std::min(d, std::abs(std::remainder(a - s, ls)));
  return d;
}

}  // namespace

int AlphaGrid::nearest(double alpha) const {
  int best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (int m = 0; m < size(); ++m) {
    double d = std::abs(offset(m, alpha));
    if (d < bd) {
      bd = d;
      best = m;
    }
  }
  return best;
}

double AlphaGrid::offset(int m, double alpha) const {
  return std::remainder(alpha - nodes[static_cast<std::size_t>(m)], lambda_star);
}

AlphaGrid make_alpha_grid(int M, double lambda_star, const SingularSet& anomalies, GridMode mode) {
  if (M < 2) throw Error("bloch", "make_alpha_grid", "need at least 2 nodes");
  AlphaGrid grid;
  grid.lambda_star = lambda_star;
  grid.mode = mode;

  std::vector<double> cuts;
  for (double a : anomalies.locations()) cuts.push_back(wrap(a, lambda_star));
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }),
             cuts.end());
  if (cuts.size() > 1 && std::abs(cuts.back() - cuts.front() - lambda_star) < 1e-12) cuts.pop_back();
  grid.anomalies = cuts;

  if (mode == GridMode::uniform || cuts.empty()) {
    double shift = 0.0;
    grid.nodes = uniform_nodes(M, lambda_star, shift);
    if (min_distance(grid.nodes, cuts, lambda_star) < 1e-8) {
      shift = 0.25;
      grid.nodes = uniform_nodes(M, lambda_star, shift);
    }
    grid.weights.assign(static_cast<std::size_t>(M), lambda_star / M);
    return grid;
  }

  const std::size_t S = cuts.size();
  if (static_cast<std::size_t>(M) < 2 * S) {
    std::ostringstream os;
    os << "graded grid needs at least " << 2 * S << " nodes for " << S << " anomalies, got " << M;
    throw Error("bloch", "make_alpha_grid", os.str());
  }

  // Each arc between consecutive anomalies (periodically) splits into two halves.
  struct Half {
    double endpoint;
    double direction;
    double length;
    int count = 0;
  };
  std::vector<Half> halves;
  for (std::size_t i = 0; i < S; ++i) {
    double a = cuts[i];
    double b = i + 1 < S ? cuts[i + 1] : cuts[0] + lambda_star;
    double half = 0.5 * (b - a);
    halves.push_back({a, +1.0, half});
    halves.push_back({b, -1.0, half});
  }

  // Equal spacing in t: counts proportional to sqrt(length), largest remainder.
  double total = 0.0;
  for (const auto& h : halves) total += std::sqrt(h.length);
  int assigned = 0;
  std::vector<std::pair<double, std::size_t>> remainders;
  const int spare = M - static_cast<int>(halves.size());
  for (std::size_t i = 0; i < halves.size(); ++i) {
    double share = spare * std::sqrt(halves[i].length) / total;
    halves[i].count = 1 + static_cast<int>(std::floor(share));
    assigned += halves[i].count;
    remainders.emplace_back(share - std::floor(share), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& x, const auto& y) { return x.first > y.first; });
  for (std::size_t r = 0; assigned < M; ++r, ++assigned) halves[remainders[r % remainders.size()].second].count++;

  std::vector<std::pair<double, double>> nodes;
  for (const auto& h : halves) {
    double T = std::sqrt(h.length);
    double dt = T / h.count;
    for (int q = 0; q < h.count; ++q) {
      double t = (q + 0.5) * dt;
      nodes.emplace_back(wrap(h.endpoint + h.direction * t * t, lambda_star), 2.0 * t * dt);
    }
  }
  std::sort(nodes.begin(), nodes.end());
  for (auto [a, w] : nodes) {
    grid.nodes.push_back(a);
    grid.weights.push_back(w);
  }
  return grid;
}

double BlochField::squared_norm() const {
  double s = 0.0;
  for (int m = 0; m < grid.size(); ++m) s += grid.weights[static_cast<std::size_t>(m)] * values.row(m).squaredNorm();
  return s;
}

void BlochField::to_periodized(const std::vector<double>& node_x1) {
  if (representation == Representation::periodized) return;
  for (int m = 0; m < grid.size(); ++m) {
    double a = grid.nodes[static_cast<std::size_t>(m)];
    for (Eigen::Index n = 0; n < values.cols(); ++n) values(m, n) *= std::exp(-I * a * node_x1[static_cast<std::size_t>(n)]);
  }
  representation = Representation::periodized;
}

void BlochField::to_quasi_periodic(const std::vector<double>& node_x1) {
  if (representation == Representation::quasi_periodic) return;
  for (int m = 0; m < grid.size(); ++m) {
    double a = grid.nodes[static_cast<std::size_t>(m)];
    for (Eigen::Index n = 0; n < values.cols(); ++n) values(m, n) *= std::exp(I * a * node_x1[static_cast<std::size_t>(n)]);
  }
  representation = Representation::quasi_periodic;
}

BlochField bloch_forward(const PhysicalField& u, const AlphaGrid& grid, double period) {
  const double scale = std::sqrt(period / (2.0 * std::numbers::pi));
  const int Jc = u.cell_radius;
  Eigen::MatrixXcd phase(grid.size(), u.num_cells());
  for (int m = 0; m < grid.size(); ++m)
    for (int j = -Jc; j <= Jc; ++j) phase(m, j + Jc) = scale * std::exp(-I * grid.nodes[static_cast<std::size_t>(m)] * period * static_cast<double>(j));
  BlochField w;
  w.grid = grid;
  w.representation = BlochField::Representation::quasi_periodic;
  w.values = phase * u.values;
  return w;
}

PhysicalField bloch_inverse(const BlochField& w, int cell_radius, double period) {
  if (w.representation != BlochField::Representation::quasi_periodic) {
    throw Error("bloch", "bloch_inverse", "input must be in the quasi-periodic representation");
  }
  const double scale = std::sqrt(period / (2.0 * std::numbers::pi));
  const int M = w.grid.size();
  Eigen::MatrixXcd phase(2 * cell_radius + 1, M);
  for (int j = -cell_radius; j <= cell_radius; ++j)
    for (int m = 0; m < M; ++m)
      phase(j + cell_radius, m) = scale * w.grid.weights[static_cast<std::size_t>(m)] *
                                  std::exp(I * period * static_cast<double>(j) * w.grid.nodes[static_cast<std::size_t>(m)]);
  PhysicalField u;
  u.cell_radius = cell_radius;
  u.values = phase * w.values;
  u.aliasing_warning = 2 * cell_radius > M;
  return u;
}

}  // namespace bloch_scatter
