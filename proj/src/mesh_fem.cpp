#include "ocp/mesh_fem.hpp"

#include <array>
#include <cmath>
#include <string>

#include "ocp/error.hpp"

namespace ocp {

namespace {

constexpr double kCoordEps = 1e-12;

// Local node order: lower-left, lower-right, upper-right, upper-left.
struct CellCorners {
  std::array<int, 4> full_index;  // index into the (n+1)^2 full node set
};

// Reference element matrices on a cell of width h.
// P1: triangles (ll, lr, ur) and (ll, ur, ul).
constexpr std::array<std::array<int, 3>, 2> kP1Triangles{{{0, 1, 2}, {0, 2, 3}}};

std::array<std::array<double, 3>, 3> p1_stiffness(int tri) {
  // Gradients of the barycentric functions on the two right triangles, scaled by h.
  // Triangle 0: ll(0,0), lr(1,0), ur(1,1). Triangle 1: ll(0,0), ur(1,1), ul(0,1).
  static constexpr double g0[3][2] = {{-1, 0}, {1, -1}, {0, 1}};
  static constexpr double g1[3][2] = {{0, -1}, {1, 0}, {-1, 1}};
  const auto& g = tri == 0 ? g0 : g1;
  std::array<std::array<double, 3>, 3> k{};
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) k[a][b] = 0.5 * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
  return k;
}

template <class Visit>
void for_each_cell(const GridSpec& grid, Visit&& visit) {
  const int n = grid.n_per_side() + 1;  // cells per side
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const int ll = r * (n + 1) + c;
      CellCorners cell{{ll, ll + 1, ll + (n + 1) + 1, ll + (n + 1)}};
      visit(r, c, cell);
    }
  }
}

// Emits element contributions (local a, local b, mass, stiffness) for one cell.
template <class Emit>
void cell_contributions(ElementFamily family, double h, Emit&& emit) {
  if (family == ElementFamily::p1) {
    const double area = 0.5 * h * h;
    for (int t = 0; t < 2; ++t) {
      const auto k = p1_stiffness(t);
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          emit(kP1Triangles[t][a], kP1Triangles[t][b], area / 12.0 * (a == b ? 2.0 : 1.0), k[a][b]);
    }
  } else {
    static constexpr double m[4][4] = {{4, 2, 1, 2}, {2, 4, 2, 1}, {1, 2, 4, 2}, {2, 1, 2, 4}};
    static constexpr double k[4][4] = {{4, -1, -2, -1}, {-1, 4, -1, -2}, {-2, -1, 4, -1}, {-1, -2, -1, 4}};
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) emit(a, b, h * h / 36.0 * m[a][b], k[a][b] / 6.0);
  }
}

// Maps a full-grid node to its interior index, or -1 on the boundary.
int interior_index(const GridSpec& grid, int full) {
  const int n1 = grid.n_per_side() + 2;
  const int r = full / n1;
  const int c = full % n1;
  if (r == 0 || c == 0 || r == n1 - 1 || c == n1 - 1) return -1;
  return grid.node(r, c);
}

FemMatrices assemble_impl(const GridSpec& grid, ElementFamily family, bool eliminate_boundary) {
  std::vector<Triplet> mt;
  std::vector<Triplet> kt;
  const double h = grid.h();
  for_each_cell(grid, [&](int, int, const CellCorners& cell) {
    cell_contributions(family, h, [&](int a, int b, double mv, double kv) {
      int i = cell.full_index[a];
      int j = cell.full_index[b];
      if (eliminate_boundary) {
        i = interior_index(grid, i);
        j = interior_index(grid, j);
        if (i < 0 || j < 0) return;
      }
      mt.push_back({i, j, mv});
      if (kv != 0.0) kt.push_back({i, j, kv});
    });
  });
  const int n = eliminate_boundary ? grid.node_count() : (grid.n_per_side() + 2) * (grid.n_per_side() + 2);
  FemMatrices out;
  out.family = family;
  out.mass = SparseMatrix::from_triplets(n, n, mt);
  out.stiffness = SparseMatrix::from_triplets(n, n, kt);
  return out;
}

}  // namespace

GridSpec build_grid(int exponent) {
  if (exponent < kMinGridExponent || exponent > kMaxGridExponent) {
    throw ConfigError("grid exponent must lie in [" + std::to_string(kMinGridExponent) + ", " +
                      std::to_string(kMaxGridExponent) + "], got " + std::to_string(exponent));
  }
  GridSpec g;
  g.exponent_ = exponent;
  g.h_ = std::ldexp(1.0, -exponent);
  g.n_per_side_ = (1 << exponent) - 1;
  return g;
}

const char* to_string(ElementFamily family) noexcept { return family == ElementFamily::p1 ? "p1" : "q1"; }

FemMatrices assemble_p1(const GridSpec& grid) { return assemble_impl(grid, ElementFamily::p1, true); }
FemMatrices assemble_q1(const GridSpec& grid) { return assemble_impl(grid, ElementFamily::q1, true); }
FemMatrices assemble(const GridSpec& grid, ElementFamily family) { return assemble_impl(grid, family, true); }
FemMatrices assemble_full_node_set(const GridSpec& grid, ElementFamily family) {
  return assemble_impl(grid, family, false);
}

SubdomainMask subdomain_mask(const GridSpec& grid, const Rect& rect) {
  const bool in_range = rect.x1_lo >= 0.0 && rect.x1_hi <= 1.0 && rect.x2_lo >= 0.0 && rect.x2_hi <= 1.0;
  if (!(rect.x1_lo < rect.x1_hi) || !(rect.x2_lo < rect.x2_hi) || !in_range)
    throw ConfigError("control rectangle must satisfy 0 <= lo < hi <= 1 on both axes");
  SubdomainMask m;
  m.rect_ = rect;
  m.inside_.assign(grid.node_count(), 0);
  for (int k = 0; k < grid.node_count(); ++k) {
    const double x1 = grid.x1(k);
    const double x2 = grid.x2(k);
    if (x1 >= rect.x1_lo - kCoordEps && x1 <= rect.x1_hi + kCoordEps && x2 >= rect.x2_lo - kCoordEps &&
        x2 <= rect.x2_hi + kCoordEps) {
      m.inside_[k] = 1;
      m.indices_.push_back(k);
    }
  }
  return m;
}

std::vector<double> SubdomainMask::restrict_to(std::span<const double> domain_values) const {
  if (domain_values.size() != inside_.size()) throw DimensionError("SubdomainMask::restrict_to");
  std::vector<double> out(indices_.size());
  for (std::size_t k = 0; k < indices_.size(); ++k) out[k] = domain_values[indices_[k]];
  return out;
}

std::vector<double> SubdomainMask::prolong(std::span<const double> control_values) const {
  std::vector<double> out(inside_.size(), 0.0);
  prolong_add(1.0, control_values, out);
  return out;
}

void SubdomainMask::prolong_add(double a, std::span<const double> control_values, std::span<double> out) const {
  if (control_values.size() != indices_.size() || out.size() != inside_.size())
    throw DimensionError("SubdomainMask::prolong");
  for (std::size_t k = 0; k < indices_.size(); ++k) out[indices_[k]] += a * control_values[k];
}

SparseMatrix assemble_subdomain_mass(const GridSpec& grid, const SubdomainMask& mask, ElementFamily family) {
  if (mask.domain_nodes() != grid.node_count()) throw DimensionError("assemble_subdomain_mass: mask/grid mismatch");
  std::vector<int> local(grid.node_count(), -1);
  for (int k = 0; k < mask.count(); ++k) local[mask.indices()[k]] = k;
  const Rect& r = mask.rect();
  const double h = grid.h();
  std::vector<Triplet> t;
  for_each_cell(grid, [&](int row, int col, const CellCorners& cell) {
    const bool inside = col * h >= r.x1_lo - kCoordEps && (col + 1) * h <= r.x1_hi + kCoordEps &&
                        row * h >= r.x2_lo - kCoordEps && (row + 1) * h <= r.x2_hi + kCoordEps;
    if (!inside) return;
    cell_contributions(family, h, [&](int a, int b, double mv, double) {
      const int i = interior_index(grid, cell.full_index[a]);
      const int j = interior_index(grid, cell.full_index[b]);
      if (i < 0 || j < 0) return;
      t.push_back({local[i], local[j], mv});
    });
  });
  return SparseMatrix::from_triplets(mask.count(), mask.count(), t);
}

void nodal_project_inplace(std::span<double> values, double a, double b) {
  if (a > b) throw ConfigError("nodal projection requires lower bound <= upper bound");
  for (double& v : values) v = std::max(a, std::min(b, v));
}

std::vector<double> nodal_project(std::span<const double> values, double a, double b) {
  std::vector<double> out(values.begin(), values.end());
  nodal_project_inplace(out, a, b);
  return out;
}

double discrete_inner(const SpaceTimeField& fa, const SpaceTimeField& fb, const SparseMatrix& mass_sub, double tau) {
  return FieldGeometry{&mass_sub, tau}.inner(fa, fb);
}

}  // namespace ocp
