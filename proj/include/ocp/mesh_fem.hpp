#pragma once

#include <span>
#include <vector>

#include "ocp/field.hpp"
#include "ocp/sparse.hpp"

namespace ocp {

/// Uniform grid on the unit square, h = 2^-exponent. Interior nodes are numbered
/// lexicographically by (row, column), row following x2 and column following x1,
/// both running over 1..n_per_side.
class GridSpec {
 public:
  int exponent() const noexcept { return exponent_; }
  double h() const noexcept { return h_; }
  int n_per_side() const noexcept { return n_per_side_; }
  int node_count() const noexcept { return n_per_side_ * n_per_side_; }

  int node(int row, int col) const noexcept { return (row - 1) * n_per_side_ + (col - 1); }
  int row(int node) const noexcept { return node / n_per_side_ + 1; }
  int col(int node) const noexcept { return node % n_per_side_ + 1; }
  double x1(int node) const noexcept { return col(node) * h_; }
  double x2(int node) const noexcept { return row(node) * h_; }

 private:
  friend GridSpec build_grid(int exponent);
  int exponent_ = 0;
  double h_ = 0.0;
  int n_per_side_ = 0;
};

inline constexpr int kMinGridExponent = 2;
inline constexpr int kMaxGridExponent = 10;

GridSpec build_grid(int exponent);

enum class ElementFamily {
  p1,  ///< linear triangles, each cell split along its lower-left to upper-right diagonal
  q1,  ///< bilinear squares
};

const char* to_string(ElementFamily family) noexcept;

/// Mass and stiffness matrices. Restricted to interior nodes unless assembled
/// with assemble_full_node_set.
struct FemMatrices {
  ElementFamily family = ElementFamily::p1;
  SparseMatrix mass;
  SparseMatrix stiffness;
};

FemMatrices assemble_p1(const GridSpec& grid);
FemMatrices assemble_q1(const GridSpec& grid);
FemMatrices assemble(const GridSpec& grid, ElementFamily family);
/// All (n_per_side + 2)^2 nodes including the boundary, no Dirichlet elimination.
FemMatrices assemble_full_node_set(const GridSpec& grid, ElementFamily family);

struct Rect {
  double x1_lo = 0.0;
  double x1_hi = 1.0;
  double x2_lo = 0.0;
  double x2_hi = 1.0;
};

/// Interior nodes inside the closed control rectangle.
class SubdomainMask {
 public:
  const Rect& rect() const noexcept { return rect_; }
  int count() const noexcept { return static_cast<int>(indices_.size()); }
  int domain_nodes() const noexcept { return static_cast<int>(inside_.size()); }
  bool full() const noexcept { return count() == domain_nodes(); }
  bool contains(int node) const { return inside_.at(node) != 0; }
  /// Domain node index of each masked node, increasing.
  std::span<const int> indices() const noexcept { return indices_; }

  std::vector<double> restrict_to(std::span<const double> domain_values) const;
  std::vector<double> prolong(std::span<const double> control_values) const;
  /// out += a * E v
  void prolong_add(double a, std::span<const double> control_values, std::span<double> out) const;

 private:
  friend SubdomainMask subdomain_mask(const GridSpec& grid, const Rect& rect);
  Rect rect_;
  std::vector<char> inside_;
  std::vector<int> indices_;
};

SubdomainMask subdomain_mask(const GridSpec& grid, const Rect& rect);

/// Mass matrix of the control space: integrals over cells lying inside the
/// closed rectangle, between hat functions of masked nodes. Equals the domain
/// mass matrix when the rectangle is the whole square.
SparseMatrix assemble_subdomain_mass(const GridSpec& grid, const SubdomainMask& mask, ElementFamily family);

/// Clamp each nodal value into [a, b].
std::vector<double> nodal_project(std::span<const double> values, double a, double b);
void nodal_project_inplace(std::span<double> values, double a, double b);

/// tau * sum_n <fa(t_n), M_sub fb(t_n)>
double discrete_inner(const SpaceTimeField& fa, const SpaceTimeField& fb, const SparseMatrix& mass_sub, double tau);

}  // namespace ocp
