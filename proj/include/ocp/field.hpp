#pragma once

#include <span>
#include <vector>

#include "ocp/sparse.hpp"

namespace ocp {

/// Which node set a field lives on: all interior nodes of the domain, or the
/// interior nodes inside the control rectangle.
enum class NodeSet { domain, control };

/// Nodal values on (node set) x (time levels). Level n holds t_{n+1}; the
/// initial time is data, never an unknown. Stationary problems use one level.
class SpaceTimeField {
 public:
  SpaceTimeField() = default;
  SpaceTimeField(NodeSet set, int levels, int nodes, double fill = 0.0);

  NodeSet node_set() const noexcept { return set_; }
  int levels() const noexcept { return levels_; }
  int nodes() const noexcept { return nodes_; }
  std::size_t size() const noexcept { return values_.size(); }

  std::span<double> level(int n);
  std::span<const double> level(int n) const;
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  bool same_shape(const SpaceTimeField& other) const noexcept;
  void require_same_shape(const SpaceTimeField& other, const char* what) const;

  /// this += a * x
  SpaceTimeField& axpy(double a, const SpaceTimeField& x);
  SpaceTimeField& scale(double a);
  SpaceTimeField& operator+=(const SpaceTimeField& x) { return axpy(1.0, x); }
  SpaceTimeField& operator-=(const SpaceTimeField& x) { return axpy(-1.0, x); }
  void fill(double v);

  friend SpaceTimeField operator+(SpaceTimeField a, const SpaceTimeField& b) { return a += b; }
  friend SpaceTimeField operator-(SpaceTimeField a, const SpaceTimeField& b) { return a -= b; }
  friend SpaceTimeField operator*(double s, SpaceTimeField a) { return a.scale(s); }

 private:
  NodeSet set_ = NodeSet::domain;
  int levels_ = 0;
  int nodes_ = 0;
  std::vector<double> values_;
};

/// Mass-weighted space-time L2 geometry: <a, b> = weight * sum_n a_n^T M b_n.
struct FieldGeometry {
  const SparseMatrix* mass = nullptr;
  double weight = 1.0;

  double inner(const SpaceTimeField& a, const SpaceTimeField& b) const;
  double norm(const SpaceTimeField& a) const;
};

}  // namespace ocp
