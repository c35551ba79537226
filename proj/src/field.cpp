#include "ocp/field.hpp"

#include <cmath>
#include <string>

#include "ocp/error.hpp"

namespace ocp {

SpaceTimeField::SpaceTimeField(NodeSet set, int levels, int nodes, double fill)
    : set_(set), levels_(levels), nodes_(nodes) {
  if (levels < 0 || nodes < 0) throw DimensionError("SpaceTimeField: negative shape");
  values_.assign(static_cast<std::size_t>(levels) * nodes, fill);
}

std::span<double> SpaceTimeField::level(int n) {
  return std::span<double>(values_).subspan(static_cast<std::size_t>(n) * nodes_, nodes_);
}

std::span<const double> SpaceTimeField::level(int n) const {
  return std::span<const double>(values_).subspan(static_cast<std::size_t>(n) * nodes_, nodes_);
}

bool SpaceTimeField::same_shape(const SpaceTimeField& other) const noexcept {
  return set_ == other.set_ && levels_ == other.levels_ && nodes_ == other.nodes_;
}

void SpaceTimeField::require_same_shape(const SpaceTimeField& other, const char* what) const {
  if (!same_shape(other)) {
    throw DimensionError(std::string(what) + ": field shapes differ (" + std::to_string(levels_) + "x" +
                         std::to_string(nodes_) + " vs " + std::to_string(other.levels_) + "x" +
                         std::to_string(other.nodes_) + ")");
  }
}

SpaceTimeField& SpaceTimeField::axpy(double a, const SpaceTimeField& x) {
  require_same_shape(x, "SpaceTimeField::axpy");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += a * x.values_[i];
  return *this;
}

SpaceTimeField& SpaceTimeField::scale(double a) {
  for (double& v : values_) v *= a;
  return *this;
}

void SpaceTimeField::fill(double v) {
  for (double& x : values_) x = v;
}

double FieldGeometry::inner(const SpaceTimeField& a, const SpaceTimeField& b) const {
  a.require_same_shape(b, "discrete inner product");
  if (mass == nullptr || mass->rows() != a.nodes())
    throw DimensionError("discrete inner product: mass matrix does not match node set");
  std::vector<double> mb(a.nodes());
  double s = 0.0;
  for (int n = 0; n < a.levels(); ++n) {
    mass->multiply(b.level(n), mb);
    s += dot(a.level(n), mb);
  }
  return weight * s;
}

double FieldGeometry::norm(const SpaceTimeField& a) const { return std::sqrt(std::max(inner(a, a), 0.0)); }

}  // namespace ocp
