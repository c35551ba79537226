#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "ocp/field.hpp"
#include "ocp/sparse.hpp"

namespace testutil {

inline ocp::SpaceTimeField random_like(const ocp::SpaceTimeField& shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  ocp::SpaceTimeField f = shape;
  for (double& v : f.values()) v = d(rng);
  return f;
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a[j] - b[j]));
  return m;
}

inline double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

/// Dense matrix of a linear field map, one unit input per column.
inline ocp::DenseMatrix dense_of(const std::function<ocp::SpaceTimeField(const ocp::SpaceTimeField&)>& f,
                                 const ocp::SpaceTimeField& in_shape) {
  const int n = static_cast<int>(in_shape.size());
  ocp::DenseMatrix m;
  for (int j = 0; j < n; ++j) {
    ocp::SpaceTimeField e = in_shape;
    e.fill(0.0);
    e.values()[static_cast<std::size_t>(j)] = 1.0;
    const ocp::SpaceTimeField col = f(e);
    if (j == 0) m = ocp::DenseMatrix(static_cast<int>(col.size()), n);
    for (int r = 0; r < static_cast<int>(col.size()); ++r) m(r, j) = col.values()[static_cast<std::size_t>(r)];
  }
  return m;
}

/// Block-diagonal weight * diag(M, ..., M) as a dense matrix.
inline ocp::DenseMatrix dense_weight(const ocp::SparseMatrix& mass, int levels, double weight) {
  const int n = mass.rows();
  ocp::DenseMatrix w(n * levels, n * levels);
  const ocp::DenseMatrix md = mass.to_dense();
  for (int l = 0; l < levels; ++l)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) w(l * n + i, l * n + j) = weight * md(i, j);
  return w;
}

inline ocp::DenseMatrix dense_product(const ocp::DenseMatrix& a, const ocp::DenseMatrix& b) {
  ocp::DenseMatrix c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

}  // namespace testutil
