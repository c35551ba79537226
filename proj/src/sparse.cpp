#include "ocp/sparse.hpp"

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <string>

#include "ocp/error.hpp"

namespace ocp {

namespace {

std::atomic<std::uint64_t> g_factorizations{0};

void require_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw DimensionError(std::string(what) + ": expected length " + std::to_string(want) +
                         ", got " + std::to_string(got));
  }
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  require_size(b.size(), a.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

std::vector<double> DenseMatrix::multiply(std::span<const double> x) const {
  require_size(x.size(), static_cast<std::size_t>(cols_), "DenseMatrix::multiply");
  std::vector<double> y(rows_, 0.0);
  for (int i = 0; i < rows_; ++i) {
    double s = 0.0;
    for (int j = 0; j < cols_; ++j) s += (*this)(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

DenseMatrix DenseMatrix::transpose() const {
  DenseMatrix t(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

SparseMatrix SparseMatrix::from_triplets(int rows, int cols, std::span<const Triplet> entries) {
  if (rows < 0 || cols < 0) throw DimensionError("SparseMatrix: negative dimension");
  std::vector<Triplet> sorted(entries.begin(), entries.end());
  for (const auto& t : sorted) {
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
      throw DimensionError("SparseMatrix: triplet index out of range");
  }
  std::stable_sort(sorted.begin(), sorted.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  SparseMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.row_offsets_.assign(rows + 1, 0);
  for (std::size_t k = 0; k < sorted.size();) {
    const int r = sorted[k].row;
    const int c = sorted[k].col;
    double v = 0.0;
    while (k < sorted.size() && sorted[k].row == r && sorted[k].col == c) v += sorted[k++].value;
    m.col_indices_.push_back(c);
    m.values_.push_back(v);
    ++m.row_offsets_[r + 1];
  }
  std::partial_sum(m.row_offsets_.begin(), m.row_offsets_.end(), m.row_offsets_.begin());
  m.refresh_symmetry_flag();
  return m;
}

SparseMatrix SparseMatrix::identity(int n) {
  std::vector<double> ones(n, 1.0);
  return diagonal(ones);
}

SparseMatrix SparseMatrix::diagonal(std::span<const double> d) {
  std::vector<Triplet> t;
  t.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    t.push_back({static_cast<int>(i), static_cast<int>(i), d[i]});
  const int n = static_cast<int>(d.size());
  return from_triplets(n, n, t);
}

double SparseMatrix::coeff(int i, int j) const {
  const auto begin = col_indices_.begin() + row_offsets_[i];
  const auto end = col_indices_.begin() + row_offsets_[i + 1];
  const auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j) return 0.0;
  return values_[static_cast<std::size_t>(it - col_indices_.begin())];
}

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  require_size(x.size(), static_cast<std::size_t>(cols_), "SparseMatrix::multiply(x)");
  require_size(y.size(), static_cast<std::size_t>(rows_), "SparseMatrix::multiply(y)");
  for (int i = 0; i < rows_; ++i) {
    double s = 0.0;
    for (int k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) s += values_[k] * x[col_indices_[k]];
    y[i] = s;
  }
}

std::vector<double> SparseMatrix::multiply(std::span<const double> x) const {
  std::vector<double> y(rows_);
  multiply(x, y);
  return y;
}

void SparseMatrix::multiply_add(double alpha, std::span<const double> x, std::span<double> y) const {
  require_size(x.size(), static_cast<std::size_t>(cols_), "SparseMatrix::multiply_add(x)");
  require_size(y.size(), static_cast<std::size_t>(rows_), "SparseMatrix::multiply_add(y)");
  for (int i = 0; i < rows_; ++i) {
    double s = 0.0;
    for (int k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) s += values_[k] * x[col_indices_[k]];
    y[i] += alpha * s;
  }
}

SparseMatrix SparseMatrix::combine(double a, const SparseMatrix& A, double b, const SparseMatrix& B) {
  if (A.rows_ != B.rows_ || A.cols_ != B.cols_) throw DimensionError("SparseMatrix::combine");
  std::vector<Triplet> t;
  t.reserve(A.nonzeros() + B.nonzeros());
  for (int i = 0; i < A.rows_; ++i) {
    for (int k = A.row_offsets_[i]; k < A.row_offsets_[i + 1]; ++k)
      t.push_back({i, A.col_indices_[k], a * A.values_[k]});
    for (int k = B.row_offsets_[i]; k < B.row_offsets_[i + 1]; ++k)
      t.push_back({i, B.col_indices_[k], b * B.values_[k]});
  }
  return from_triplets(A.rows_, A.cols_, t);
}

SparseMatrix SparseMatrix::principal_submatrix(std::span<const int> index) const {
  if (rows_ != cols_) throw DimensionError("principal_submatrix of a non-square matrix");
  std::vector<int> position(cols_, -1);
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] < 0 || index[k] >= cols_) throw DimensionError("principal_submatrix index");
    position[index[k]] = static_cast<int>(k);
  }
  std::vector<Triplet> t;
  for (std::size_t k = 0; k < index.size(); ++k) {
    const int i = index[k];
    for (int p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) {
      const int j = position[col_indices_[p]];
      if (j >= 0) t.push_back({static_cast<int>(k), j, values_[p]});
    }
  }
  const int n = static_cast<int>(index.size());
  return from_triplets(n, n, t);
}

SparseMatrix SparseMatrix::transpose() const {
  std::vector<Triplet> t;
  t.reserve(nonzeros());
  for (int i = 0; i < rows_; ++i)
    for (int k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
      t.push_back({col_indices_[k], i, values_[k]});
  return from_triplets(cols_, rows_, t);
}

std::vector<double> SparseMatrix::row_sums() const {
  std::vector<double> s(rows_, 0.0);
  for (int i = 0; i < rows_; ++i)
    for (int k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) s[i] += values_[k];
  return s;
}

double SparseMatrix::max_asymmetry() const {
  if (rows_ != cols_) return INFINITY;
  double worst = 0.0;
  for (int i = 0; i < rows_; ++i)
    for (int k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
      worst = std::max(worst, std::abs(values_[k] - coeff(col_indices_[k], i)));
  return worst;
}

void SparseMatrix::refresh_symmetry_flag() {
  if (rows_ != cols_) {
    symmetric_ = false;
    return;
  }
  double scale = 0.0;
  for (double v : values_) scale = std::max(scale, std::abs(v));
  symmetric_ = max_asymmetry() <= 1e-14 * scale;
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix d(rows_, cols_);
  for (int i = 0; i < rows_; ++i)
    for (int k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) d(i, col_indices_[k]) = values_[k];
  return d;
}

std::uint64_t matrix_fingerprint(const SparseMatrix& a) noexcept {
  // FNV-1a over the CSR arrays.
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  const int dims[2] = {a.rows(), a.cols()};
  mix(dims, sizeof dims);
  mix(a.row_offsets().data(), a.row_offsets().size_bytes());
  mix(a.col_indices().data(), a.col_indices().size_bytes());
  mix(a.values().data(), a.values().size_bytes());
  return h;
}

struct SymFactor::Impl {
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> llt;
};

SymFactor::SymFactor(const SparseMatrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("factorize_spd: matrix is not square");
  if (!a.symmetric()) throw NotSpdError("factorize_spd: matrix not SPD (not symmetric)");
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(a.nonzeros());
  const auto off = a.row_offsets();
  const auto col = a.col_indices();
  const auto val = a.values();
  for (int i = 0; i < a.rows(); ++i)
    for (int k = off[i]; k < off[i + 1]; ++k) t.emplace_back(i, col[k], val[k]);
  Eigen::SparseMatrix<double> m(a.rows(), a.cols());
  m.setFromTriplets(t.begin(), t.end());

  auto impl = std::make_shared<Impl>();
  impl->llt.compute(m);
  if (impl->llt.info() != Eigen::Success) throw NotSpdError("factorize_spd: matrix not SPD");
  impl_ = std::move(impl);
  dimension_ = a.rows();
  fingerprint_ = matrix_fingerprint(a);
  g_factorizations.fetch_add(1, std::memory_order_relaxed);
}

void SymFactor::solve(std::span<const double> b, std::span<double> x) const {
  require_size(b.size(), static_cast<std::size_t>(dimension_), "solve_factored(b)");
  require_size(x.size(), static_cast<std::size_t>(dimension_), "solve_factored(x)");
  if (!impl_) throw std::logic_error("solve_factored: empty factor");
  Eigen::Map<const Eigen::VectorXd> rhs(b.data(), dimension_);
  Eigen::Map<Eigen::VectorXd> out(x.data(), dimension_);
  out = impl_->llt.solve(rhs);
}

std::vector<double> SymFactor::solve(std::span<const double> b) const {
  std::vector<double> x(dimension_);
  solve(b, x);
  return x;
}

SymFactor factorize_spd(const SparseMatrix& a) { return SymFactor(a); }

std::vector<double> solve_factored(const SymFactor& f, std::span<const double> b) { return f.solve(b); }

std::uint64_t factorization_count() noexcept { return g_factorizations.load(std::memory_order_relaxed); }

CgResult cg_spd(const LinearOperator& apply, std::span<const double> b, std::span<const double> x0,
                double rel_tol, int max_iter) {
  if (!(rel_tol > 0.0)) throw std::invalid_argument("cg_spd: rel_tol must be positive");
  require_size(x0.size(), b.size(), "cg_spd(x0)");
  const std::size_t n = b.size();
  CgResult out;
  out.x.assign(x0.begin(), x0.end());
  std::vector<double> r(n), q(n);
  apply(out.x, r);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
  std::vector<double> d = r;
  double rr = dot(r, r);
  const double r0 = std::sqrt(rr);
  out.residual_norms.push_back(r0);
  const double target = rel_tol * r0;
  while (std::sqrt(rr) > target && out.iterations < max_iter) {
    apply(d, q);
    const double curvature = dot(d, q);
    if (!(curvature > 0.0)) throw NotSpdError("cg_spd: operator not SPD (non-positive curvature)");
    const double step = rr / curvature;
    for (std::size_t i = 0; i < n; ++i) {
      out.x[i] += step * d[i];
      r[i] -= step * q[i];
    }
    const double rr_new = dot(r, r);
    for (std::size_t i = 0; i < n; ++i) d[i] = r[i] + (rr_new / rr) * d[i];
    rr = rr_new;
    ++out.iterations;
    out.residual_norms.push_back(std::sqrt(rr));
  }
  out.converged = std::sqrt(rr) <= target;
  return out;
}

std::vector<double> dense_solve_oracle(DenseMatrix a, std::span<const double> b) {
  const int n = a.rows();
  if (a.cols() != n) throw DimensionError("dense_solve_oracle: matrix is not square");
  if (n > kDenseOracleMaxDim) throw DimensionError("dense_solve_oracle: dimension above oracle cap");
  require_size(b.size(), static_cast<std::size_t>(n), "dense_solve_oracle(b)");
  std::vector<double> x(b.begin(), b.end());
  double scale = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) scale = std::max(scale, std::abs(a(i, j)));
  for (int k = 0; k < n; ++k) {
    int pivot = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(pivot, k))) pivot = i;
    if (std::abs(a(pivot, k)) <= 1e-14 * scale || scale == 0.0)
      throw std::domain_error("dense_solve_oracle: singular matrix");
    if (pivot != k) {
      for (int j = 0; j < n; ++j) std::swap(a(k, j), a(pivot, j));
      std::swap(x[k], x[pivot]);
    }
    for (int i = k + 1; i < n; ++i) {
      const double l = a(i, k) / a(k, k);
      if (l == 0.0) continue;
      for (int j = k; j < n; ++j) a(i, j) -= l * a(k, j);
      x[i] -= l * x[k];
    }
  }
  for (int k = n - 1; k >= 0; --k) {
    double s = x[k];
    for (int j = k + 1; j < n; ++j) s -= a(k, j) * x[j];
    x[k] = s / a(k, k);
  }
  return x;
}

}  // namespace ocp
