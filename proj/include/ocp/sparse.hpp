#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace ocp {

struct Triplet {
  int row;
  int col;
  double value;
};

/// Row-major dense matrix, used for verification oracles only.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  double& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
  std::vector<double> multiply(std::span<const double> x) const;
  DenseMatrix transpose() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

/// Compressed sparse row matrix. Column indices are strictly increasing in each row.
class SparseMatrix {
 public:
  SparseMatrix() = default;

  /// Duplicate (row, col) entries are summed.
  static SparseMatrix from_triplets(int rows, int cols, std::span<const Triplet> entries);
  static SparseMatrix identity(int n);
  static SparseMatrix diagonal(std::span<const double> d);

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  std::size_t nonzeros() const noexcept { return values_.size(); }
  std::span<const int> row_offsets() const noexcept { return row_offsets_; }
  std::span<const int> col_indices() const noexcept { return col_indices_; }
  std::span<const double> values() const noexcept { return values_; }
  bool symmetric() const noexcept { return symmetric_; }

  double coeff(int i, int j) const;
  void multiply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> multiply(std::span<const double> x) const;
  /// y += alpha * A x
  void multiply_add(double alpha, std::span<const double> x, std::span<double> y) const;

  /// a*A + b*B; both operands must share dimensions.
  static SparseMatrix combine(double a, const SparseMatrix& A, double b, const SparseMatrix& B);
  SparseMatrix principal_submatrix(std::span<const int> index) const;
  SparseMatrix transpose() const;
  std::vector<double> row_sums() const;
  double max_asymmetry() const;
  DenseMatrix to_dense() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<int> row_offsets_{0};
  std::vector<int> col_indices_;
  std::vector<double> values_;
  bool symmetric_ = false;

  void refresh_symmetry_flag();
};

/// Reusable Cholesky factorization (fill-reducing AMD ordering) of an SPD matrix.
/// Copies share the factor; concurrent solves are safe.
class SymFactor {
 public:
  SymFactor() = default;
  explicit SymFactor(const SparseMatrix& a);

  int dimension() const noexcept { return dimension_; }
  std::uint64_t fingerprint() const noexcept { return fingerprint_; }
  void solve(std::span<const double> b, std::span<double> x) const;
  std::vector<double> solve(std::span<const double> b) const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
  int dimension_ = 0;
  std::uint64_t fingerprint_ = 0;
};

SymFactor factorize_spd(const SparseMatrix& a);
std::vector<double> solve_factored(const SymFactor& f, std::span<const double> b);

/// Number of SymFactor constructions in this process.
std::uint64_t factorization_count() noexcept;

std::uint64_t matrix_fingerprint(const SparseMatrix& a) noexcept;

using LinearOperator = std::function<void(std::span<const double>, std::span<double>)>;

struct CgResult {
  std::vector<double> x;
  int iterations = 0;
  bool converged = false;
  std::vector<double> residual_norms;
};

/// Plain conjugate gradients in the Euclidean inner product.
/// Stops when ||A x - b|| <= rel_tol * ||A x0 - b||.
CgResult cg_spd(const LinearOperator& apply, std::span<const double> b, std::span<const double> x0,
                double rel_tol, int max_iter);

/// Gaussian elimination with partial pivoting; verification use only.
std::vector<double> dense_solve_oracle(DenseMatrix a, std::span<const double> b);

inline constexpr int kDenseOracleMaxDim = 2000;

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace ocp
