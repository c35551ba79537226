#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "ocp/field.hpp"
#include "ocp/mesh_fem.hpp"
#include "ocp/sparse.hpp"

namespace ocp {

enum class PdeKind { parabolic, wave, elliptic };

const char* to_string(PdeKind kind) noexcept;

/// Uniform time grid t_n = n * tau, n = 0..steps, with steps * tau == T exactly.
struct TimeGrid {
  double final_time = 1.0;
  double tau = 1.0;
  int steps = 1;
};

TimeGrid make_time_grid(double final_time, double tau);

/// Source term and initial data entering the affine part S(0) of the solution
/// operator. Empty vectors mean zero.
struct ForcingData {
  /// Nodal source on the domain at t_0..t_N (parabolic/wave) or a single level (elliptic).
  std::vector<std::vector<double>> source;
  /// y(0) for parabolic and wave problems.
  std::vector<double> initial;
  /// dy/dt(0) for wave problems.
  std::vector<double> initial_velocity;
  /// Source on the control node set entering like the control itself, same levels as `source`.
  std::vector<std::vector<double>> control_source;
};

/// A factorized solution operator S(u) = S_bar u + S(0) for one state equation,
/// together with the exact discrete adjoint S_bar^* with respect to the
/// mass-weighted space-time inner products. Immutable once constructed.
class PdeOperator {
 public:
  PdeOperator(GridSpec grid, FemMatrices fem, SubdomainMask mask, TimeGrid time);
  virtual ~PdeOperator() = default;
  PdeOperator(const PdeOperator&) = delete;
  PdeOperator& operator=(const PdeOperator&) = delete;

  virtual PdeKind kind() const noexcept = 0;

  /// S(u) with the given data; data == nullptr gives the linear part S_bar u.
  virtual SpaceTimeField forward(const SpaceTimeField& u, const ForcingData* data) const = 0;
  /// S_bar^* r, an element of the control space.
  virtual SpaceTimeField adjoint(const SpaceTimeField& r) const = 0;

  SpaceTimeField apply_linear(const SpaceTimeField& u) const { return forward(u, nullptr); }
  /// S(0): the state with zero control and full data.
  SpaceTimeField offset(const ForcingData& data) const;

  const GridSpec& grid() const noexcept { return grid_; }
  const FemMatrices& fem() const noexcept { return fem_; }
  const SubdomainMask& mask() const noexcept { return mask_; }
  const TimeGrid& time() const noexcept { return time_; }
  const SparseMatrix& state_mass() const noexcept { return fem_.mass; }
  const SparseMatrix& control_mass() const noexcept { return control_mass_; }

  /// Number of unknown time levels (N, or 1 for stationary problems).
  int levels() const noexcept { return levels_; }
  /// Time quadrature weight of the inner products (tau, or 1 for stationary problems).
  double time_weight() const noexcept { return weight_; }
  FieldGeometry state_geometry() const noexcept { return {&fem_.mass, weight_}; }
  FieldGeometry control_geometry() const noexcept { return {&control_mass_, weight_}; }

  SpaceTimeField zero_control() const;
  SpaceTimeField zero_state() const;

  /// Sparse factorizations performed while building this operator.
  int factorizations() const noexcept { return factorizations_; }

 protected:
  void set_levels(int levels, double weight) {
    levels_ = levels;
    weight_ = weight;
  }
  void require_control(const SpaceTimeField& u, const char* what) const;
  void require_state(const SpaceTimeField& y, const char* what) const;
  SymFactor factorize(const SparseMatrix& a);
  /// out += a * E M_omega v   (the control source in the domain)
  void add_control_source(double a, std::span<const double> v, std::span<double> out) const;
  /// out += a * (M f^n + E M_omega g^n) for the data source f and control-set source g
  void add_data_source(double a, const ForcingData* data, int n, std::span<double> out) const;

  GridSpec grid_;
  FemMatrices fem_;
  SubdomainMask mask_;
  TimeGrid time_;
  SparseMatrix control_mass_;

 private:
  int levels_ = 1;
  double weight_ = 1.0;
  int factorizations_ = 0;
};

/// dy/dt - nu Lap y + a0 y = f + u chi_omega, backward Euler in time:
/// A y^n = M y^{n-1} + tau (M f^n + E M_omega u^n), A = (1 + tau a0) M + tau nu K.
class ParabolicOperator final : public PdeOperator {
 public:
  ParabolicOperator(GridSpec grid, FemMatrices fem, SubdomainMask mask, TimeGrid time, double nu, double a0);

  PdeKind kind() const noexcept override { return PdeKind::parabolic; }
  SpaceTimeField forward(const SpaceTimeField& u, const ForcingData* data) const override;
  SpaceTimeField adjoint(const SpaceTimeField& r) const override;

  double nu() const noexcept { return nu_; }
  double a0() const noexcept { return a0_; }
  const SparseMatrix& step_matrix() const noexcept { return step_matrix_; }

 private:
  double nu_;
  double a0_;
  SparseMatrix step_matrix_;
  SymFactor step_factor_;
};

/// d2y/dt2 - Lap y = f + u chi_omega with the averaged central difference
/// M (y^{n+1} - 2y^n + y^{n-1}) / tau^2 + K (y^{n+1} + 2y^n + y^{n-1}) / 4 = M f^n + E M_omega u^n,
/// started by y^1 = y^0 + tau y_1 + tau^2/2 M^-1 (M f^0 + E M_omega u^1 - K y^0).
class WaveOperator final : public PdeOperator {
 public:
  WaveOperator(GridSpec grid, FemMatrices fem, SubdomainMask mask, TimeGrid time);

  PdeKind kind() const noexcept override { return PdeKind::wave; }
  SpaceTimeField forward(const SpaceTimeField& u, const ForcingData* data) const override;
  SpaceTimeField adjoint(const SpaceTimeField& r) const override;

  /// Conserved energy 1/2 |v^{n+1/2}|_M^2 + 1/2 |(y^{n+1} + y^n)/2|_K^2 of consecutive levels.
  double energy(std::span<const double> y_next, std::span<const double> y_curr) const;

 private:
  SparseMatrix step_matrix_;  // M + tau^2/4 K
  SymFactor step_factor_;
  SymFactor mass_factor_;
};

/// -Lap y = u chi_omega (+ f) with homogeneous Dirichlet data: K y = M f + E M_omega u.
class EllipticOperator final : public PdeOperator {
 public:
  EllipticOperator(GridSpec grid, FemMatrices fem, SubdomainMask mask);

  PdeKind kind() const noexcept override { return PdeKind::elliptic; }
  SpaceTimeField forward(const SpaceTimeField& u, const ForcingData* data) const override;
  SpaceTimeField adjoint(const SpaceTimeField& r) const override;

  /// y with K y = M rhs, rhs given on all interior nodes.
  std::vector<double> solve(std::span<const double> rhs) const;

 private:
  SymFactor stiffness_factor_;
};

// Free-function forms of the operator actions.
SpaceTimeField parabolic_forward(const ParabolicOperator& op, const SpaceTimeField& u, const ForcingData* data);
SpaceTimeField parabolic_adjoint(const ParabolicOperator& op, const SpaceTimeField& r);
SpaceTimeField wave_forward(const WaveOperator& op, const SpaceTimeField& u, const ForcingData* data);
SpaceTimeField wave_adjoint(const WaveOperator& op, const SpaceTimeField& r);
std::vector<double> elliptic_solve(const EllipticOperator& op, std::span<const double> rhs);
SpaceTimeField affine_offset(const PdeOperator& op, const ForcingData& data);

/// Writes one "x1 x2 value" table per time level into `directory` as
/// <stem>_<level>.txt; the domain boundary is not included.
void export_snapshots(const GridSpec& grid, const SubdomainMask& mask, const SpaceTimeField& field,
                      const std::string& directory, const std::string& stem);

}  // namespace ocp
