#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ocp/field.hpp"
#include "ocp/pde.hpp"

namespace ocp {

struct InnerMode {
  enum class Kind { adaptive, fixed };
  Kind kind = Kind::adaptive;
  /// Absolute residual target of fixed mode.
  double eps = 0.0;

  static InnerMode adaptive() { return {Kind::adaptive, 0.0}; }
  static InnerMode fixed(double eps) { return {Kind::fixed, eps}; }
  bool is_fixed() const noexcept { return kind == Kind::fixed; }
  /// "adaptive" or "fixed(1e-04)".
  std::string label() const;
};

/// Parses "adaptive", "fixed(1e-4)" or "fixed:1e-4".
InnerMode parse_inner_mode(const std::string& text);

struct AdmmConfig {
  double beta = 3.0;
  double sigma_factor = 0.99;
  double tol = 1e-4;
  int max_outer = 500;
  int max_inner = 500;
  InnerMode inner = InnerMode::adaptive();
  double alpha = 1e-5;

  double gamma() const noexcept { return 1.0 / alpha; }
  /// Throws ConfigError on the first violated invariant.
  void validate() const;
};

/// sigma_factor * sqrt(2) / (sqrt(2) + sqrt(beta))
double sigma_from_beta(double beta, double sigma_factor);

/// The discrete control problem handed to the solver: an operator, its affine
/// offset S(0), the target state and the admissible box.
struct ControlProblem {
  const PdeOperator* op = nullptr;
  SpaceTimeField target;
  SpaceTimeField state_offset;
  double lower = 0.0;
  double upper = 0.0;
};

/// Control-space starting iterates; empty options mean zero fields.
struct InitialIterates {
  std::optional<SpaceTimeField> u;
  std::optional<SpaceTimeField> z;
  std::optional<SpaceTimeField> lambda;
};

struct AdmmState {
  SpaceTimeField u;
  SpaceTimeField z;
  SpaceTimeField lambda;
  /// Scaled adjoint gamma * S_bar^*(S(u) - y_d), restricted to the control set; consistent with u.
  SpaceTimeField p;
  /// S(u), consistent with u.
  SpaceTimeField y;
  int k = 0;
};

/// e = (1 + beta) u + p - beta z - lambda
SpaceTimeField residual_e(const SpaceTimeField& u, const SpaceTimeField& p, const SpaceTimeField& z,
                          const SpaceTimeField& lambda, double beta);

struct SubproblemResult {
  int iterations = 0;
  double e_initial = 0.0;  ///< ||e_k(u^k)||
  double e_final = 0.0;    ///< ||e_k(u^{k+1})||
};

/// Inner CG on (1 + beta + gamma S_bar^* S_bar) u = beta z + lambda - gamma S_bar^*(S(0) - y_d), warm
/// started from state.u / state.p. Updates state.u, state.p and state.y in place.
SubproblemResult solve_u_subproblem_cg(AdmmState& state, const ControlProblem& problem, const AdmmConfig& cfg);

/// z = clamp(u - lambda / beta, a, b), nodewise.
SpaceTimeField update_z(const SpaceTimeField& u, const SpaceTimeField& lambda, double beta, double a, double b);
/// lambda - beta (u - z)
SpaceTimeField update_lambda(const SpaceTimeField& lambda, const SpaceTimeField& u, const SpaceTimeField& z,
                             double beta);

inline constexpr double kResidualDenominatorFloor = 1e-12;

struct ResidualPair {
  double primal = 0.0;
  double dual = 0.0;
};

/// pi_s = ||z - z_prev|| / ||z_prev||,  d_s = ||u - z|| / max(||u_prev||, ||z_prev||)
ResidualPair primal_dual_residuals(const FieldGeometry& geom, const SpaceTimeField& u, const SpaceTimeField& z,
                                   const SpaceTimeField& u_prev, const SpaceTimeField& z_prev);

struct IterationRecord {
  int k = 0;  ///< 1-based outer iteration
  int inner_iters = 0;
  double e_prev = 0.0;
  double e_new = 0.0;
  double pi_s = 0.0;  ///< NaN on the first iteration
  double d_s = 0.0;   ///< NaN on the first iteration
  double obj = 0.0;
  /// ||v^k - v^{k+1}||_H^2 = beta ||dz||^2 + ||dlambda||^2 / beta
  double h_step_sq = 0.0;
  double z_min = 0.0;
  double z_max = 0.0;
  /// max |lambda^{k+1} - lambda^k + beta (u^{k+1} - z^{k+1})|
  double multiplier_defect = 0.0;
  /// ||u^{k+1} - z^{k+1}||
  double infeasibility = 0.0;
};

struct AdmmResult {
  AdmmState state;
  std::vector<IterationRecord> history;
  bool converged = false;
  int outer_iters = 0;
  double sigma = 0.0;
};

using IterationCallback = std::function<void(const IterationRecord&, const AdmmState&)>;

/// Original objective 0.5 ||y - y_d||^2 + alpha/2 ||u||^2.
double objective(const ControlProblem& problem, const SpaceTimeField& y, const SpaceTimeField& u, double alpha);

AdmmResult admm_solve(const ControlProblem& problem, const AdmmConfig& cfg, const InitialIterates& init = {},
                      const IterationCallback& on_iteration = {});

}  // namespace ocp
