#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "ocp/admm.hpp"
#include "ocp/mesh_fem.hpp"
#include "ocp/pde.hpp"

namespace ocp {

/// f(x1, x2, t); stationary problems ignore t.
using ScalarFn = std::function<double(double, double, double)>;

/// Compiles a closed-form expression over x1, x2, t with + - * / ^, unary minus,
/// parentheses, sin cos exp sqrt abs min max and the constant pi.
ScalarFn parse_expression(const std::string& text);

struct ProblemSpec {
  std::string name;
  PdeKind kind = PdeKind::parabolic;
  ElementFamily element = ElementFamily::p1;
  double final_time = 1.0;
  double alpha = 1.0;
  double lower = 0.0;
  double upper = 1.0;
  double nu = 1.0;
  double a0 = 0.0;
  Rect omega;

  /// Source entering through the mass matrix on the whole domain.
  ScalarFn source;
  /// Source entering through the control coupling on the control rectangle.
  ScalarFn control_source;
  ScalarFn target;
  ScalarFn initial;
  ScalarFn initial_velocity;
  /// Stationary problems: the response to this function is added to the target.
  ScalarFn target_lift;

  ScalarFn exact_control;
  ScalarFn exact_state;
  ScalarFn exact_adjoint;

  double default_beta = 3.0;
  double default_tol = 1e-4;
  double initial_u = 0.0;
  double initial_z = 0.0;
  double initial_lambda = 0.0;

  bool has_exact_control() const noexcept { return static_cast<bool>(exact_control); }
  bool has_exact_state() const noexcept { return static_cast<bool>(exact_state); }
  void validate() const;
};

inline constexpr int kExampleCount = 4;

ProblemSpec make_example(int id);
/// "example1".."example4" or "1".."4".
ProblemSpec make_example(const std::string& name);

/// Custom problems from flat keys (without the "custom." prefix): kind, element, T,
/// alpha, lower, upper, nu, a0, omega ("x1lo,x1hi,x2lo,x2hi"), beta, tol, and
/// expression keys source, control_source, target, initial, initial_velocity,
/// target_lift, exact_control, exact_state.
ProblemSpec make_custom_problem(const std::map<std::string, std::string>& keys);

/// Time step tau = h for time-dependent problems unless overridden.
std::unique_ptr<PdeOperator> make_operator(const ProblemSpec& spec, int mesh_exponent,
                                           std::optional<double> tau_override = std::nullopt);

struct DataBundle {
  ForcingData forcing;
  SpaceTimeField target;
};

/// Nodal interpolants of the data on the operator's mesh and time levels.
DataBundle eval_fields(const ProblemSpec& spec, const PdeOperator& op);

/// Interpolant of a function on the control (or domain) node set at t_1..t_N.
SpaceTimeField interpolate(const ScalarFn& fn, const PdeOperator& op, NodeSet set);

/// Problem data plus the offset S(0), ready for admm_solve.
ControlProblem make_control_problem(const ProblemSpec& spec, const PdeOperator& op, const DataBundle& data);

InitialIterates make_initial_iterates(const ProblemSpec& spec, const PdeOperator& op);

}  // namespace ocp
