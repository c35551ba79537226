#include "ocp/admm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "ocp/error.hpp"
#include "ocp/mesh_fem.hpp"

namespace ocp {

std::string InnerMode::label() const {
  if (kind == Kind::adaptive) return "adaptive";
  char buf[48];
  std::snprintf(buf, sizeof buf, "fixed(%.0e)", eps);
  return buf;
}

InnerMode parse_inner_mode(const std::string& text) {
  if (text == "adaptive") return InnerMode::adaptive();
  std::string body;
  if (text.rfind("fixed(", 0) == 0 && text.size() > 7 && text.back() == ')') {
    body = text.substr(6, text.size() - 7);
  } else if (text.rfind("fixed:", 0) == 0) {
    body = text.substr(6);
  } else {
    throw ConfigError("inner mode must be 'adaptive' or 'fixed(eps)', got '" + text + "'");
  }
  std::size_t used = 0;
  double eps = 0.0;
  try {
    eps = std::stod(body, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != body.size() || !(eps > 0.0)) throw ConfigError("fixed inner mode needs a positive tolerance: " + text);
  return InnerMode::fixed(eps);
}

void AdmmConfig::validate() const {
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
  if (!(sigma_factor > 0.0 && sigma_factor < 1.0)) throw ConfigError("sigma_factor must lie in (0, 1)");
  if (!(tol > 0.0)) throw ConfigError("tol must be positive");
  if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
  if (max_outer < 1) throw ConfigError("max_outer must be at least 1");
  if (max_inner < 1) throw ConfigError("max_inner must be at least 1");
  if (inner.is_fixed() && !(inner.eps > 0.0)) throw ConfigError("fixed inner tolerance must be positive");
}

double sigma_from_beta(double beta, double sigma_factor) {
  if (!(beta > 0.0)) throw ConfigError("sigma_from_beta: beta must be positive");
  if (!(sigma_factor > 0.0 && sigma_factor <= 1.0)) throw ConfigError("sigma_from_beta: factor must lie in (0, 1]");
  const double r2 = std::sqrt(2.0);
  return sigma_factor * r2 / (r2 + std::sqrt(beta));
}

SpaceTimeField residual_e(const SpaceTimeField& u, const SpaceTimeField& p, const SpaceTimeField& z,
                          const SpaceTimeField& lambda, double beta) {
  u.require_same_shape(p, "residual_e(p)");
  u.require_same_shape(z, "residual_e(z)");
  u.require_same_shape(lambda, "residual_e(lambda)");
  SpaceTimeField e = u;
  e.scale(1.0 + beta).axpy(1.0, p).axpy(-beta, z).axpy(-1.0, lambda);
  return e;
}

SubproblemResult solve_u_subproblem_cg(AdmmState& state, const ControlProblem& problem, const AdmmConfig& cfg) {
  const PdeOperator& op = *problem.op;
  const FieldGeometry geom = op.control_geometry();
  const double beta = cfg.beta;
  const double gamma = cfg.gamma();

  SpaceTimeField g = residual_e(state.u, state.p, state.z, state.lambda, beta);
  SubproblemResult res;
  double gg = geom.inner(g, g);
  res.e_initial = std::sqrt(std::max(gg, 0.0));
  res.e_final = res.e_initial;
  if (res.e_initial == 0.0) return res;

  const double threshold =
      cfg.inner.is_fixed() ? cfg.inner.eps : sigma_from_beta(beta, cfg.sigma_factor) * res.e_initial;
  SpaceTimeField w = g;
  int m = 0;
  while (std::sqrt(gg) > threshold) {
    if (m >= cfg.max_inner) {
      throw StagnationError("inner CG stagnation after " + std::to_string(m) + " iterations",
                            std::sqrt(gg) / res.e_initial);
    }
    SpaceTimeField ybar = op.apply_linear(w);
    SpaceTimeField scaled = ybar;
    scaled.scale(gamma);
    SpaceTimeField pbar = op.adjoint(scaled);
    SpaceTimeField gbar = w;
    gbar.scale(1.0 + beta).axpy(1.0, pbar);
    const double curvature = geom.inner(gbar, w);
    if (!(curvature > 0.0)) {
      throw NotSpdError("inner CG met nonpositive curvature " + std::to_string(curvature));
    }
    const double rho = geom.inner(g, w) / curvature;
    state.u.axpy(-rho, w);
    state.p.axpy(-rho, pbar);
    state.y.axpy(-rho, ybar);
    g.axpy(-rho, gbar);
    const double gg_new = geom.inner(g, g);
    const double r = gg_new / gg;
    w.scale(r).axpy(1.0, g);
    gg = gg_new;
    ++m;
  }
  res.iterations = m;
  res.e_final = std::sqrt(std::max(gg, 0.0));
  return res;
}

SpaceTimeField update_z(const SpaceTimeField& u, const SpaceTimeField& lambda, double beta, double a, double b) {
  u.require_same_shape(lambda, "update_z");
  if (!(beta > 0.0)) throw ConfigError("update_z: beta must be positive");
  SpaceTimeField z = u;
  z.axpy(-1.0 / beta, lambda);
  nodal_project_inplace(z.values(), a, b);
  return z;
}

SpaceTimeField update_lambda(const SpaceTimeField& lambda, const SpaceTimeField& u, const SpaceTimeField& z,
                             double beta) {
  lambda.require_same_shape(u, "update_lambda(u)");
  lambda.require_same_shape(z, "update_lambda(z)");
  SpaceTimeField out = lambda;
  out.axpy(-beta, u).axpy(beta, z);
  return out;
}

ResidualPair primal_dual_residuals(const FieldGeometry& geom, const SpaceTimeField& u, const SpaceTimeField& z,
                                   const SpaceTimeField& u_prev, const SpaceTimeField& z_prev) {
  const double zp = geom.norm(z_prev);
  const double up = geom.norm(u_prev);
  ResidualPair r;
  r.primal = geom.norm(z - z_prev) / std::max(zp, kResidualDenominatorFloor);
  r.dual = geom.norm(u - z) / std::max({up, zp, kResidualDenominatorFloor});
  return r;
}

double objective(const ControlProblem& problem, const SpaceTimeField& y, const SpaceTimeField& u, double alpha) {
  const PdeOperator& op = *problem.op;
  const double track = op.state_geometry().norm(y - problem.target);
  const double reg = op.control_geometry().norm(u);
  return 0.5 * track * track + 0.5 * alpha * reg * reg;
}

namespace {

SpaceTimeField initial_or_zero(const std::optional<SpaceTimeField>& v, const PdeOperator& op, const char* what) {
  SpaceTimeField zero = op.zero_control();
  if (!v) return zero;
  zero.require_same_shape(*v, what);
  return *v;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

AdmmResult admm_solve(const ControlProblem& problem, const AdmmConfig& cfg, const InitialIterates& init,
                      const IterationCallback& on_iteration) {
  cfg.validate();
  if (problem.op == nullptr) throw ConfigError("admm_solve: problem has no operator");
  if (!(problem.lower <= problem.upper)) throw ConfigError("admm_solve: lower bound exceeds upper bound");
  const PdeOperator& op = *problem.op;
  const SpaceTimeField zero_state = op.zero_state();
  zero_state.require_same_shape(problem.target, "admm_solve(target)");
  zero_state.require_same_shape(problem.state_offset, "admm_solve(offset)");

  const FieldGeometry geom = op.control_geometry();
  const double beta = cfg.beta;

  AdmmResult result;
  result.sigma = sigma_from_beta(beta, cfg.sigma_factor);
  AdmmState& s = result.state;
  s.u = initial_or_zero(init.u, op, "initial u");
  s.z = initial_or_zero(init.z, op, "initial z");
  s.lambda = initial_or_zero(init.lambda, op, "initial lambda");
  s.y = op.apply_linear(s.u);
  s.y += problem.state_offset;
  SpaceTimeField misfit = s.y - problem.target;
  misfit.scale(cfg.gamma());
  s.p = op.adjoint(misfit);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int k = 0; k < cfg.max_outer; ++k) {
    const SpaceTimeField u_prev = s.u;
    const SpaceTimeField z_prev = s.z;
    const SpaceTimeField lambda_prev = s.lambda;

    IterationRecord rec;
    rec.k = k + 1;
    const SubproblemResult sub = solve_u_subproblem_cg(s, problem, cfg);
    rec.inner_iters = sub.iterations;
    rec.e_prev = sub.e_initial;
    rec.e_new = sub.e_final;

    s.z = update_z(s.u, s.lambda, beta, problem.lower, problem.upper);
    s.lambda = update_lambda(s.lambda, s.u, s.z, beta);
    s.k = k + 1;

    const auto zv = s.z.values();
    if (!zv.empty()) {
      const auto [lo, hi] = std::minmax_element(zv.begin(), zv.end());
      rec.z_min = *lo;
      rec.z_max = *hi;
    }
    SpaceTimeField defect = s.lambda - lambda_prev;
    defect.axpy(beta, s.u).axpy(-beta, s.z);
    rec.multiplier_defect = max_abs(defect.values());
    rec.infeasibility = geom.norm(s.u - s.z);
    const double dz = geom.norm(s.z - z_prev);
    const double dl = geom.norm(s.lambda - lambda_prev);
    rec.h_step_sq = beta * dz * dz + dl * dl / beta;
    rec.obj = objective(problem, s.y, s.u, cfg.alpha);

    bool done = false;
    if (k == 0) {
      rec.pi_s = nan;
      rec.d_s = nan;
    } else {
      const ResidualPair r = primal_dual_residuals(geom, s.u, s.z, u_prev, z_prev);
      rec.pi_s = r.primal;
      rec.d_s = r.dual;
      done = std::max(r.primal, r.dual) <= cfg.tol;
    }
    result.history.push_back(rec);
    if (on_iteration) on_iteration(rec, s);
    if (done) {
      result.converged = true;
      break;
    }
  }
  result.outer_iters = static_cast<int>(result.history.size());
  return result;
}

}  // namespace ocp
