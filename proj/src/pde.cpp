#include "ocp/pde.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "ocp/error.hpp"

namespace ocp {

const char* to_string(PdeKind kind) noexcept {
  switch (kind) {
    case PdeKind::parabolic: return "parabolic";
    case PdeKind::wave: return "wave";
    case PdeKind::elliptic: return "elliptic";
  }
  return "unknown";
}

TimeGrid make_time_grid(double final_time, double tau) {
  if (!(final_time > 0.0) || !(tau > 0.0)) throw ConfigError("time grid needs T > 0 and tau > 0");
  const double ratio = final_time / tau;
  const long steps = std::lround(ratio);
  if (steps < 1 || std::abs(static_cast<double>(steps) * tau - final_time) > 1e-12 * final_time) {
    throw ConfigError("final time " + std::to_string(final_time) + " is not an integer multiple of tau " +
                      std::to_string(tau));
  }
  return {final_time, tau, static_cast<int>(steps)};
}

// ---------------------------------------------------------------------------

PdeOperator::PdeOperator(GridSpec grid, FemMatrices fem, SubdomainMask mask, TimeGrid time)
    : grid_(grid), fem_(std::move(fem)), mask_(std::move(mask)), time_(time) {
  if (fem_.mass.rows() != grid_.node_count() || mask_.domain_nodes() != grid_.node_count()) {
    throw DimensionError("operator pieces disagree on the node count");
  }
  control_mass_ = assemble_subdomain_mass(grid_, mask_, fem_.family);
}

SpaceTimeField PdeOperator::offset(const ForcingData& data) const {
  return forward(zero_control(), &data);
}

SpaceTimeField PdeOperator::zero_control() const {
  return SpaceTimeField(NodeSet::control, levels_, mask_.count());
}

SpaceTimeField PdeOperator::zero_state() const {
  return SpaceTimeField(NodeSet::domain, levels_, grid_.node_count());
}

void PdeOperator::require_control(const SpaceTimeField& u, const char* what) const {
  if (u.node_set() != NodeSet::control || u.levels() != levels_ || u.nodes() != mask_.count()) {
    throw DimensionError(std::string(what) + ": expected a control field with " + std::to_string(levels_) +
                         " levels of " + std::to_string(mask_.count()) + " nodes");
  }
}

void PdeOperator::require_state(const SpaceTimeField& y, const char* what) const {
  if (y.node_set() != NodeSet::domain || y.levels() != levels_ || y.nodes() != grid_.node_count()) {
    throw DimensionError(std::string(what) + ": expected a state field with " + std::to_string(levels_) +
                         " levels of " + std::to_string(grid_.node_count()) + " nodes");
  }
}

SymFactor PdeOperator::factorize(const SparseMatrix& a) {
  ++factorizations_;
  return factorize_spd(a);
}

void PdeOperator::add_control_source(double a, std::span<const double> v, std::span<double> out) const {
  std::vector<double> mv = control_mass_.multiply(v);
  mask_.prolong_add(a, mv, out);
}

void PdeOperator::add_data_source(double a, const ForcingData* data, int n, std::span<double> out) const {
  if (data == nullptr) return;
  if (!data->source.empty()) {
    if (n >= static_cast<int>(data->source.size())) throw DimensionError("source has too few time levels");
    const auto& level = data->source[static_cast<std::size_t>(n)];
    if (static_cast<int>(level.size()) != grid_.node_count()) throw DimensionError("source level has wrong size");
    fem_.mass.multiply_add(a, level, out);
  }
  if (!data->control_source.empty()) {
    if (n >= static_cast<int>(data->control_source.size())) {
      throw DimensionError("control source has too few time levels");
    }
    const auto& level = data->control_source[static_cast<std::size_t>(n)];
    if (static_cast<int>(level.size()) != mask_.count()) throw DimensionError("control source level has wrong size");
    add_control_source(a, level, out);
  }
}

namespace {

const std::vector<double>* nodal_data(const std::vector<double>& v, int nodes, const char* what) {
  if (v.empty()) return nullptr;
  if (static_cast<int>(v.size()) != nodes) throw DimensionError(std::string(what) + " has wrong size");
  return &v;
}

void copy_into(std::span<double> dst, std::span<const double> src) {
  std::copy(src.begin(), src.end(), dst.begin());
}

}  // namespace

// ---------------------------------------------------------------------------

ParabolicOperator::ParabolicOperator(GridSpec grid, FemMatrices fem, SubdomainMask mask, TimeGrid time, double nu,
                                     double a0)
    : PdeOperator(grid, std::move(fem), std::move(mask), time), nu_(nu), a0_(a0) {
  if (!(nu > 0.0)) throw ConfigError("diffusion coefficient must be positive");
  if (!(a0 >= 0.0)) throw ConfigError("reaction coefficient must be nonnegative");
  set_levels(time_.steps, time_.tau);
  step_matrix_ = SparseMatrix::combine(1.0 + time_.tau * a0_, fem_.mass, time_.tau * nu_, fem_.stiffness);
  step_factor_ = factorize(step_matrix_);
}

SpaceTimeField ParabolicOperator::forward(const SpaceTimeField& u, const ForcingData* data) const {
  require_control(u, "parabolic forward");
  const int nodes = grid_.node_count();
  const double tau = time_.tau;
  SpaceTimeField y = zero_state();
  std::vector<double> prev(static_cast<std::size_t>(nodes), 0.0);
  if (data != nullptr) {
    if (const auto* phi = nodal_data(data->initial, nodes, "initial value")) prev = *phi;
  }
  std::vector<double> rhs(static_cast<std::size_t>(nodes));
  for (int n = 1; n <= time_.steps; ++n) {
    fem_.mass.multiply(prev, rhs);
    add_data_source(tau, data, n, rhs);
    add_control_source(tau, u.level(n - 1), rhs);
    auto out = y.level(n - 1);
    step_factor_.solve(rhs, out);
    copy_into(prev, out);
  }
  return y;
}

SpaceTimeField ParabolicOperator::adjoint(const SpaceTimeField& r) const {
  require_state(r, "parabolic adjoint");
  const int nodes = grid_.node_count();
  const double tau = time_.tau;
  SpaceTimeField p = zero_control();
  std::vector<double> next(static_cast<std::size_t>(nodes), 0.0);
  std::vector<double> rhs(static_cast<std::size_t>(nodes));
  for (int n = time_.steps; n >= 1; --n) {
    fem_.mass.multiply(next, rhs);
    fem_.mass.multiply_add(tau, r.level(n - 1), rhs);
    step_factor_.solve(rhs, next);
    copy_into(p.level(n - 1), mask_.restrict_to(next));
  }
  return p;
}

// ---------------------------------------------------------------------------

WaveOperator::WaveOperator(GridSpec grid, FemMatrices fem, SubdomainMask mask, TimeGrid time)
    : PdeOperator(grid, std::move(fem), std::move(mask), time) {
  if (time_.steps < 2) throw ConfigError("wave stepping needs at least two time steps");
  set_levels(time_.steps, time_.tau);
  step_matrix_ = SparseMatrix::combine(1.0, fem_.mass, 0.25 * time_.tau * time_.tau, fem_.stiffness);
  step_factor_ = factorize(step_matrix_);
  mass_factor_ = factorize(fem_.mass);
}

SpaceTimeField WaveOperator::forward(const SpaceTimeField& u, const ForcingData* data) const {
  require_control(u, "wave forward");
  const int nodes = grid_.node_count();
  const double tau = time_.tau;
  const double tau2 = tau * tau;
  const auto sz = static_cast<std::size_t>(nodes);
  SpaceTimeField y = zero_state();

  std::vector<double> y0(sz, 0.0), v0(sz, 0.0);
  if (data != nullptr) {
    if (const auto* a = nodal_data(data->initial, nodes, "initial value")) y0 = *a;
    if (const auto* b = nodal_data(data->initial_velocity, nodes, "initial velocity")) v0 = *b;
  }

  // Taylor start
  std::vector<double> rhs(sz, 0.0);
  fem_.stiffness.multiply(y0, rhs);
  for (auto& v : rhs) v = -v;
  add_data_source(1.0, data, 0, rhs);
  add_control_source(1.0, u.level(0), rhs);
  std::vector<double> accel = mass_factor_.solve(rhs);
  auto first = y.level(0);
  for (std::size_t j = 0; j < sz; ++j) first[j] = y0[j] + tau * v0[j] + 0.5 * tau2 * accel[j];

  // B y^{n+1} = (2M - tau^2/2 K) y^n - B y^{n-1} + tau^2 (M f^n + E M_omega u^n)
  std::vector<double> prev = y0;
  for (int n = 1; n < time_.steps; ++n) {
    auto curr = y.level(n - 1);
    fem_.mass.multiply(curr, rhs);
    for (auto& v : rhs) v *= 2.0;
    fem_.stiffness.multiply_add(-0.5 * tau2, curr, rhs);
    step_matrix_.multiply_add(-1.0, prev, rhs);
    add_data_source(tau2, data, n, rhs);
    add_control_source(tau2, u.level(n - 1), rhs);
    copy_into(prev, curr);
    step_factor_.solve(rhs, y.level(n));
  }
  return y;
}

SpaceTimeField WaveOperator::adjoint(const SpaceTimeField& r) const {
  require_state(r, "wave adjoint");
  const int nodes = grid_.node_count();
  const int steps = time_.steps;
  const double tau = time_.tau;
  const double tau2 = tau * tau;
  const auto sz = static_cast<std::size_t>(nodes);

  // Transposed block recurrence, j = N..1:
  //   D_j q^j = tau M r^j + (2M - tau^2/2 K) q^{j+1} - B q^{j+2},  D_1 = M, D_j = B otherwise.
  std::vector<std::vector<double>> q(static_cast<std::size_t>(steps) + 3, std::vector<double>(sz, 0.0));
  std::vector<double> rhs(sz);
  for (int j = steps; j >= 1; --j) {
    const auto& q1 = q[static_cast<std::size_t>(j) + 1];
    const auto& q2 = q[static_cast<std::size_t>(j) + 2];
    fem_.mass.multiply(r.level(j - 1), rhs);
    for (auto& v : rhs) v *= tau;
    fem_.mass.multiply_add(2.0, q1, rhs);
    fem_.stiffness.multiply_add(-0.5 * tau2, q1, rhs);
    step_matrix_.multiply_add(-1.0, q2, rhs);
    auto& out = q[static_cast<std::size_t>(j)];
    if (j == 1) {
      mass_factor_.solve(rhs, out);
    } else {
      step_factor_.solve(rhs, out);
    }
  }

  // control n couples to rows n+1 (weight tau^2) and, for n = 1, to row 1 (weight tau^2/2)
  SpaceTimeField p = zero_control();
  std::vector<double> acc(sz);
  for (int n = 1; n <= steps; ++n) {
    const auto& qn1 = q[static_cast<std::size_t>(n) + 1];
    for (std::size_t j = 0; j < sz; ++j) acc[j] = tau * qn1[j];
    if (n == 1) {
      for (std::size_t j = 0; j < sz; ++j) acc[j] += 0.5 * tau * q[1][j];
    }
    copy_into(p.level(n - 1), mask_.restrict_to(acc));
  }
  return p;
}

double WaveOperator::energy(std::span<const double> y_next, std::span<const double> y_curr) const {
  if (static_cast<int>(y_next.size()) != grid_.node_count() || y_next.size() != y_curr.size()) {
    throw DimensionError("energy: level size mismatch");
  }
  const double tau = time_.tau;
  std::vector<double> vel(y_next.size()), avg(y_next.size());
  for (std::size_t j = 0; j < y_next.size(); ++j) {
    vel[j] = (y_next[j] - y_curr[j]) / tau;
    avg[j] = 0.5 * (y_next[j] + y_curr[j]);
  }
  return 0.5 * dot(vel, fem_.mass.multiply(vel)) + 0.5 * dot(avg, fem_.stiffness.multiply(avg));
}

// ---------------------------------------------------------------------------

EllipticOperator::EllipticOperator(GridSpec grid, FemMatrices fem, SubdomainMask mask)
    : PdeOperator(grid, std::move(fem), std::move(mask), TimeGrid{1.0, 1.0, 1}) {
  set_levels(1, 1.0);
  stiffness_factor_ = factorize(fem_.stiffness);
}

SpaceTimeField EllipticOperator::forward(const SpaceTimeField& u, const ForcingData* data) const {
  require_control(u, "elliptic forward");
  std::vector<double> rhs(static_cast<std::size_t>(grid_.node_count()), 0.0);
  add_data_source(1.0, data, 0, rhs);
  add_control_source(1.0, u.level(0), rhs);
  SpaceTimeField y = zero_state();
  stiffness_factor_.solve(rhs, y.level(0));
  return y;
}

SpaceTimeField EllipticOperator::adjoint(const SpaceTimeField& r) const {
  require_state(r, "elliptic adjoint");
  std::vector<double> q = solve(r.level(0));
  SpaceTimeField p = zero_control();
  copy_into(p.level(0), mask_.restrict_to(q));
  return p;
}

std::vector<double> EllipticOperator::solve(std::span<const double> rhs) const {
  if (static_cast<int>(rhs.size()) != grid_.node_count()) throw DimensionError("elliptic solve: rhs size");
  return stiffness_factor_.solve(fem_.mass.multiply(rhs));
}

// ---------------------------------------------------------------------------

SpaceTimeField parabolic_forward(const ParabolicOperator& op, const SpaceTimeField& u, const ForcingData* data) {
  return op.forward(u, data);
}
SpaceTimeField parabolic_adjoint(const ParabolicOperator& op, const SpaceTimeField& r) { return op.adjoint(r); }
SpaceTimeField wave_forward(const WaveOperator& op, const SpaceTimeField& u, const ForcingData* data) {
  return op.forward(u, data);
}
SpaceTimeField wave_adjoint(const WaveOperator& op, const SpaceTimeField& r) { return op.adjoint(r); }
std::vector<double> elliptic_solve(const EllipticOperator& op, std::span<const double> rhs) { return op.solve(rhs); }
SpaceTimeField affine_offset(const PdeOperator& op, const ForcingData& data) { return op.offset(data); }

void export_snapshots(const GridSpec& grid, const SubdomainMask& mask, const SpaceTimeField& field,
                      const std::string& directory, const std::string& stem) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw IoError("cannot create " + directory + ": " + ec.message());
  const bool on_control = field.node_set() == NodeSet::control;
  const auto idx = mask.indices();
  if (on_control ? field.nodes() != mask.count() : field.nodes() != grid.node_count()) {
    throw DimensionError("snapshot field does not match the grid");
  }
  for (int n = 0; n < field.levels(); ++n) {
    const auto path = std::filesystem::path(directory) / (stem + "_" + std::to_string(n + 1) + ".txt");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "x1 x2 value\n";
    const auto vals = field.level(n);
    char line[96];
    for (int j = 0; j < field.nodes(); ++j) {
      const int node = on_control ? idx[static_cast<std::size_t>(j)] : j;
      std::snprintf(line, sizeof line, "%.10g %.10g %.12g\n", grid.x1(node), grid.x2(node), vals[j]);
      out << line;
    }
  }
}

}  // namespace ocp
