#include "ocp/driver.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "ocp/error.hpp"

namespace ocp {

// ---------------------------------------------------------------------------
// Configuration

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (v.empty() || used != v.size() || !std::isfinite(x)) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return x;
}

int to_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long x = 0;
  try {
    x = std::stol(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (v.empty() || used != v.size()) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return static_cast<int>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& raw) {
  std::string value = trim(raw);
  if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
  if (key == "problem") {
    problem = value;
  } else if (key == "mesh.i") {
    mesh_exponent = to_int(key, value);
  } else if (key == "mesh.tau") {
    tau = to_double(key, value);
  } else if (key == "admm.beta") {
    beta = to_double(key, value);
  } else if (key == "admm.alpha") {
    alpha = to_double(key, value);
  } else if (key == "admm.tol") {
    tol = to_double(key, value);
  } else if (key == "admm.sigma_factor") {
    sigma_factor = to_double(key, value);
  } else if (key == "admm.inner_mode") {
    inner_mode = parse_inner_mode(value);
  } else if (key == "admm.max_outer") {
    max_outer = to_int(key, value);
  } else if (key == "admm.max_inner") {
    max_inner = to_int(key, value);
  } else if (key == "output.dir") {
    output_dir = value;
  } else if (key == "output.snapshots") {
    snapshots = to_bool(key, value);
  } else if (key == "output.iteration_log") {
    iteration_log = to_bool(key, value);
  } else if (key.rfind("custom.", 0) == 0 && key.size() > 7) {
    custom[key.substr(7)] = value;
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

void RunConfig::validate() const {
  if (mesh_exponent < kMinGridExponent || mesh_exponent > kMaxGridExponent) {
    throw ConfigError("mesh.i must lie in [" + std::to_string(kMinGridExponent) + ", " +
                      std::to_string(kMaxGridExponent) + "], got " + std::to_string(mesh_exponent));
  }
  if (tau && !(*tau > 0.0)) throw ConfigError("mesh.tau must be positive");
  if (problem == "custom") {
    if (custom.empty()) throw ConfigError("problem = custom needs custom.* keys");
  } else if (!custom.empty()) {
    throw ConfigError("custom.* keys are only valid with problem = custom");
  }
  const ProblemSpec spec = resolve_problem(*this);
  resolve_admm(spec, *this).validate();
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  std::map<std::string, int> seen;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (seen.count(key)) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    seen[key] = lineno;
    try {
      cfg.set(key, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c) {
  std::string out;
  auto put = [&out](const std::string& k, const std::string& v) { out += k + " = " + v + "\n"; };
  put("problem", c.problem);
  put("mesh.i", std::to_string(c.mesh_exponent));
  if (c.tau) put("mesh.tau", num(*c.tau));
  if (c.beta) put("admm.beta", num(*c.beta));
  if (c.alpha) put("admm.alpha", num(*c.alpha));
  if (c.tol) put("admm.tol", num(*c.tol));
  if (c.sigma_factor) put("admm.sigma_factor", num(*c.sigma_factor));
  if (c.inner_mode) put("admm.inner_mode", c.inner_mode->is_fixed() ? "fixed(" + num(c.inner_mode->eps) + ")" : "adaptive");
  if (c.max_outer) put("admm.max_outer", std::to_string(*c.max_outer));
  if (c.max_inner) put("admm.max_inner", std::to_string(*c.max_inner));
  put("output.dir", c.output_dir);
  put("output.snapshots", c.snapshots ? "true" : "false");
  put("output.iteration_log", c.iteration_log ? "true" : "false");
  for (const auto& [k, v] : c.custom) put("custom." + k, v);
  return out;
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  auto mode_eq = [](const std::optional<InnerMode>& x, const std::optional<InnerMode>& y) {
    if (x.has_value() != y.has_value()) return false;
    return !x || (x->kind == y->kind && x->eps == y->eps);
  };
  return a.problem == b.problem && a.mesh_exponent == b.mesh_exponent && a.tau == b.tau && a.beta == b.beta &&
         a.alpha == b.alpha && a.tol == b.tol && a.sigma_factor == b.sigma_factor &&
         mode_eq(a.inner_mode, b.inner_mode) && a.max_outer == b.max_outer && a.max_inner == b.max_inner &&
         a.output_dir == b.output_dir && a.snapshots == b.snapshots && a.iteration_log == b.iteration_log &&
         a.custom == b.custom;
}

ProblemSpec resolve_problem(const RunConfig& cfg) {
  ProblemSpec spec = cfg.problem == "custom" ? make_custom_problem(cfg.custom) : make_example(cfg.problem);
  if (cfg.alpha) spec.alpha = *cfg.alpha;
  spec.validate();
  return spec;
}

AdmmConfig resolve_admm(const ProblemSpec& spec, const RunConfig& cfg) {
  AdmmConfig a;
  a.alpha = spec.alpha;
  a.beta = cfg.beta.value_or(spec.default_beta);
  a.tol = cfg.tol.value_or(spec.default_tol);
  if (cfg.sigma_factor) a.sigma_factor = *cfg.sigma_factor;
  if (cfg.inner_mode) a.inner = *cfg.inner_mode;
  if (cfg.max_outer) a.max_outer = *cfg.max_outer;
  if (cfg.max_inner) a.max_inner = *cfg.max_inner;
  return a;
}

// ---------------------------------------------------------------------------
// Solving

SolveOutput solve(const ProblemSpec& spec, int mesh_exponent, const AdmmConfig& admm, std::optional<double> tau,
                  const IterationCallback& on_iteration) {
  admm.validate();
  const auto start = std::chrono::steady_clock::now();
  SolveOutput out;
  out.spec = spec;
  out.op = make_operator(spec, mesh_exponent, tau);
  out.data = eval_fields(spec, *out.op);
  out.problem = make_control_problem(spec, *out.op, out.data);
  out.result = admm_solve(out.problem, admm, make_initial_iterates(spec, *out.op), on_iteration);

  const AdmmState& s = out.result.state;
  out.state = out.op->forward(s.u, &out.data.forcing);

  RunReport& r = out.report;
  r.problem = spec.name;
  r.mesh = mesh_exponent;
  r.algorithm = admm.inner.label();
  r.beta = admm.beta;
  r.outer_iters = out.result.outer_iters;
  r.converged = out.result.converged;
  r.history = out.result.history;
  long total = 0;
  for (const auto& h : r.history) {
    total += h.inner_iters;
    r.max_cg = std::max(r.max_cg, h.inner_iters);
  }
  r.mean_cg = r.history.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(r.history.size());
  const TrackingMetrics tm = reldis_obj(out.state, out.problem.target, s.u, admm.alpha, out.op->state_geometry(),
                                        out.op->control_geometry());
  r.reldis = tm.reldis;
  r.obj = tm.obj;
  const ErrorNorms en = l2_errors(s.u, out.state, spec, *out.op);
  r.err_u = en.err_u;
  r.err_y = en.err_y;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

RunReport run(const RunConfig& cfg) {
  cfg.validate();
  const ProblemSpec spec = resolve_problem(cfg);
  const AdmmConfig admm = resolve_admm(spec, cfg);
  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (ec) throw IoError("cannot create " + cfg.output_dir + ": " + ec.message());

  SolveOutput out = solve(spec, cfg.mesh_exponent, admm, cfg.tau);
  const std::filesystem::path dir(cfg.output_dir);
  emit_csv({out.report}, (dir / "report.csv").string());
  if (cfg.iteration_log) write_text((dir / "iterations.csv").string(), iteration_log_csv(out.report.history));
  if (cfg.snapshots) {
    const std::string snap = (dir / "snapshots").string();
    export_snapshots(out.op->grid(), out.op->mask(), out.result.state.u, snap, "u");
    export_snapshots(out.op->grid(), out.op->mask(), out.state, snap, "y");
  }
  return out.report;
}

// ---------------------------------------------------------------------------
// Tables

std::vector<TableRow> table_rows(int table, int max_i) {
  if (max_i < kMinGridExponent || max_i > kMaxGridExponent) throw ConfigError("max_i out of range");
  constexpr int kFirstMesh = 5;
  const int lo = std::min(kFirstMesh, max_i);
  std::vector<TableRow> rows;
  auto mode_grid = [&](int example, double beta) {
    for (int i = lo; i <= max_i; ++i) {
      for (double eps : {1e-2, 1e-4, 1e-6, 1e-8, 1e-10}) rows.push_back({example, i, beta, InnerMode::fixed(eps)});
      rows.push_back({example, i, beta, InnerMode::adaptive()});
    }
  };
  switch (table) {
    case 1:
      for (double b : {0.1, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0}) rows.push_back({1, std::min(6, max_i), b, InnerMode::adaptive()});
      break;
    case 2: mode_grid(1, 3.0); break;
    case 3:
      for (int i = lo; i <= max_i; ++i) rows.push_back({1, i, 3.0, InnerMode::adaptive()});
      break;
    case 4: mode_grid(2, 3.0); break;
    case 5: mode_grid(3, 5.0); break;
    case 6:
      for (int i = lo; i <= max_i; ++i) rows.push_back({4, i, 2.0, InnerMode::adaptive()});
      break;
    default: throw ConfigError("table must be 1..6, got " + std::to_string(table));
  }
  return rows;
}

std::vector<RunReport> reproduce(int table, int max_i, int workers, const std::string& out_dir) {
  const std::vector<TableRow> rows = table_rows(table, max_i);
  std::vector<RunReport> reports(rows.size());
  std::vector<std::string> failures(rows.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t j = next++; j < rows.size(); j = next++) {
      const TableRow& row = rows[j];
      ProblemSpec spec = make_example(row.example);
      RunConfig rc;
      rc.problem = spec.name;
      rc.mesh_exponent = row.mesh;
      rc.beta = row.beta;
      rc.inner_mode = row.mode;
      try {
        reports[j] = solve(spec, row.mesh, resolve_admm(spec, rc)).report;
      } catch (const StagnationError& e) {
        // a row whose inner solve cannot reach its target counts as not converged
        RunReport r;
        r.problem = spec.name;
        r.mesh = row.mesh;
        r.algorithm = row.mode.label();
        r.beta = row.beta;
        r.reldis = std::nan("");
        r.obj = std::nan("");
        reports[j] = r;
        failures[j] = e.what();
      }
    }
  };
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(rows.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
  emit_csv(reports, (std::filesystem::path(out_dir) / ("table" + std::to_string(table) + ".csv")).string());
  return reports;
}

// ---------------------------------------------------------------------------
// Oracles

namespace {

SpaceTimeField random_field(const SpaceTimeField& shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  SpaceTimeField f = shape;
  for (double& v : f.values()) v = d(rng);
  return f;
}

double rel_diff(std::span<const double> a, std::span<const double> b) {
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    num = std::max(num, std::abs(a[j] - b[j]));
    den = std::max(den, std::abs(b[j]));
  }
  return num / std::max(den, 1e-300);
}

std::unique_ptr<PdeOperator> tiny_operator(PdeKind kind, int i, std::optional<double> tau = std::nullopt) {
  ProblemSpec spec = make_example(kind == PdeKind::parabolic ? 2 : kind == PdeKind::wave ? 3 : 4);
  return make_operator(spec, i, tau);
}

std::vector<OracleCheck> linalg_checks() {
  std::vector<OracleCheck> out;
  const GridSpec grid = build_grid(3);
  const FemMatrices fem = assemble_p1(grid);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> b(static_cast<std::size_t>(grid.node_count()));
  for (double& v : b) v = d(rng);

  const SparseMatrix a = SparseMatrix::combine(1.0, fem.mass, 0.125, fem.stiffness);
  const auto x_direct = factorize_spd(a).solve(b);
  const auto x_dense = dense_solve_oracle(a.to_dense(), b);
  const double e1 = rel_diff(x_direct, x_dense);
  out.push_back({"sparse Cholesky vs dense elimination", e1 <= 1e-10, e1, 1e-10});

  const auto cg = cg_spd([&](std::span<const double> x, std::span<double> y) { a.multiply(x, y); }, b,
                         std::vector<double>(b.size(), 0.0), 1e-13, 1000);
  const double e2 = rel_diff(cg.x, x_dense);
  out.push_back({"conjugate gradients vs dense elimination", cg.converged && e2 <= 1e-9, e2, 1e-9});

  const FemMatrices full = assemble_full_node_set(grid, ElementFamily::p1);
  double row_sum = 0.0;
  for (double v : full.stiffness.row_sums()) row_sum = std::max(row_sum, std::abs(v));
  out.push_back({"stiffness annihilates constants", row_sum <= 1e-12, row_sum, 1e-12});
  double area = 0.0;
  for (double v : full.mass.values()) area += v;
  out.push_back({"mass matrix integrates to the area", std::abs(area - 1.0) <= 1e-12, std::abs(area - 1.0), 1e-12});
  return out;
}

std::vector<OracleCheck> adjoint_checks(const AdjointOverride& override_fn) {
  std::vector<OracleCheck> out;
  auto adj = [&](const PdeOperator& op, const SpaceTimeField& r) {
    return override_fn ? override_fn(op, r) : op.adjoint(r);
  };
  for (PdeKind kind : {PdeKind::parabolic, PdeKind::wave, PdeKind::elliptic}) {
    for (int i : {3, 4}) {
      auto op = tiny_operator(kind, i);
      std::mt19937_64 rng(1000 + 10 * i + static_cast<int>(kind));
      double worst = 0.0;
      for (int trial = 0; trial < 20; ++trial) {
        const SpaceTimeField u = random_field(op->zero_control(), rng);
        const SpaceTimeField w = random_field(op->zero_state(), rng);
        const double lhs = op->state_geometry().inner(op->apply_linear(u), w);
        const double rhs = op->control_geometry().inner(u, adj(*op, w));
        const double scale = op->control_geometry().norm(u) * op->state_geometry().norm(w);
        worst = std::max(worst, std::abs(lhs - rhs) / scale);
      }
      out.push_back({std::string(to_string(kind)) + " adjoint identity, i=" + std::to_string(i), worst <= 1e-10, worst,
                     1e-10});
    }
  }
  return out;
}

/// Column-by-column dense matrix of a field-to-field map.
DenseMatrix dense_of(const std::function<SpaceTimeField(const SpaceTimeField&)>& f, const SpaceTimeField& in_shape) {
  const int n = static_cast<int>(in_shape.size());
  DenseMatrix m;
  for (int j = 0; j < n; ++j) {
    SpaceTimeField e = in_shape;
    e.fill(0.0);
    e.values()[static_cast<std::size_t>(j)] = 1.0;
    const SpaceTimeField col = f(e);
    if (j == 0) m = DenseMatrix(static_cast<int>(col.size()), n);
    for (int r = 0; r < static_cast<int>(col.size()); ++r) m(r, j) = col.values()[static_cast<std::size_t>(r)];
  }
  return m;
}

std::vector<OracleCheck> subproblem_checks() {
  std::vector<OracleCheck> out;
  const ProblemSpec spec = make_example(1);
  auto op = make_operator(spec, 2, 0.5);
  const DataBundle data = eval_fields(spec, *op);
  ControlProblem cp = make_control_problem(spec, *op, data);
  AdmmConfig cfg;
  cfg.alpha = 1e-2;
  cfg.beta = 3.0;
  cfg.inner = InnerMode::fixed(1e-12);
  cfg.max_inner = 1000;

  std::mt19937_64 rng(42);
  AdmmState s;
  s.u = op->zero_control();
  s.z = random_field(op->zero_control(), rng);
  s.lambda = random_field(op->zero_control(), rng);
  s.y = cp.state_offset;
  SpaceTimeField misfit = s.y - cp.target;
  misfit.scale(cfg.gamma());
  s.p = op->adjoint(misfit);
  const SpaceTimeField offset_adj = s.p;

  // (1 + beta) u + gamma S*S u = beta z + lambda - gamma S*(S(0) - y_d)
  const DenseMatrix h = dense_of(
      [&](const SpaceTimeField& u) {
        SpaceTimeField y = op->apply_linear(u);
        y.scale(cfg.gamma());
        SpaceTimeField r = op->adjoint(y);
        r.axpy(1.0 + cfg.beta, u);
        return r;
      },
      s.u);
  SpaceTimeField rhs = s.lambda;
  rhs.axpy(cfg.beta, s.z).axpy(-1.0, offset_adj);
  const std::vector<double> dense_u = dense_solve_oracle(h, rhs.values());

  SpaceTimeField u_star = s.u;
  std::copy(dense_u.begin(), dense_u.end(), u_star.values().begin());
  SpaceTimeField p_star = op->apply_linear(u_star);
  p_star += cp.state_offset;
  p_star -= cp.target;
  p_star.scale(cfg.gamma());
  const SpaceTimeField e = residual_e(u_star, op->adjoint(p_star), s.z, s.lambda, cfg.beta);
  const double e_norm = op->control_geometry().norm(e);
  out.push_back({"dense subproblem solution has zero residual", e_norm <= 1e-10, e_norm, 1e-10});

  const SubproblemResult res = solve_u_subproblem_cg(s, cp, cfg);
  const double diff = rel_diff(s.u.values(), dense_u);
  out.push_back({"inner CG vs dense subproblem, i=2 (" + std::to_string(res.iterations) + " steps)", diff <= 1e-8, diff,
                 1e-8});
  return out;
}

}  // namespace

std::vector<OracleCheck> oracle_check(const std::string& level, const AdjointOverride& adjoint_override) {
  std::vector<OracleCheck> out;
  const bool all = level == "all";
  if (!all && level != "linalg" && level != "adjoint" && level != "subproblem") {
    throw ConfigError("oracle level must be linalg, adjoint, subproblem or all");
  }
  auto append = [&out](std::vector<OracleCheck> v) { out.insert(out.end(), v.begin(), v.end()); };
  if (all || level == "linalg") append(linalg_checks());
  if (all || level == "adjoint") append(adjoint_checks(adjoint_override));
  if (all || level == "subproblem") append(subproblem_checks());
  return out;
}

}  // namespace ocp
