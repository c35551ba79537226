#include "ocp/problems.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ocp/error.hpp"

namespace ocp {

// ---------------------------------------------------------------------------
// Expression compiler

namespace {

struct Vars {
  double x1, x2, t;
};
using Node = std::function<double(const Vars&)>;

class ExpressionParser {
 public:
  explicit ExpressionParser(const std::string& text) : s_(text) {}

  Node parse() {
    Node n = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("expression '" + s_ + "' at " + std::to_string(pos_) + ": " + what);
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Node expr() {
    Node lhs = term();
    for (;;) {
      if (eat('+')) {
        lhs = [a = lhs, b = term()](const Vars& v) { return a(v) + b(v); };
      } else if (eat('-')) {
        lhs = [a = lhs, b = term()](const Vars& v) { return a(v) - b(v); };
      } else {
        return lhs;
      }
    }
  }

  Node term() {
    Node lhs = unary();
    for (;;) {
      if (eat('*')) {
        lhs = [a = lhs, b = unary()](const Vars& v) { return a(v) * b(v); };
      } else if (eat('/')) {
        lhs = [a = lhs, b = unary()](const Vars& v) { return a(v) / b(v); };
      } else {
        return lhs;
      }
    }
  }

  Node unary() {
    if (eat('-')) return [a = unary()](const Vars& v) { return -a(v); };
    if (eat('+')) return unary();
    return power();
  }

  Node power() {
    Node base = primary();
    if (eat('^')) return [a = base, b = unary()](const Vars& v) { return std::pow(a(v), b(v)); };
    return base;
  }

  Node primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    if (eat('(')) {
      Node n = expr();
      if (!eat(')')) fail("missing ')'");
      return n;
    }
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double value = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      return [value](const Vars&) { return value; };
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      const std::string name = s_.substr(start, pos_ - start);
      if (name == "x1") return [](const Vars& v) { return v.x1; };
      if (name == "x2") return [](const Vars& v) { return v.x2; };
      if (name == "t") return [](const Vars& v) { return v.t; };
      if (name == "pi") return [](const Vars&) { return std::numbers::pi; };
      return call(name);
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  Node call(const std::string& name) {
    if (!eat('(')) fail("expected '(' after " + name);
    Node a = expr();
    if (name == "min" || name == "max") {
      if (!eat(',')) fail(name + " takes two arguments");
      Node b = expr();
      if (!eat(')')) fail("missing ')'");
      if (name == "min") return [a, b](const Vars& v) { return std::min(a(v), b(v)); };
      return [a, b](const Vars& v) { return std::max(a(v), b(v)); };
    }
    if (!eat(')')) fail("missing ')'");
    if (name == "sin") return [a](const Vars& v) { return std::sin(a(v)); };
    if (name == "cos") return [a](const Vars& v) { return std::cos(a(v)); };
    if (name == "exp") return [a](const Vars& v) { return std::exp(a(v)); };
    if (name == "sqrt") return [a](const Vars& v) { return std::sqrt(a(v)); };
    if (name == "abs") return [a](const Vars& v) { return std::abs(a(v)); };
    fail("unknown function " + name);
  }
};

}  // namespace

ScalarFn parse_expression(const std::string& text) {
  Node n = ExpressionParser(text).parse();
  return [n](double x1, double x2, double t) { return n(Vars{x1, x2, t}); };
}

// ---------------------------------------------------------------------------
// Benchmark problems

void ProblemSpec::validate() const {
  if (!(lower < upper)) throw ConfigError(name + ": lower bound must be below upper bound");
  if (!(alpha > 0.0)) throw ConfigError(name + ": alpha must be positive");
  if (kind != PdeKind::elliptic && !(final_time > 0.0)) throw ConfigError(name + ": final time must be positive");
  if (kind == PdeKind::parabolic && !(nu > 0.0)) throw ConfigError(name + ": nu must be positive");
  if (kind == PdeKind::parabolic && !(a0 >= 0.0)) throw ConfigError(name + ": a0 must be nonnegative");
  if (!(default_beta > 0.0) || !(default_tol > 0.0)) throw ConfigError(name + ": beta and tol must be positive");
  if (!(0.0 <= omega.x1_lo && omega.x1_lo < omega.x1_hi && omega.x1_hi <= 1.0 && 0.0 <= omega.x2_lo &&
        omega.x2_lo < omega.x2_hi && omega.x2_hi <= 1.0)) {
    throw ConfigError(name + ": control rectangle must lie in the unit square");
  }
}

namespace {

constexpr double kPi = std::numbers::pi;

double clamp_to(double v, double a, double b) { return std::max(a, std::min(b, v)); }

double s1(double x1, double x2) { return std::sin(kPi * x1) * std::sin(kPi * x2); }
double s2(double x1, double x2) { return std::sin(2 * kPi * x1) * std::sin(2 * kPi * x2); }

ProblemSpec example1() {
  ProblemSpec p;
  p.name = "example1";
  p.kind = PdeKind::parabolic;
  p.final_time = 1.0;
  p.alpha = 1e-5;
  p.lower = -0.5;
  p.upper = 0.5;
  p.nu = 1.0;
  p.a0 = 0.0;
  p.omega = Rect{0.0, 1.0, 0.0, 1.0};
  const double alpha = p.alpha, a = p.lower, b = p.upper;
  p.exact_state = [](double x1, double x2, double t) { return (1 - t) * s1(x1, x2); };
  p.exact_adjoint = [alpha](double x1, double x2, double t) { return alpha * (1 - t) * s2(x1, x2); };
  p.exact_control = [a, b](double x1, double x2, double t) { return clamp_to(-(1 - t) * s2(x1, x2), a, b); };
  // f = dy/dt - Lap y - u
  p.source = [](double x1, double x2, double t) { return (-1 + 2 * kPi * kPi * (1 - t)) * s1(x1, x2); };
  p.control_source = [exact = p.exact_control](double x1, double x2, double t) { return -exact(x1, x2, t); };
  // y_d = y + dp/dt + Lap p
  p.target = [alpha](double x1, double x2, double t) {
    return (1 - t) * s1(x1, x2) - alpha * (1 + 8 * kPi * kPi * (1 - t)) * s2(x1, x2);
  };
  p.initial = [](double x1, double x2, double) { return s1(x1, x2); };
  p.default_beta = 3.0;
  p.default_tol = 1e-4;
  return p;
}

ProblemSpec example2() {
  ProblemSpec p;
  p.name = "example2";
  p.kind = PdeKind::parabolic;
  p.final_time = 1.0;
  p.alpha = 1e-6;
  p.lower = -300.0;
  p.upper = 300.0;
  p.nu = 1.0;
  p.a0 = 1.0;
  p.omega = Rect{0.0, 0.25, 0.0, 0.25};
  p.target = [](double x1, double x2, double t) {
    return std::exp(t) * std::sin(4 * kPi * x1) * std::sin(4 * kPi * x2);
  };
  p.default_beta = 3.0;
  p.default_tol = 1e-3;
  return p;
}

ProblemSpec example3() {
  ProblemSpec p;
  p.name = "example3";
  p.kind = PdeKind::wave;
  p.final_time = 1.0;
  p.alpha = 1e-4;
  p.lower = -5.0;
  p.upper = 0.0;
  p.omega = Rect{0.0, 0.5, 0.0, 0.5};
  const double alpha = p.alpha, a = p.lower, b = p.upper, ra = std::sqrt(p.alpha);
  p.exact_state = [](double x1, double x2, double t) { return std::exp(t) * s1(x1, x2); };
  p.exact_adjoint = [ra](double x1, double x2, double t) { return ra * (t - 1) * (t - 1) * s1(x1, x2); };
  p.exact_control = [a, b, alpha, adj = p.exact_adjoint](double x1, double x2, double t) {
    return clamp_to(-adj(x1, x2, t) / alpha, a, b);
  };
  // f = y_tt - Lap y - u chi
  p.source = [](double x1, double x2, double t) { return (1 + 2 * kPi * kPi) * std::exp(t) * s1(x1, x2); };
  p.control_source = [exact = p.exact_control](double x1, double x2, double t) { return -exact(x1, x2, t); };
  // y_d = y - p_tt + Lap p
  p.target = [ra](double x1, double x2, double t) {
    return (std::exp(t) - ra * (2 + 2 * kPi * kPi * (t - 1) * (t - 1))) * s1(x1, x2);
  };
  p.initial = [](double x1, double x2, double) { return s1(x1, x2); };
  p.initial_velocity = [](double x1, double x2, double) { return s1(x1, x2); };
  p.default_beta = 5.0;
  p.default_tol = 1e-5;
  return p;
}

ProblemSpec example4() {
  ProblemSpec p;
  p.name = "example4";
  p.kind = PdeKind::elliptic;
  p.element = ElementFamily::q1;
  p.final_time = 0.0;
  p.alpha = 1e-4;
  p.lower = 0.3;
  p.upper = 1.0;
  p.omega = Rect{0.0, 1.0, 0.0, 1.0};
  const double alpha = p.alpha, a = p.lower, b = p.upper;
  p.target_lift = [a, b](double x1, double x2, double) { return clamp_to(2 * s1(x1, x2), a, b); };
  p.exact_control = p.target_lift;
  p.exact_adjoint = [alpha](double x1, double x2, double) { return -2 * alpha * s1(x1, x2); };
  p.target = [alpha](double x1, double x2, double) { return 4 * kPi * kPi * alpha * s1(x1, x2); };
  p.default_beta = 2.0;
  p.default_tol = 1e-7;
  p.initial_u = 0.5;
  return p;
}

}  // namespace

ProblemSpec make_example(int id) {
  switch (id) {
    case 1: return example1();
    case 2: return example2();
    case 3: return example3();
    case 4: return example4();
    default: throw ConfigError("unknown example id " + std::to_string(id));
  }
}

ProblemSpec make_example(const std::string& name) {
  std::string digits = name;
  if (digits.rfind("example", 0) == 0) digits = digits.substr(7);
  if (digits.size() == 1 && digits[0] >= '1' && digits[0] <= '0' + kExampleCount) return make_example(digits[0] - '0');
  throw ConfigError("unknown problem '" + name + "'");
}

namespace {

double parse_number(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used]))) ++used;
  if (used != text.size() || text.empty()) throw ConfigError("custom." + key + ": not a number: '" + text + "'");
  return v;
}

}  // namespace

ProblemSpec make_custom_problem(const std::map<std::string, std::string>& keys) {
  ProblemSpec p;
  p.name = "custom";
  p.omega = Rect{0.0, 1.0, 0.0, 1.0};
  for (const auto& [key, value] : keys) {
    if (key == "kind") {
      if (value == "parabolic") p.kind = PdeKind::parabolic;
      else if (value == "wave") p.kind = PdeKind::wave;
      else if (value == "elliptic") p.kind = PdeKind::elliptic;
      else throw ConfigError("custom.kind must be parabolic, wave or elliptic");
    } else if (key == "element") {
      if (value == "p1") p.element = ElementFamily::p1;
      else if (value == "q1") p.element = ElementFamily::q1;
      else throw ConfigError("custom.element must be p1 or q1");
    } else if (key == "T") {
      p.final_time = parse_number(key, value);
    } else if (key == "alpha") {
      p.alpha = parse_number(key, value);
    } else if (key == "lower") {
      p.lower = parse_number(key, value);
    } else if (key == "upper") {
      p.upper = parse_number(key, value);
    } else if (key == "nu") {
      p.nu = parse_number(key, value);
    } else if (key == "a0") {
      p.a0 = parse_number(key, value);
    } else if (key == "beta") {
      p.default_beta = parse_number(key, value);
    } else if (key == "tol") {
      p.default_tol = parse_number(key, value);
    } else if (key == "initial_u") {
      p.initial_u = parse_number(key, value);
    } else if (key == "omega") {
      std::stringstream ss(value);
      std::string part;
      double v[4];
      int n = 0;
      while (std::getline(ss, part, ',')) {
        if (n == 4) throw ConfigError("custom.omega takes four numbers");
        v[n++] = parse_number(key, part);
      }
      if (n != 4) throw ConfigError("custom.omega takes four numbers");
      p.omega = Rect{v[0], v[1], v[2], v[3]};
    } else if (key == "source") {
      p.source = parse_expression(value);
    } else if (key == "control_source") {
      p.control_source = parse_expression(value);
    } else if (key == "target") {
      p.target = parse_expression(value);
    } else if (key == "initial") {
      p.initial = parse_expression(value);
    } else if (key == "initial_velocity") {
      p.initial_velocity = parse_expression(value);
    } else if (key == "target_lift") {
      p.target_lift = parse_expression(value);
    } else if (key == "exact_control") {
      p.exact_control = parse_expression(value);
    } else if (key == "exact_state") {
      p.exact_state = parse_expression(value);
    } else {
      throw ConfigError("unknown key custom." + key);
    }
  }
  if (!p.target) throw ConfigError("custom problem needs custom.target");
  p.validate();
  return p;
}

// ---------------------------------------------------------------------------

std::unique_ptr<PdeOperator> make_operator(const ProblemSpec& spec, int mesh_exponent,
                                           std::optional<double> tau_override) {
  spec.validate();
  const GridSpec grid = build_grid(mesh_exponent);
  FemMatrices fem = assemble(grid, spec.element);
  SubdomainMask mask = subdomain_mask(grid, spec.omega);
  if (spec.kind == PdeKind::elliptic) {
    return std::make_unique<EllipticOperator>(grid, std::move(fem), std::move(mask));
  }
  const TimeGrid time = make_time_grid(spec.final_time, tau_override.value_or(grid.h()));
  if (spec.kind == PdeKind::parabolic) {
    return std::make_unique<ParabolicOperator>(grid, std::move(fem), std::move(mask), time, spec.nu, spec.a0);
  }
  return std::make_unique<WaveOperator>(grid, std::move(fem), std::move(mask), time);
}

namespace {

double level_time(const PdeOperator& op, int level) {
  return op.kind() == PdeKind::elliptic ? 0.0 : (level + 1) * op.time().tau;
}

std::vector<double> nodal(const ScalarFn& fn, const GridSpec& grid, double t) {
  std::vector<double> v(static_cast<std::size_t>(grid.node_count()));
  for (int j = 0; j < grid.node_count(); ++j) v[static_cast<std::size_t>(j)] = fn(grid.x1(j), grid.x2(j), t);
  return v;
}

std::vector<double> nodal_on_mask(const ScalarFn& fn, const GridSpec& grid, const SubdomainMask& mask, double t) {
  const auto idx = mask.indices();
  std::vector<double> v(idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j) v[j] = fn(grid.x1(idx[j]), grid.x2(idx[j]), t);
  return v;
}

}  // namespace

SpaceTimeField interpolate(const ScalarFn& fn, const PdeOperator& op, NodeSet set) {
  SpaceTimeField f = set == NodeSet::control ? op.zero_control() : op.zero_state();
  for (int n = 0; n < f.levels(); ++n) {
    const double t = level_time(op, n);
    const auto v = set == NodeSet::control ? nodal_on_mask(fn, op.grid(), op.mask(), t) : nodal(fn, op.grid(), t);
    std::copy(v.begin(), v.end(), f.level(n).begin());
  }
  return f;
}

DataBundle eval_fields(const ProblemSpec& spec, const PdeOperator& op) {
  DataBundle d;
  const GridSpec& grid = op.grid();
  const bool stationary = op.kind() == PdeKind::elliptic;
  const int source_levels = stationary ? 1 : op.time().steps + 1;
  const double tau = stationary ? 0.0 : op.time().tau;
  if (spec.source) {
    for (int n = 0; n < source_levels; ++n) d.forcing.source.push_back(nodal(spec.source, grid, n * tau));
  }
  if (spec.control_source) {
    for (int n = 0; n < source_levels; ++n) {
      d.forcing.control_source.push_back(nodal_on_mask(spec.control_source, grid, op.mask(), n * tau));
    }
  }
  if (!stationary) {
    if (spec.initial) d.forcing.initial = nodal(spec.initial, grid, 0.0);
    if (spec.initial_velocity) d.forcing.initial_velocity = nodal(spec.initial_velocity, grid, 0.0);
  }
  d.target = spec.target ? interpolate(spec.target, op, NodeSet::domain) : op.zero_state();
  if (spec.target_lift) {
    const auto* ell = dynamic_cast<const EllipticOperator*>(&op);
    if (ell == nullptr) throw ConfigError(spec.name + ": a target lift needs a stationary problem");
    const auto lift = ell->solve(nodal(spec.target_lift, grid, 0.0));
    auto level = d.target.level(0);
    for (std::size_t j = 0; j < lift.size(); ++j) level[j] += lift[j];
  }
  return d;
}

ControlProblem make_control_problem(const ProblemSpec& spec, const PdeOperator& op, const DataBundle& data) {
  ControlProblem cp;
  cp.op = &op;
  cp.target = data.target;
  cp.state_offset = op.offset(data.forcing);
  cp.lower = spec.lower;
  cp.upper = spec.upper;
  return cp;
}

InitialIterates make_initial_iterates(const ProblemSpec& spec, const PdeOperator& op) {
  InitialIterates init;
  auto constant = [&op](double v) {
    SpaceTimeField f = op.zero_control();
    f.fill(v);
    return f;
  };
  if (spec.initial_u != 0.0) init.u = constant(spec.initial_u);
  if (spec.initial_z != 0.0) init.z = constant(spec.initial_z);
  if (spec.initial_lambda != 0.0) init.lambda = constant(spec.initial_lambda);
  return init;
}

}  // namespace ocp
