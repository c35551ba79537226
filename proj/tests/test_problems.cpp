#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ocp/error.hpp"
#include "ocp/problems.hpp"
#include "test_util.hpp"

using namespace ocp;

namespace {

constexpr double kPi = std::numbers::pi;

// Central differences in space and time of a smooth function.
struct Fd {
  const ScalarFn& f;
  double d = 1e-4;
  double lap(double x1, double x2, double t) const {
    return (f(x1 + d, x2, t) + f(x1 - d, x2, t) + f(x1, x2 + d, t) + f(x1, x2 - d, t) - 4 * f(x1, x2, t)) / (d * d);
  }
  double dt(double x1, double x2, double t) const { return (f(x1, x2, t + d) - f(x1, x2, t - d)) / (2 * d); }
  double dtt(double x1, double x2, double t) const {
    return (f(x1, x2, t + d) - 2 * f(x1, x2, t) + f(x1, x2, t - d)) / (d * d);
  }
};

const double kSamples[][3] = {{0.3, 0.7, 0.2}, {0.55, 0.15, 0.5}, {0.8, 0.45, 0.9}, {0.12, 0.2, 0.35}};

double control_source_or_zero(const ProblemSpec& p, double x1, double x2, double t) {
  return p.control_source ? p.control_source(x1, x2, t) : 0.0;
}

}  // namespace

TEST_CASE("expression parser examples") {
  auto ev = [](const char* s, double x1 = 0, double x2 = 0, double t = 0) { return parse_expression(s)(x1, x2, t); };
  CHECK(ev("1 + 2*3") == 7);
  CHECK(ev("(1 + 2)*3") == 9);
  CHECK(ev("2^3^2") == 512);
  CHECK(ev("-2^2") == -4);
  CHECK(ev("2^-1") == 0.5);
  CHECK(ev("8/4/2") == 1);
  CHECK(ev("x1 - x2 * t", 1, 2, 3) == -5);
  CHECK(ev("sin(pi/2) + cos(0)") == doctest::Approx(2.0));
  CHECK(ev("exp(1)") == doctest::Approx(std::exp(1.0)));
  CHECK(ev("sqrt(16) + abs(-3)") == 7);
  CHECK(ev("min(x1, x2) + max(x1, x2)", 0.25, 0.75) == 1.0);
  CHECK(ev("1e-3 * 2") == doctest::Approx(2e-3));
  for (const char* bad : {"", "1 +", "(1", "foo(1)", "x3", "1 2", "min(1)", "sin 1", "2 ** 3"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(parse_expression(bad), ConfigError);
  }
}

TEST_CASE("built-in examples: basic facts") {
  for (int id = 1; id <= kExampleCount; ++id) {
    const ProblemSpec p = make_example(id);
    CAPTURE(id);
    CHECK_NOTHROW(p.validate());
    CHECK(p.lower < p.upper);
    CHECK(p.alpha > 0);
    CHECK(make_example("example" + std::to_string(id)).name == p.name);
    CHECK(make_example(std::to_string(id)).name == p.name);
  }
  CHECK(make_example(1).kind == PdeKind::parabolic);
  CHECK(make_example(2).kind == PdeKind::parabolic);
  CHECK(make_example(3).kind == PdeKind::wave);
  CHECK(make_example(4).kind == PdeKind::elliptic);
  CHECK(make_example(4).element == ElementFamily::q1);
  CHECK(make_example(2).omega.x1_hi == 0.25);
  CHECK(make_example(2).omega.x2_hi == 0.25);
  CHECK(!make_example(2).has_exact_control());
  CHECK_THROWS_AS(make_example(0), ConfigError);
  CHECK_THROWS_AS(make_example("example9"), ConfigError);
}

TEST_CASE("exact controls are the projected scaled adjoints") {
  for (int id : {1, 3, 4}) {
    const ProblemSpec p = make_example(id);
    CAPTURE(id);
    for (const auto& s : kSamples) {
      const double proj = std::clamp(-p.exact_adjoint(s[0], s[1], s[2]) / p.alpha, p.lower, p.upper);
      CHECK(p.exact_control(s[0], s[1], s[2]) == doctest::Approx(proj).epsilon(1e-12));
    }
  }
}

TEST_CASE("parabolic example: exact pair satisfies state and adjoint equations") {
  const ProblemSpec p = make_example(1);
  const Fd y{p.exact_state}, q{p.exact_adjoint};
  for (const auto& s : kSamples) {
    const double x1 = s[0], x2 = s[1], t = s[2];
    const double lhs = y.dt(x1, x2, t) - y.lap(x1, x2, t);
    const double rhs = p.source(x1, x2, t) + control_source_or_zero(p, x1, x2, t) + p.exact_control(x1, x2, t);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-5));
    const double adj = -q.dt(x1, x2, t) - q.lap(x1, x2, t);
    CHECK(adj == doctest::Approx(p.exact_state(x1, x2, t) - p.target(x1, x2, t)).epsilon(1e-4));
    CHECK(p.exact_state(x1, x2, 1.0) == doctest::Approx(0.0));
    CHECK(p.exact_adjoint(x1, x2, 1.0) == doctest::Approx(0.0));
  }
  CHECK(p.exact_state(0.0, 0.3, 0.2) == doctest::Approx(0.0));
}

TEST_CASE("wave example: exact pair satisfies state and adjoint equations") {
  const ProblemSpec p = make_example(3);
  const Fd y{p.exact_state, 1e-3}, q{p.exact_adjoint, 1e-3};
  for (const auto& s : kSamples) {
    const double x1 = s[0], x2 = s[1], t = s[2];
    const double lhs = y.dtt(x1, x2, t) - y.lap(x1, x2, t);
    const double rhs = p.source(x1, x2, t) + control_source_or_zero(p, x1, x2, t) + p.exact_control(x1, x2, t);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-5));
    const double adj = q.dtt(x1, x2, t) - q.lap(x1, x2, t);
    CHECK(adj == doctest::Approx(p.exact_state(x1, x2, t) - p.target(x1, x2, t)).epsilon(1e-4));
    CHECK(p.initial(x1, x2, 0) == doctest::Approx(p.exact_state(x1, x2, 0)));
    CHECK(p.initial_velocity(x1, x2, 0) == doctest::Approx(y.dt(x1, x2, 0)).epsilon(1e-5));
    // terminal conditions of the adjoint
    CHECK(p.exact_adjoint(x1, x2, 1.0) == doctest::Approx(0.0));
    CHECK(q.dt(x1, x2, 1.0) == doctest::Approx(0.0).epsilon(1e-6));
  }
}

TEST_CASE("elliptic example: adjoint and lifted target") {
  const ProblemSpec p = make_example(4);
  const Fd q{p.exact_adjoint};
  for (const auto& s : kSamples) {
    const double x1 = s[0], x2 = s[1];
    // -Lap p = y - y_d where y_d = target + y(lift) and y = y(u*) = y(lift)
    CHECK(-q.lap(x1, x2, 0) == doctest::Approx(-p.target(x1, x2, 0)).epsilon(1e-5));
    CHECK(p.target(x1, x2, 0) == doctest::Approx(4 * kPi * kPi * p.alpha * std::sin(kPi * x1) * std::sin(kPi * x2)));
    CHECK(p.target_lift(x1, x2, 0) == p.exact_control(x1, x2, 0));
  }
  CHECK(p.initial_u == 0.5);
}

TEST_CASE("nodal data on the mesh") {
  const ProblemSpec p = make_example(1);
  const auto op = make_operator(p, 3);
  CHECK(op->time().steps == 8);
  CHECK(op->time().tau == 0.125);
  CHECK(make_operator(p, 3, 0.25)->time().steps == 4);
  const DataBundle d = eval_fields(p, *op);
  CHECK(d.forcing.source.size() == 9);
  CHECK(d.forcing.control_source.size() == 9);
  CHECK(d.forcing.initial.size() == 49);
  const GridSpec& g = op->grid();
  // level n holds t_{n+1}
  const int node = g.node(3, 5);
  CHECK(d.target.level(0)[static_cast<std::size_t>(node)] == doctest::Approx(p.target(g.x1(node), g.x2(node), 0.125)));
  CHECK(d.forcing.source[0][static_cast<std::size_t>(node)] == doctest::Approx(p.source(g.x1(node), g.x2(node), 0.0)));
  const auto u = interpolate(p.exact_control, *op, NodeSet::control);
  CHECK(u.level(7)[static_cast<std::size_t>(node)] == doctest::Approx(0.0));
  const InitialIterates init = make_initial_iterates(make_example(4), *make_operator(make_example(4), 3));
  REQUIRE(init.u);
  CHECK(testutil::max_abs(init.u->values()) == 0.5);
}

TEST_CASE("custom problems") {
  const ProblemSpec p = make_custom_problem({{"kind", "wave"},
                                            {"T", "0.5"},
                                            {"alpha", "1e-3"},
                                            {"lower", "-2"},
                                            {"upper", "2"},
                                            {"omega", "0,0.5,0.25,0.75"},
                                            {"target", "x1*x2*t"},
                                            {"initial", "sin(pi*x1)*sin(pi*x2)"},
                                            {"beta", "4"},
                                            {"tol", "1e-5"}});
  CHECK(p.kind == PdeKind::wave);
  CHECK(p.final_time == 0.5);
  CHECK(p.alpha == 1e-3);
  CHECK(p.omega.x2_lo == 0.25);
  CHECK(p.omega.x2_hi == 0.75);
  CHECK(p.default_beta == 4);
  CHECK(p.default_tol == 1e-5);
  CHECK(p.target(1, 0.5, 0.5) == 0.25);
  const auto op = make_operator(p, 3);
  CHECK(op->time().steps == 4);
  CHECK_NOTHROW(eval_fields(p, *op));

  CHECK_THROWS_AS(make_custom_problem({{"kind", "parabolic"}}), ConfigError);
  CHECK_THROWS_AS(make_custom_problem({{"target", "1"}, {"bogus", "1"}}), ConfigError);
  CHECK_THROWS_AS(make_custom_problem({{"target", "1"}, {"kind", "hyperbolic"}}), ConfigError);
  CHECK_THROWS_AS(make_custom_problem({{"target", "1"}, {"omega", "0,1,0"}}), ConfigError);
  CHECK_THROWS_AS(make_custom_problem({{"target", "x1 +"}}), ConfigError);
  CHECK_THROWS_AS(make_custom_problem({{"target", "1"}, {"lower", "1"}, {"upper", "0"}}), ConfigError);
  // a lift only makes sense for a stationary state equation
  const ProblemSpec lifted = make_custom_problem({{"target", "1"}, {"target_lift", "1"}});
  CHECK_THROWS_AS(eval_fields(lifted, *make_operator(lifted, 3)), ConfigError);
}
