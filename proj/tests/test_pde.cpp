#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numbers>
#include <random>

#include "ocp/error.hpp"
#include "ocp/metrics.hpp"
#include "ocp/pde.hpp"
#include "ocp/problems.hpp"
#include "test_util.hpp"

using namespace ocp;

namespace {

std::unique_ptr<PdeOperator> build(PdeKind kind, int i, Rect omega = {}, double T = 1.0, double tau = 0.0) {
  const GridSpec g = build_grid(i);
  if (tau == 0.0) tau = g.h();
  const ElementFamily fam = kind == PdeKind::elliptic ? ElementFamily::q1 : ElementFamily::p1;
  FemMatrices fem = assemble(g, fam);
  SubdomainMask mask = subdomain_mask(g, omega);
  switch (kind) {
    case PdeKind::parabolic:
      return std::make_unique<ParabolicOperator>(g, std::move(fem), std::move(mask), make_time_grid(T, tau), 1.0, 0.5);
    case PdeKind::wave:
      return std::make_unique<WaveOperator>(g, std::move(fem), std::move(mask), make_time_grid(T, tau));
    case PdeKind::elliptic:
      return std::make_unique<EllipticOperator>(g, std::move(fem), std::move(mask));
  }
  return nullptr;
}

double adjoint_defect(const PdeOperator& op, std::mt19937_64& rng) {
  const auto u = testutil::random_like(op.zero_control(), rng);
  const auto r = testutil::random_like(op.zero_state(), rng);
  const double lhs = op.state_geometry().inner(op.apply_linear(u), r);
  const double rhs = op.control_geometry().inner(u, op.adjoint(r));
  return std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1e-300});
}

double max_dense_diff(const DenseMatrix& a, const DenseMatrix& b) {
  double m = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
  return m;
}

double max_dense_abs(const DenseMatrix& a) {
  double m = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j)));
  return m;
}

// Error of the state driven by the exact control against the exact state.
double manufactured_state_error(const ProblemSpec& spec, int i) {
  const auto op = make_operator(spec, i);
  const DataBundle d = eval_fields(spec, *op);
  const SpaceTimeField u = interpolate(spec.exact_control, *op, NodeSet::control);
  const SpaceTimeField y = op->forward(u, &d.forcing);
  return op->state_geometry().norm(y - interpolate(spec.exact_state, *op, NodeSet::domain));
}

double slope_over(const ProblemSpec& spec, std::initializer_list<int> meshes) {
  std::vector<double> errs, hs;
  for (int i : meshes) {
    errs.push_back(manufactured_state_error(spec, i));
    hs.push_back(std::ldexp(1.0, -i));
  }
  return convergence_order(errs, hs);
}

}  // namespace

TEST_CASE("time grids") {
  const TimeGrid t = make_time_grid(1.0, 0.125);
  CHECK(t.steps == 8);
  CHECK(make_time_grid(0.75, 0.25).steps == 3);
  CHECK_THROWS_AS(make_time_grid(1.0, 0.3), ConfigError);
  CHECK_THROWS_AS(make_time_grid(1.0, -0.1), ConfigError);
}

TEST_CASE("zero control and zero data give the zero state") {
  for (PdeKind k : {PdeKind::parabolic, PdeKind::wave, PdeKind::elliptic}) {
    const auto op = build(k, 3, Rect{0, 0.5, 0, 0.5});
    const ForcingData none;
    CHECK(testutil::max_abs(op->forward(op->zero_control(), &none).values()) == 0.0);
    CHECK(testutil::max_abs(op->apply_linear(op->zero_control()).values()) == 0.0);
    CHECK(testutil::max_abs(op->adjoint(op->zero_state()).values()) == 0.0);
  }
}

TEST_CASE("adjoint identity on random pairs") {
  std::mt19937_64 rng(42);
  for (PdeKind k : {PdeKind::parabolic, PdeKind::wave, PdeKind::elliptic}) {
    for (int i : {3, 4}) {
      for (Rect omega : {Rect{}, Rect{0, 0.5, 0.25, 1}}) {
        const auto op = build(k, i, omega);
        for (int t = 0; t < 10; ++t) CHECK(adjoint_defect(*op, rng) <= 1e-10);
      }
    }
  }
}

TEST_CASE("adjoint equals the weighted transpose of the dense forward map") {
  struct Case {
    PdeKind kind;
    double T;
    double tau;
  };
  for (Case c : {Case{PdeKind::parabolic, 1.0, 0.5}, Case{PdeKind::wave, 0.75, 0.25}, Case{PdeKind::elliptic, 1, 1}}) {
    const auto op = build(c.kind, 2, Rect{0, 0.5, 0, 1}, c.T, c.tau);
    const DenseMatrix s = testutil::dense_of([&](const SpaceTimeField& u) { return op->apply_linear(u); },
                                             op->zero_control());
    const DenseMatrix sa = testutil::dense_of([&](const SpaceTimeField& r) { return op->adjoint(r); },
                                              op->zero_state());
    const DenseMatrix wq = testutil::dense_weight(op->state_mass(), op->levels(), op->time_weight());
    const DenseMatrix wo = testutil::dense_weight(op->control_mass(), op->levels(), op->time_weight());
    const DenseMatrix lhs = testutil::dense_product(wo, sa);
    const DenseMatrix rhs = testutil::dense_product(s.transpose(), wq);
    CHECK(max_dense_diff(lhs, rhs) <= 1e-12 * std::max(1.0, max_dense_abs(lhs)));
  }
}

TEST_CASE("forward map is affine in the control") {
  std::mt19937_64 rng(5);
  const ProblemSpec spec = make_example(1);
  const auto op = make_operator(spec, 3);
  const DataBundle d = eval_fields(spec, *op);
  const auto u = testutil::random_like(op->zero_control(), rng);
  const auto v = testutil::random_like(op->zero_control(), rng);
  const auto lin = op->apply_linear(2.0 * u - 3.0 * v);
  const auto comb = 2.0 * op->apply_linear(u) - 3.0 * op->apply_linear(v);
  CHECK(testutil::max_abs_diff(lin.values(), comb.values()) <= 1e-12);
  const auto full = op->forward(u, &d.forcing);
  const auto split = op->apply_linear(u) + op->offset(d.forcing);
  CHECK(testutil::max_abs_diff(full.values(), split.values()) <= 1e-12);
  CHECK(testutil::max_abs_diff(affine_offset(*op, d.forcing).values(), op->offset(d.forcing).values()) == 0.0);
}

TEST_CASE("free-function forms match the member actions") {
  std::mt19937_64 rng(6);
  const GridSpec g = build_grid(3);
  const ParabolicOperator par(g, assemble_p1(g), subdomain_mask(g, Rect{}), make_time_grid(1.0, 0.125), 1.0, 0.0);
  const WaveOperator wave(g, assemble_p1(g), subdomain_mask(g, Rect{}), make_time_grid(1.0, 0.125));
  const EllipticOperator ell(g, assemble_p1(g), subdomain_mask(g, Rect{}));
  const auto u = testutil::random_like(par.zero_control(), rng);
  CHECK(testutil::max_abs_diff(parabolic_forward(par, u, nullptr).values(), par.apply_linear(u).values()) == 0.0);
  const auto r = testutil::random_like(par.zero_state(), rng);
  CHECK(testutil::max_abs_diff(parabolic_adjoint(par, r).values(), par.adjoint(r).values()) == 0.0);
  CHECK(testutil::max_abs_diff(wave_forward(wave, u, nullptr).values(), wave.apply_linear(u).values()) == 0.0);
  CHECK(testutil::max_abs_diff(wave_adjoint(wave, r).values(), wave.adjoint(r).values()) == 0.0);
  const auto rhs = testutil::random_vector(static_cast<std::size_t>(g.node_count()), rng);
  const auto y = elliptic_solve(ell, rhs);
  // K y = M rhs
  CHECK(testutil::max_abs_diff(ell.fem().stiffness.multiply(y), ell.fem().mass.multiply(rhs)) <= 1e-12);
}

TEST_CASE("parabolic decay without forcing") {
  const GridSpec g = build_grid(4);
  const FemMatrices fem = assemble_p1(g);
  const ParabolicOperator op(g, fem, subdomain_mask(g, Rect{}), make_time_grid(1.0, g.h()), 1.0, 0.0);
  ForcingData d;
  std::mt19937_64 rng(7);
  d.initial = testutil::random_vector(static_cast<std::size_t>(g.node_count()), rng);
  const auto y = op.forward(op.zero_control(), &d);
  auto mnorm = [&](std::span<const double> v) { return std::sqrt(dot(v, fem.mass.multiply(v))); };
  double prev = mnorm(d.initial);
  for (int n = 0; n < y.levels(); ++n) {
    const double cur = mnorm(y.level(n));
    CHECK(cur <= prev * (1 + 1e-14));
    prev = cur;
  }
  CHECK(prev < 1e-6 * mnorm(d.initial));
}

TEST_CASE("wave energy is conserved without forcing") {
  const GridSpec g = build_grid(4);
  const WaveOperator op(g, assemble_p1(g), subdomain_mask(g, Rect{}), make_time_grid(1.0, g.h()));
  ForcingData d;
  std::mt19937_64 rng(8);
  d.initial = testutil::random_vector(static_cast<std::size_t>(g.node_count()), rng);
  d.initial_velocity = testutil::random_vector(static_cast<std::size_t>(g.node_count()), rng);
  const auto y = op.forward(op.zero_control(), &d);
  const double e0 = op.energy(y.level(1), y.level(0));
  for (int n = 1; n + 1 < y.levels(); ++n) {
    CHECK(std::abs(op.energy(y.level(n + 1), y.level(n)) - e0) <= 1e-10 * e0);
  }
}

TEST_CASE("state discretization error decays at the expected rates") {
  const double par = slope_over(make_example(1), {3, 4, 5});
  MESSAGE("parabolic state slope ", par);
  CHECK(par >= 0.9);
  const double wave = slope_over(make_example(3), {3, 4, 5});
  MESSAGE("wave state slope ", wave);
  CHECK(wave >= 1.8);
  const ProblemSpec ell = make_custom_problem({{"kind", "elliptic"},
                                               {"element", "p1"},
                                               {"source", "2*pi^2*sin(pi*x1)*sin(pi*x2)"},
                                               {"target", "0"},
                                               {"exact_control", "0"},
                                               {"exact_state", "sin(pi*x1)*sin(pi*x2)"}});
  const double es = slope_over(ell, {4, 5, 6});
  MESSAGE("elliptic state slope ", es);
  CHECK(es >= 1.8);
}

TEST_CASE("factorizations are done once at construction") {
  const int before = factorization_count();
  const auto par = build(PdeKind::parabolic, 3);
  const auto wave = build(PdeKind::wave, 3);
  const auto ell = build(PdeKind::elliptic, 3);
  CHECK(par->factorizations() == 1);
  CHECK(wave->factorizations() == 2);
  CHECK(ell->factorizations() == 1);
  const int after_build = factorization_count();
  CHECK(after_build - before == 4);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 3; ++t) {
    const auto u = testutil::random_like(par->zero_control(), rng);
    (void)par->adjoint(par->apply_linear(u));
    (void)wave->adjoint(wave->apply_linear(u));
  }
  CHECK(factorization_count() == after_build);
}

TEST_CASE("shape mismatches are rejected") {
  const auto op = build(PdeKind::parabolic, 3, Rect{0, 0.5, 0, 0.5});
  CHECK_THROWS_AS(op->apply_linear(op->zero_state()), DimensionError);
  CHECK_THROWS_AS(op->adjoint(op->zero_control()), DimensionError);
  const SpaceTimeField short_u(NodeSet::control, 2, op->mask().count());
  CHECK_THROWS_AS(op->apply_linear(short_u), DimensionError);
  ForcingData bad;
  bad.initial.assign(3, 1.0);
  CHECK_THROWS_AS(op->forward(op->zero_control(), &bad), DimensionError);
  CHECK_THROWS_AS(build(PdeKind::wave, 3, Rect{}, 1.0, 1.0), ConfigError);
}

TEST_CASE("snapshot export") {
  const auto op = build(PdeKind::parabolic, 2, Rect{0, 0.5, 0, 0.5}, 1.0, 0.5);
  const auto dir = std::filesystem::temp_directory_path() / "ocp_snapshot_test";
  std::filesystem::remove_all(dir);
  SpaceTimeField y = op->zero_state();
  y.fill(2.5);
  export_snapshots(op->grid(), op->mask(), y, dir.string(), "y");
  export_snapshots(op->grid(), op->mask(), op->zero_control(), dir.string(), "u");
  int files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    (void)e;
    ++files;
  }
  CHECK(files == 4);
  std::ifstream f(dir / "y_2.txt");
  std::string header;
  std::getline(f, header);
  CHECK(header == "x1 x2 value");
  int lines = 0;
  double x1, x2, v;
  while (f >> x1 >> x2 >> v) {
    CHECK(v == 2.5);
    ++lines;
  }
  CHECK(lines == 9);
  std::filesystem::remove_all(dir);
}
