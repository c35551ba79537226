#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "ocp/error.hpp"
#include "ocp/metrics.hpp"
#include "test_util.hpp"

using namespace ocp;

namespace {

SpaceTimeField field_of(std::initializer_list<double> v, NodeSet set = NodeSet::domain) {
  SpaceTimeField f(set, 1, static_cast<int>(v.size()));
  std::copy(v.begin(), v.end(), f.values().begin());
  return f;
}

RunReport sample_report(int mesh, bool with_errors) {
  RunReport r;
  r.mesh = mesh;
  r.algorithm = "fixed(1e-04)";
  r.outer_iters = 18;
  r.mean_cg = 11.6667;
  r.max_cg = 19;
  r.reldis = 7.7125e-7;
  r.obj = 3.449e-7;
  if (with_errors) {
    r.err_u = 1.7894e-2;
    r.err_y = 3.639e-5;
  }
  r.converged = with_errors;
  return r;
}

}  // namespace

TEST_CASE("tracking metrics on a hand example") {
  const SparseMatrix id = SparseMatrix::identity(2);
  const SparseMatrix half = SparseMatrix::diagonal(std::vector<double>{0.5, 0.5});
  const FieldGeometry gs{&id, 1.0}, gc{&half, 2.0};
  const TrackingMetrics m = reldis_obj(field_of({1, 2}), field_of({1, 0}), field_of({3, 4}, NodeSet::control), 0.1,
                                       gs, gc);
  CHECK(m.reldis == doctest::Approx(4.0));
  CHECK(m.obj == doctest::Approx(0.5 * 4 + 0.05 * 25));
  CHECK_THROWS_AS(reldis_obj(field_of({1, 2}), field_of({0, 0}), field_of({0, 0}), 1, gs, gc), std::domain_error);
  CHECK_THROWS_AS(reldis_obj(field_of({1}), field_of({0, 0}), field_of({0, 0}), 1, gs, gc), DimensionError);
}

TEST_CASE("tracking metrics do not depend on the node ordering") {
  std::mt19937_64 rng(21);
  const int n = 6;
  std::vector<double> w = testutil::random_vector(n, rng);
  for (double& x : w) x = 1.5 + x;
  const SparseMatrix m = SparseMatrix::diagonal(w);
  std::vector<int> perm{3, 0, 5, 1, 4, 2};
  std::vector<double> pw(n);
  for (int j = 0; j < n; ++j) pw[static_cast<std::size_t>(j)] = w[static_cast<std::size_t>(perm[static_cast<std::size_t>(j)])];
  const SparseMatrix pm = SparseMatrix::diagonal(pw);
  SpaceTimeField y(NodeSet::domain, 3, n), yd(NodeSet::domain, 3, n), u(NodeSet::control, 3, n);
  y = testutil::random_like(y, rng);
  yd = testutil::random_like(yd, rng);
  u = testutil::random_like(u, rng);
  auto permute = [&](const SpaceTimeField& f) {
    SpaceTimeField g = f;
    for (int l = 0; l < f.levels(); ++l)
      for (int j = 0; j < n; ++j) g.level(l)[static_cast<std::size_t>(j)] = f.level(l)[static_cast<std::size_t>(perm[static_cast<std::size_t>(j)])];
    return g;
  };
  const auto a = reldis_obj(y, yd, u, 0.3, {&m, 0.5}, {&m, 0.5});
  const auto b = reldis_obj(permute(y), permute(yd), permute(u), 0.3, {&pm, 0.5}, {&pm, 0.5});
  CHECK(a.reldis == doctest::Approx(b.reldis).epsilon(1e-14));
  CHECK(a.obj == doctest::Approx(b.obj).epsilon(1e-14));
}

TEST_CASE("convergence order") {
  CHECK(convergence_order({4e-2, 1e-2, 2.5e-3}, {0.1, 0.05, 0.025}) == doctest::Approx(2.0));
  CHECK(convergence_order({1, 0.5}, {1, 0.5}) == doctest::Approx(1.0));
  // reference control and state errors of the parabolic example, h = 2^-5..2^-8
  const std::vector<double> hs{1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256};
  const double su = convergence_order({1.8421e-2, 4.6767e-3, 1.1715e-3, 2.9013e-4}, hs);
  const double sy = convergence_order({3.6426e-5, 8.6088e-6, 2.1106e-6, 4.9269e-7}, hs);
  CHECK(su == doctest::Approx(1.99627).epsilon(1e-4));
  CHECK(sy == doctest::Approx(2.06526).epsilon(1e-4));
  CHECK_THROWS_AS(convergence_order({1}, {1}), std::invalid_argument);
  CHECK_THROWS_AS(convergence_order({1, 2}, {1}), DimensionError);
  CHECK_THROWS_AS(convergence_order({1, 0}, {1, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(convergence_order({1, 2}, {0.5, 0.5}), std::invalid_argument);
}

TEST_CASE("H-norm and step history") {
  const SparseMatrix id = SparseMatrix::identity(1);
  const FieldGeometry g{&id, 1.0};
  CHECK(h_norm(field_of({1}), field_of({2}), 4.0, g) == doctest::Approx(std::sqrt(4.0 + 1.0)));
  IterateHistory h;
  h.beta = 4.0;
  h.z = {field_of({0}), field_of({1}), field_of({1})};
  h.lambda = {field_of({0}), field_of({2}), field_of({4})};
  const auto steps = h_steps_sq(h, g);
  REQUIRE(steps.size() == 2);
  CHECK(steps[0] == doctest::Approx(5.0));
  CHECK(steps[1] == doctest::Approx(1.0));
  h.lambda.pop_back();
  CHECK_THROWS_AS(h_steps_sq(h, g), DimensionError);
}

TEST_CASE("rate diagnostics classify step sequences") {
  std::vector<double> sublinear, fast, growing;
  for (int k = 1; k <= 40; ++k) {
    sublinear.push_back(1.0 / k);
    fast.push_back(std::pow(0.5, k));
    growing.push_back(k <= 20 ? 1.0 / (k * k) : 1.0);
  }
  const auto a = rate_diagnostics(sublinear, {});
  CHECK(a.classification == RateClass::bounded);
  CHECK(a.scaled.back() == doctest::Approx(1.0));
  CHECK(rate_diagnostics(fast, {}).classification == RateClass::faster_than_bound);
  // a sequence whose running minimum stalls is not o(1/k), so K m_K grows linearly
  CHECK(rate_diagnostics(std::vector<double>(41, 1e-3), {}).classification == RateClass::growing);
  const auto d = rate_diagnostics(growing, {3, 1, 2});
  CHECK(d.min_step_sq.back() == doctest::Approx(1.0 / 400));
  CHECK(d.min_e_sq == std::vector<double>{9, 1, 1});
  for (std::size_t k = 1; k < d.min_step_sq.size(); ++k) CHECK(d.min_step_sq[k] <= d.min_step_sq[k - 1]);
  CHECK(std::string(to_string(RateClass::faster_than_bound)) == "faster_than_bound");
}

TEST_CASE("report CSV round trip") {
  const std::vector<RunReport> in{sample_report(5, true), sample_report(6, false)};
  const std::string csv = reports_to_csv(in);
  CHECK(csv.rfind(std::string(kReportCsvHeader) + "\n", 0) == 0);
  CHECK(format_report_row(in[1]) == "6,fixed(1e-04),18,11.6667,19,7.7125e-07,3.449e-07,,,false");
  const auto out = parse_report_csv(csv);
  REQUIRE(out.size() == 2);
  CHECK(out[0].mesh == 5);
  CHECK(out[0].algorithm == "fixed(1e-04)");
  CHECK(out[0].outer_iters == 18);
  CHECK(out[0].mean_cg == doctest::Approx(11.6667));
  CHECK(out[0].max_cg == 19);
  CHECK(out[0].reldis == doctest::Approx(7.7125e-7));
  CHECK(*out[0].err_u == doctest::Approx(1.7894e-2));
  CHECK(out[0].converged);
  CHECK(!out[1].err_u);
  CHECK(!out[1].err_y);
  CHECK(!out[1].converged);
  CHECK(reports_to_csv(out) == csv);

  CHECK_THROWS_AS(parse_report_csv("mesh,algo\n"), IoError);
  CHECK_THROWS_AS(parse_report_csv(std::string(kReportCsvHeader) + "\n5,adaptive,1,2\n"), IoError);
  CHECK_THROWS_AS(parse_report_csv(std::string(kReportCsvHeader) + "\n5,adaptive,x,1,1,1,1,,,true\n"), IoError);
  CHECK_THROWS_AS(parse_report_csv(std::string(kReportCsvHeader) + "\n5,adaptive,1,1,1,1,1,,,yes\n"), IoError);
}

TEST_CASE("non-converged rows keep NaN metrics readable") {
  RunReport r = sample_report(7, false);
  r.reldis = std::numeric_limits<double>::quiet_NaN();
  const auto back = parse_report_csv(reports_to_csv({r}));
  REQUIRE(back.size() == 1);
  CHECK(std::isnan(back[0].reldis));
}

TEST_CASE("iteration log") {
  IterationRecord a;
  a.k = 1;
  a.inner_iters = 3;
  a.e_prev = 1.0;
  a.e_new = 0.25;
  a.pi_s = std::numeric_limits<double>::quiet_NaN();
  a.d_s = std::numeric_limits<double>::quiet_NaN();
  a.obj = 2.0;
  IterationRecord b = a;
  b.k = 2;
  b.pi_s = 0.5;
  b.d_s = 0.125;
  const std::string log = iteration_log_csv({a, b});
  CHECK(log == std::string(kIterationCsvHeader) + "\n1,3,1,0.25,,,2\n2,3,1,0.25,0.5,0.125,2\n");
  CHECK_THROWS_AS(write_text("/nonexistent_dir/x.csv", "x"), IoError);
}
