#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ocp/driver.hpp"
#include "ocp/error.hpp"
#include "ocp/metrics.hpp"

namespace py = pybind11;
using namespace ocp;

namespace {

py::array_t<double> field_array(const SpaceTimeField& f) {
  py::array_t<double> a({f.levels(), f.nodes()});
  std::copy(f.values().begin(), f.values().end(), a.mutable_data());
  return a;
}

py::dict report_dict(const RunReport& r) {
  py::dict d;
  d["problem"] = r.problem;
  d["mesh"] = r.mesh;
  d["algorithm"] = r.algorithm;
  d["outer_iters"] = r.outer_iters;
  d["mean_cg"] = r.mean_cg;
  d["max_cg"] = r.max_cg;
  d["reldis"] = r.reldis;
  d["obj"] = r.obj;
  d["err_u"] = r.err_u ? py::cast(*r.err_u) : py::none();
  d["err_y"] = r.err_y ? py::cast(*r.err_y) : py::none();
  d["converged"] = r.converged;
  d["beta"] = r.beta;
  d["seconds"] = r.seconds;
  py::list hist;
  for (const auto& h : r.history) {
    py::dict e;
    e["k"] = h.k;
    e["inner_iters"] = h.inner_iters;
    e["e_prev"] = h.e_prev;
    e["e_new"] = h.e_new;
    e["pi_s"] = h.pi_s;
    e["d_s"] = h.d_s;
    e["obj"] = h.obj;
    e["h_step_sq"] = h.h_step_sq;
    hist.append(e);
  }
  d["history"] = hist;
  return d;
}

template <class T>
py::array_t<T> to_array(std::span<const T> v) {
  py::array_t<T> a(static_cast<py::ssize_t>(v.size()));
  T* out = a.mutable_data();
  for (std::size_t j = 0; j < v.size(); ++j) out[j] = v[j];
  return a;
}

py::tuple csr(const SparseMatrix& m) {
  return py::make_tuple(to_array(m.values()), to_array(m.col_indices()), to_array(m.row_offsets()),
                        py::make_tuple(m.rows(), m.cols()));
}

AdmmConfig admm_from(const ProblemSpec& spec, std::optional<double> beta, std::optional<double> tol,
                     const std::string& inner_mode, std::optional<int> max_outer, std::optional<double> alpha) {
  RunConfig rc;
  rc.beta = beta;
  rc.tol = tol;
  rc.inner_mode = parse_inner_mode(inner_mode);
  rc.max_outer = max_outer;
  ProblemSpec s = spec;
  if (alpha) s.alpha = *alpha;
  return resolve_admm(s, rc);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Inexact ADMM for box-constrained optimal control of PDEs";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<StagnationError>(m, "StagnationError", PyExc_RuntimeError);
  py::register_exception<NotSpdError>(m, "NotSpdError", PyExc_RuntimeError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<ProblemSpec>(m, "Problem")
      .def_readonly("name", &ProblemSpec::name)
      .def_property_readonly("kind", [](const ProblemSpec& p) { return std::string(to_string(p.kind)); })
      .def_readonly("alpha", &ProblemSpec::alpha)
      .def_readonly("lower", &ProblemSpec::lower)
      .def_readonly("upper", &ProblemSpec::upper)
      .def_readonly("final_time", &ProblemSpec::final_time)
      .def_readonly("default_beta", &ProblemSpec::default_beta)
      .def_readonly("default_tol", &ProblemSpec::default_tol)
      .def_property_readonly("omega", [](const ProblemSpec& p) {
        return py::make_tuple(p.omega.x1_lo, p.omega.x1_hi, p.omega.x2_lo, p.omega.x2_hi);
      })
      .def("__repr__", [](const ProblemSpec& p) { return "<Problem " + p.name + ">"; });

  m.def("example", py::overload_cast<const std::string&>(&make_example), py::arg("name"),
        "Built-in problem by name: 'example1'..'example4' or '1'..'4'.");
  m.def("custom_problem", &make_custom_problem, py::arg("keys"),
        "Problem from custom keys such as {'kind': 'parabolic', 'target': 'sin(pi*x1)'}.");

  m.def(
      "solve",
      [](const ProblemSpec& spec, int mesh, std::optional<double> beta, std::optional<double> tol,
         const std::string& inner_mode, std::optional<int> max_outer, std::optional<double> alpha,
         std::optional<double> tau) {
        ProblemSpec s = spec;
        if (alpha) s.alpha = *alpha;
        const AdmmConfig cfg = admm_from(s, beta, tol, inner_mode, max_outer, std::nullopt);
        SolveOutput out;
        {
          py::gil_scoped_release release;
          out = solve(s, mesh, cfg, tau);
        }
        py::dict d = report_dict(out.report);
        d["u"] = field_array(out.result.state.u);
        d["z"] = field_array(out.result.state.z);
        d["lam"] = field_array(out.result.state.lambda);
        d["y"] = field_array(out.state);
        d["target"] = field_array(out.problem.target);
        return d;
      },
      py::arg("problem"), py::arg("mesh") = 5, py::arg("beta") = py::none(), py::arg("tol") = py::none(),
      py::arg("inner_mode") = "adaptive", py::arg("max_outer") = py::none(), py::arg("alpha") = py::none(),
      py::arg("tau") = py::none(),
      "Runs the ADMM with inner CG; returns the report with u, z, lam, y and target as (levels, nodes) arrays.");

  m.def(
      "run_config",
      [](const std::string& text) {
        RunReport r;
        {
          py::gil_scoped_release release;
          r = run(parse_config(text));
        }
        return report_dict(r);
      },
      py::arg("text"), "Runs a key = value configuration and writes its outputs.");

  m.def(
      "reproduce",
      [](int table, int max_i, int workers, const std::string& out_dir) {
        std::vector<RunReport> rs;
        {
          py::gil_scoped_release release;
          rs = reproduce(table, max_i, workers, out_dir);
        }
        py::list l;
        for (const auto& r : rs) l.append(report_dict(r));
        return l;
      },
      py::arg("table"), py::arg("max_i") = 6, py::arg("workers") = 1, py::arg("out_dir") = "out");

  m.def(
      "oracle_check",
      [](const std::string& level) {
        py::list l;
        for (const auto& c : oracle_check(level)) l.append(py::make_tuple(c.name, c.passed, c.value, c.threshold));
        return l;
      },
      py::arg("level") = "all", "List of (name, passed, value, threshold).");

  m.def(
      "fem_matrices",
      [](int mesh, const std::string& family) {
        if (family != "p1" && family != "q1") throw ConfigError("family must be p1 or q1");
        const FemMatrices f = assemble(build_grid(mesh), family == "p1" ? ElementFamily::p1 : ElementFamily::q1);
        return py::make_tuple(csr(f.mass), csr(f.stiffness));
      },
      py::arg("mesh"), py::arg("family") = "p1",
      "Interior-node (mass, stiffness) matrices, each as (data, indices, indptr, shape).");

  m.def("sigma_from_beta", &sigma_from_beta, py::arg("beta"), py::arg("sigma_factor") = 0.99);
  m.def("convergence_order", &convergence_order, py::arg("errors"), py::arg("widths"));
  m.def("project", [](std::vector<double> v, double a, double b) { return nodal_project(v, a, b); }, py::arg("values"),
        py::arg("lower"), py::arg("upper"));
}
