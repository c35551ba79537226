#include "ocp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "ocp/error.hpp"

namespace ocp {

TrackingMetrics reldis_obj(const SpaceTimeField& y, const SpaceTimeField& target, const SpaceTimeField& u,
                           double alpha, const FieldGeometry& state_geom, const FieldGeometry& control_geom) {
  y.require_same_shape(target, "reldis_obj");
  const double track = state_geom.inner(y - target, y - target);
  const double ref = state_geom.inner(target, target);
  if (!(ref > 0.0)) throw std::domain_error("RelDis undefined for a zero target");
  const double reg = control_geom.inner(u, u);
  return {track / ref, 0.5 * track + 0.5 * alpha * reg};
}

ErrorNorms l2_errors(const SpaceTimeField& u, const SpaceTimeField& y, const ProblemSpec& spec,
                     const PdeOperator& op) {
  ErrorNorms e;
  if (spec.exact_control) {
    e.err_u = op.control_geometry().norm(u - interpolate(spec.exact_control, op, NodeSet::control));
  }
  if (spec.exact_state) {
    e.err_y = op.state_geometry().norm(y - interpolate(spec.exact_state, op, NodeSet::domain));
  }
  return e;
}

double convergence_order(const std::vector<double>& errors, const std::vector<double>& widths) {
  if (errors.size() != widths.size()) throw DimensionError("convergence_order: size mismatch");
  if (errors.size() < 2) throw std::invalid_argument("convergence_order: need at least two meshes");
  const double n = static_cast<double>(errors.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t j = 0; j < errors.size(); ++j) {
    if (!(errors[j] > 0.0) || !(widths[j] > 0.0)) throw std::invalid_argument("convergence_order: need positive data");
    const double x = std::log(widths[j]);
    const double y = std::log(errors[j]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw std::invalid_argument("convergence_order: widths must differ");
  return (n * sxy - sx * sy) / den;
}

double h_norm(const SpaceTimeField& z, const SpaceTimeField& lambda, double beta, const FieldGeometry& geom) {
  const double zz = geom.inner(z, z);
  const double ll = geom.inner(lambda, lambda);
  return std::sqrt(beta * zz + ll / beta);
}

const char* to_string(RateClass c) noexcept {
  switch (c) {
    case RateClass::bounded: return "bounded";
    case RateClass::faster_than_bound: return "faster_than_bound";
    case RateClass::growing: return "growing";
  }
  return "unknown";
}

RateDiagnostics rate_diagnostics(const std::vector<double>& steps_sq, const std::vector<double>& e_norms) {
  RateDiagnostics d;
  double m = std::numeric_limits<double>::infinity();
  double me = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < steps_sq.size(); ++k) {
    m = std::min(m, steps_sq[k]);
    d.min_step_sq.push_back(m);
    const double kk = static_cast<double>(k + 1);
    d.scaled.push_back(kk * m);
    d.scaled_max = std::max(d.scaled_max, kk * m);
  }
  for (double e : e_norms) {
    me = std::min(me, e * e);
    d.min_e_sq.push_back(me);
  }
  if (d.scaled.size() < 2 || d.scaled_max == 0.0) return d;
  const std::size_t half = d.scaled.size() / 2;
  const double early = *std::max_element(d.scaled.begin(), d.scaled.begin() + static_cast<long>(half));
  const double last = d.scaled.back();
  if (last < 0.01 * d.scaled_max) {
    d.classification = RateClass::faster_than_bound;
  } else if (last > 2.0 * early) {
    d.classification = RateClass::growing;
  }
  return d;
}

std::vector<double> h_steps_sq(const IterateHistory& history, const FieldGeometry& geom) {
  if (history.z.size() != history.lambda.size()) throw DimensionError("h_steps_sq: history size mismatch");
  std::vector<double> out;
  for (std::size_t k = 0; k + 1 < history.z.size(); ++k) {
    const double n = h_norm(history.z[k + 1] - history.z[k], history.lambda[k + 1] - history.lambda[k], history.beta,
                            geom);
    out.push_back(n * n);
  }
  return out;
}

namespace {

std::string g6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::string format_report_row(const RunReport& r) {
  std::string row = std::to_string(r.mesh) + "," + r.algorithm + "," + std::to_string(r.outer_iters) + "," +
                    g6(r.mean_cg) + "," + std::to_string(r.max_cg) + "," + g6(r.reldis) + "," + g6(r.obj) + ",";
  if (r.err_u) row += g6(*r.err_u);
  row += ",";
  if (r.err_y) row += g6(*r.err_y);
  row += ",";
  row += r.converged ? "true" : "false";
  return row;
}

std::string reports_to_csv(const std::vector<RunReport>& reports) {
  std::string out = std::string(kReportCsvHeader) + "\n";
  for (const auto& r : reports) out += format_report_row(r) + "\n";
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << text;
  if (!f) throw IoError("write to " + path + " failed");
}

void emit_csv(const std::vector<RunReport>& reports, const std::string& path) {
  write_text(path, reports_to_csv(reports));
}

std::vector<RunReport> parse_report_csv(const std::string& text) {
  std::stringstream ss(text);
  std::string line;
  if (!std::getline(ss, line) || line != kReportCsvHeader) throw IoError("report CSV: missing header");
  std::vector<RunReport> out;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    const auto c = split_commas(line);
    if (c.size() != 10) throw IoError("report CSV: expected 10 cells in '" + line + "'");
    RunReport r;
    try {
      r.mesh = std::stoi(c[0]);
      r.algorithm = c[1];
      r.outer_iters = std::stoi(c[2]);
      r.mean_cg = std::stod(c[3]);
      r.max_cg = std::stoi(c[4]);
      r.reldis = std::stod(c[5]);
      r.obj = std::stod(c[6]);
      if (!c[7].empty()) r.err_u = std::stod(c[7]);
      if (!c[8].empty()) r.err_y = std::stod(c[8]);
    } catch (const std::exception&) {
      throw IoError("report CSV: bad number in '" + line + "'");
    }
    if (c[9] != "true" && c[9] != "false") throw IoError("report CSV: bad converged flag in '" + line + "'");
    r.converged = c[9] == "true";
    out.push_back(std::move(r));
  }
  return out;
}

std::string iteration_log_csv(const std::vector<IterationRecord>& history) {
  std::string out = std::string(kIterationCsvHeader) + "\n";
  for (const auto& r : history) {
    out += std::to_string(r.k) + "," + std::to_string(r.inner_iters) + "," + g6(r.e_prev) + "," + g6(r.e_new) + "," +
           (std::isnan(r.pi_s) ? std::string() : g6(r.pi_s)) + "," + (std::isnan(r.d_s) ? std::string() : g6(r.d_s)) +
           "," + g6(r.obj) + "\n";
  }
  return out;
}

}  // namespace ocp
