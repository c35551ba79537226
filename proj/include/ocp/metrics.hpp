#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ocp/admm.hpp"
#include "ocp/field.hpp"
#include "ocp/problems.hpp"

namespace ocp {

struct RunReport {
  std::string problem;
  int mesh = 0;
  std::string algorithm;
  int outer_iters = 0;
  double mean_cg = 0.0;
  int max_cg = 0;
  double reldis = 0.0;
  double obj = 0.0;
  std::optional<double> err_u;
  std::optional<double> err_y;
  bool converged = false;
  double beta = 0.0;
  double seconds = 0.0;
  std::vector<IterationRecord> history;
};

struct TrackingMetrics {
  double reldis = 0.0;
  double obj = 0.0;
};

/// RelDis = ||y - y_d||^2 / ||y_d||^2 and Obj = 0.5 ||y - y_d||^2 + alpha/2 ||u||^2.
TrackingMetrics reldis_obj(const SpaceTimeField& y, const SpaceTimeField& target, const SpaceTimeField& u,
                           double alpha, const FieldGeometry& state_geom, const FieldGeometry& control_geom);

struct ErrorNorms {
  std::optional<double> err_u;
  std::optional<double> err_y;
};

/// Distances to the interpolated exact control and state; empty where the problem has none.
ErrorNorms l2_errors(const SpaceTimeField& u, const SpaceTimeField& y, const ProblemSpec& spec, const PdeOperator& op);

/// Least-squares slope of log(error) against log(h).
double convergence_order(const std::vector<double>& errors, const std::vector<double>& widths);

/// (z^k, lambda^k) pairs of a run.
struct IterateHistory {
  double beta = 1.0;
  std::vector<SpaceTimeField> z;
  std::vector<SpaceTimeField> lambda;
};

/// sqrt(beta ||z||^2 + ||lambda||^2 / beta)
double h_norm(const SpaceTimeField& z, const SpaceTimeField& lambda, double beta, const FieldGeometry& geom);

enum class RateClass { bounded, faster_than_bound, growing };
const char* to_string(RateClass c) noexcept;

struct RateDiagnostics {
  /// m_K = min over k <= K of ||v^k - v^{k+1}||_H^2, for K = 1..
  std::vector<double> min_step_sq;
  /// min over k <= K of ||e_k(u^{k+1})||^2
  std::vector<double> min_e_sq;
  /// K * m_K
  std::vector<double> scaled;
  double scaled_max = 0.0;
  RateClass classification = RateClass::bounded;
};

/// steps_sq[k] = ||v^k - v^{k+1}||_H^2; e_norms[k] = ||e_k(u^{k+1})||.
RateDiagnostics rate_diagnostics(const std::vector<double>& steps_sq, const std::vector<double>& e_norms);
/// Successive H-norm step sizes of a recorded iterate history.
std::vector<double> h_steps_sq(const IterateHistory& history, const FieldGeometry& geom);

inline constexpr const char* kReportCsvHeader =
    "mesh,algorithm,outer_iters,mean_cg,max_cg,reldis,obj,err_u,err_y,converged";
inline constexpr const char* kIterationCsvHeader = "k,inner_iters,e_prev,e_new,pi_s,d_s,obj";

std::string format_report_row(const RunReport& r);
std::string reports_to_csv(const std::vector<RunReport>& reports);
void emit_csv(const std::vector<RunReport>& reports, const std::string& path);
/// Parses the output of reports_to_csv; unknown algorithms and empty error cells are kept as given.
std::vector<RunReport> parse_report_csv(const std::string& text);

std::string iteration_log_csv(const std::vector<IterationRecord>& history);
void write_text(const std::string& path, const std::string& text);

}  // namespace ocp
