#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "ocp/driver.hpp"
#include "ocp/error.hpp"

namespace {

void print_report(const ocp::RunReport& r) {
  std::printf("%s i=%d %s: %s after %d outer iterations, CG mean/max %.2f/%d\n", r.problem.c_str(), r.mesh,
              r.algorithm.c_str(), r.converged ? "converged" : "NOT converged", r.outer_iters, r.mean_cg, r.max_cg);
  std::printf("  RelDis %.4e  Obj %.4e", r.reldis, r.obj);
  if (r.err_u) std::printf("  err_u %.4e", *r.err_u);
  if (r.err_y) std::printf("  err_y %.4e", *r.err_y);
  std::printf("  (%.2f s)\n", r.seconds);
}

int split_assignment(const std::string& s, std::string& key, std::string& value) {
  const auto eq = s.find('=');
  if (eq == std::string::npos) return 1;
  key = s.substr(0, eq);
  value = s.substr(eq + 1);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inexact ADMM with inner CG for control-constrained optimal control"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  bool snapshots = false;
  auto* run_cmd = app.add_subcommand("run", "solve one configuration");
  run_cmd->add_option("--config", config_path, "key-value config file");
  run_cmd->add_option("--set", overrides, "extra key=value assignment, applied after the file");
  run_cmd->add_option("--out", out_dir, "output directory (overrides output.dir)");
  run_cmd->add_flag("--snapshots", snapshots, "write per-level field tables");

  int table = 0;
  int max_i = 6;
  int workers = 1;
  std::string table_out = "out";
  auto* rep_cmd = app.add_subcommand("reproduce", "run the row grid of one table");
  rep_cmd->add_option("--table", table, "table number 1..6")->required();
  rep_cmd->add_option("--max-i", max_i, "finest mesh exponent");
  rep_cmd->add_option("--out", table_out, "output directory");
  rep_cmd->add_option("--workers", workers, "concurrent rows");

  std::string level = "all";
  auto* orc_cmd = app.add_subcommand("oracle-check", "run verification oracles");
  orc_cmd->add_option("--level", level, "linalg, adjoint, subproblem or all");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      ocp::RunConfig cfg = config_path.empty() ? ocp::RunConfig{} : ocp::load_config(config_path);
      for (const auto& s : overrides) {
        std::string k, v;
        if (split_assignment(s, k, v) != 0) throw ocp::ConfigError("--set expects key=value, got '" + s + "'");
        cfg.set(k, v);
      }
      if (!out_dir.empty()) cfg.output_dir = out_dir;
      if (snapshots) cfg.snapshots = true;
      const ocp::RunReport r = ocp::run(cfg);
      print_report(r);
      return r.converged ? 0 : 2;
    }
    if (*rep_cmd) {
      const auto reports = ocp::reproduce(table, max_i, workers, table_out);
      for (const auto& r : reports) print_report(r);
      std::printf("wrote %s/table%d.csv\n", table_out.c_str(), table);
      return 0;
    }
    if (*orc_cmd) {
      const auto checks = ocp::oracle_check(level);
      bool ok = true;
      for (const auto& c : checks) {
        std::printf("%s  %-55s %.3e (limit %.1e)\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.value, c.threshold);
        ok = ok && c.passed;
      }
      return ok ? 0 : 1;
    }
  } catch (const ocp::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
