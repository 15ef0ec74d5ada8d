#pragma once

#include "mixedcurv/euler_lagrange.hpp"

namespace mixedcurv {

// One verification record: `value` is the residual/quantity measured,
// `tol` the threshold it was held against (0 for informational records,
// which always pass), `detail` a human-readable route description.
struct CheckRecord {
  std::string name;
  std::string detail;
  double value = 0;
  double tol = 0;
  bool pass = true;
};

// Machine-readable run report shared by all CLI subcommands.  Serialization
// is deterministic for fixed inputs and seed; the timing field is the only
// part that varies between identical runs.
struct RunReport {
  std::string engine_version;
  std::string command;
  std::string model;
  std::map<std::string, double> params;
  double tol = 0;
  unsigned seed = 0;
  int grid = 0;
  std::vector<CheckRecord> checks;
  std::map<std::string, double> constants;
  std::vector<std::string> notes;
  double timing_ms = 0;

  bool all_pass() const;
};

extern const char* kEngineVersion;

// Subcommand drivers.  All throw ModelError on precondition violations
// (bad variant, missing family, non-closed model where a closed one is
// required); those surface as usage errors in the CLI.
RunReport run_evaluate(const Model& m, const double* coords,
                       const std::string& quantity, double tol);
RunReport run_check_identities(const Model& m, int samples, unsigned seed,
                               double tol);
RunReport run_integrate(const Model& m, const GridSpec& grid,
                        const std::string& functional, double tol);
RunReport run_variation_check(const Model& m, const MetricFamily& fam,
                              const GridSpec& grid, double step, double tol,
                              unsigned seed);
RunReport run_el_residual(const Model& m, const GridSpec& grid,
                          const std::string& variant, double tol);
RunReport run_full_report(const Model& m, const GridSpec& grid, int samples,
                          unsigned seed, double tol);

// Engine value matching a builtin reference quantity at a point, when the
// quantity has an engine route; returns false when it is reference-only.
bool engine_quantity(const Model& m, const std::string& name,
                     const double* coords, double& out);

std::string to_json(const RunReport& rep);
std::string to_text(const RunReport& rep);

}  // namespace mixedcurv
