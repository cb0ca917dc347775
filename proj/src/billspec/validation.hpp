#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "billspec/io.hpp"

namespace billspec {

struct SweepRow {
  double k = 0.0;
  Complex trace;
  Complex leading;  // 2q e^{ikL} e^{i pi sgn/4} |det|^{-1/2} B_0
  double relative_error = 0.0;
  OracleResult oracle;
};

// Oracle trace of deform(family, eps) with the window [L - offset/k, L - offset/k + 2 window/k]
// against the leading term of the transported orbit.
std::vector<SweepRow> trace_sweep(const DeformationFamily& family, const PeriodicOrbit& reference_orbit, double eps,
                                  const std::vector<double>& ks, double window, double offset,
                                  const OracleOptions& options = {});

enum class Scale { Quick, Default };

struct ValidationOptions {
  Scale scale = Scale::Default;
  std::uint64_t seed = 1;
  int threads = 1;
  std::vector<int> criteria;  // empty runs 1..8
  double tolerance_factor = 1.0;  // multiplies every accuracy bound
  bool timings = false;           // include measured seconds in JSON
};

struct Check {
  std::string name;
  double measured = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool pass = false;
  bool timing = false;
};

struct CriterionResult {
  int id = 0;
  std::string title;
  std::vector<Check> checks;
  io::Json details;
  std::string error;  // set when the criterion threw
  double seconds = 0.0;

  bool pass() const;
  // Name of the first failing check, or the error.
  std::string failure() const;
};

struct ValidationReport {
  std::vector<CriterionResult> rows;
  bool pass() const;
};

CriterionResult run_criterion(int id, const ValidationOptions& options);
ValidationReport run_validation(const ValidationOptions& options);

io::Json to_json(const CriterionResult& row, bool timings);
io::Json to_json(const ValidationReport& report, bool timings);
// One line per criterion.
std::string summary_table(const ValidationReport& report);

}  // namespace billspec
